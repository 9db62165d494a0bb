//! Word problem in a multiple HNN extension by Britton reduction, and the
//! Γ-word structure of pinch-free words.
//!
//! Words range over the full alphabet of a [`StandardPresentation`]: vertex
//! generators followed by stable letters. A pinch is a subword
//! `t^ε x t^-ε` with `x` free of stable letters and lying in the subgroup the
//! relation conjugates; replacing it by the other side strictly lowers the
//! number of stable letters. A word with no pinch is trivial only if it is
//! empty.

use thiserror::Error;

use crate::gamma::{analyze, GammaAnalysis, GammaGraph, Step};
use crate::presentation::StandardPresentation;
use crate::words::{free_reduce, max_power_prefix, max_power_suffix, power_of, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrittonError {
    #[error("word is not freely reduced or contains a pinch")]
    NotPinchFree,
    #[error("cannot push a vertex power of exponent {exponent} across a stable letter with outgoing label {label}")]
    NormalizationBlocked { exponent: i64, label: i64 },
    #[error("exponent overflow during normalization")]
    ExponentOverflow,
}

/// Letters of `w_g^k` for class `g`.
fn class_power(sp: &StandardPresentation, g: usize, k: i64) -> Word {
    sp.class(g).word().pow(k)
}

/// Replacement for `t_j^ε x t_j^-ε` when `x` is a suitable power, else `None`.
fn pinch_image(sp: &StandardPresentation, open: Letter, x: &[Letter]) -> Option<Word> {
    let j = sp.relation_of(open)?;
    let r = &sp.relations()[j];
    if !open.is_inverse() {
        // t w_g^{km} t^-1 = w_h^{kn}
        let e = power_of(x, sp.class(r.g).letters())?;
        (e % r.m == 0).then(|| class_power(sp, r.h, e / r.m * r.n))
    } else {
        // t^-1 w_h^{kn} t = w_g^{km}
        let e = power_of(x, sp.class(r.h).letters())?;
        (e % r.n == 0).then(|| class_power(sp, r.g, e / r.n * r.m))
    }
}

/// Performs the leftmost innermost pinch of a freely reduced word, returning
/// the freely reduced result, or `None` if the word has no pinch.
pub fn pinch_step(w: &Word, sp: &StandardPresentation) -> Option<Word> {
    let letters = w.letters();
    let mut prev: Option<usize> = None;
    for (i, &l) in letters.iter().enumerate() {
        if sp.relation_of(l).is_none() {
            continue;
        }
        if let Some(p) = prev {
            if letters[p] == l.inverse() {
                if let Some(img) = pinch_image(sp, letters[p], &letters[p + 1..i]) {
                    let out = letters[..p]
                        .iter()
                        .chain(img.letters())
                        .chain(&letters[i + 1..])
                        .copied();
                    return Some(Word::reduced(out));
                }
            }
        }
        prev = Some(i);
    }
    None
}

/// Reduced word for the same element with the fewest stable letters.
///
/// Single left-to-right pass: the output is kept freely reduced and
/// pinch-free, and each incoming stable letter is checked against the last
/// stable letter already emitted.
pub fn britton_reduce(w: &Word, sp: &StandardPresentation) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    let mut stables: Vec<usize> = Vec::new();
    for &l in w.letters() {
        push(&mut out, &mut stables, l, sp);
    }
    Word::from_letters(out)
}

fn push_vertex(out: &mut Vec<Letter>, stables: &mut Vec<usize>, l: Letter) {
    if out.last() == Some(&l.inverse()) {
        out.pop();
        if stables.last() == Some(&out.len()) {
            stables.pop();
        }
    } else {
        out.push(l);
    }
}

fn push(out: &mut Vec<Letter>, stables: &mut Vec<usize>, l: Letter, sp: &StandardPresentation) {
    if sp.relation_of(l).is_none() || out.last() == Some(&l.inverse()) {
        push_vertex(out, stables, l);
        return;
    }
    if let Some(&p) = stables.last() {
        if out[p] == l.inverse() {
            if let Some(img) = pinch_image(sp, out[p], &out[p + 1..]) {
                out.truncate(p);
                stables.pop();
                for &x in img.letters() {
                    push_vertex(out, stables, x);
                }
                return;
            }
        }
    }
    stables.push(out.len());
    out.push(l);
}

pub fn is_trivial(w: &Word, sp: &StandardPresentation) -> bool {
    britton_reduce(w, sp).is_empty()
}

pub fn are_equal(w1: &Word, w2: &Word, sp: &StandardPresentation) -> bool {
    is_trivial(&w1.mul(&w2.inverse()), sp)
}

pub fn is_pinch_free(w: &Word, sp: &StandardPresentation) -> bool {
    w.is_reduced() && pinch_step(w, sp).is_none()
}

// --------------------------------------------------------------- structure

/// Half-open letter range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaWordSpan {
    pub span: Span,
    pub path: Vec<Step>,
    pub clean: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremalSpan {
    pub span: Span,
    /// Start of `s2`; `s1` runs to the end of the apex.
    pub split: usize,
    pub apex: Span,
    /// Path of `s1`; `s2` follows its reverse.
    pub path: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub vertex_excursions: Vec<Span>,
    /// Maximal Γ-word spans, in order.
    pub gamma_words: Vec<GammaWordSpan>,
    pub extremal: Vec<ExtremalSpan>,
}

/// Stable-letter skeleton of a word: positions of stable letters, their
/// steps in Γ, and the excursion ranges between them (`T + 1` of them,
/// possibly empty).
struct Skeleton {
    pos: Vec<usize>,
    steps: Vec<Step>,
    gaps: Vec<Span>,
}

fn skeleton(w: &Word, sp: &StandardPresentation) -> Skeleton {
    let mut pos = Vec::new();
    let mut steps = Vec::new();
    for (i, &l) in w.letters().iter().enumerate() {
        if let Some(j) = sp.relation_of(l) {
            pos.push(i);
            steps.push(Step {
                edge: j,
                forward: !l.is_inverse(),
            });
        }
    }
    let mut gaps = Vec::with_capacity(pos.len() + 1);
    let mut s = 0;
    for &p in &pos {
        gaps.push(Span { start: s, end: p });
        s = p + 1;
    }
    gaps.push(Span {
        start: s,
        end: w.len(),
    });
    Skeleton { pos, steps, gaps }
}

struct Ctx<'a> {
    sp: &'a StandardPresentation,
    gamma: &'a GammaAnalysis,
    letters: &'a [Letter],
    sk: Skeleton,
}

impl Ctx<'_> {
    fn graph(&self) -> &GammaGraph {
        &self.gamma.graph
    }

    fn gap(&self, i: usize) -> &[Letter] {
        let s = self.sk.gaps[i];
        &self.letters[s.start..s.end]
    }

    fn class(&self, v: usize) -> &[Letter] {
        self.sp.class(v).letters()
    }

    /// Exponent of excursion `i` (between stable letters `i-1` and `i`) as a
    /// power of class `v`.
    fn gap_power(&self, i: usize, v: usize) -> Option<i64> {
        power_of(self.gap(i), self.class(v))
    }

    /// Stable letters `i` and `i+1` are joined within a Γ-word.
    fn linked(&self, i: usize) -> bool {
        let g = self.graph();
        let v = g.end(self.sk.steps[i]);
        v == g.start(self.sk.steps[i + 1]) && self.gap_power(i + 1, v).is_some()
    }

    fn clean(&self, s: Step) -> bool {
        let v = self.graph().start(s);
        self.gamma.components[self.gamma.component_of[v]].clean
    }

    /// Letter range covering stable letters `a..=b` plus the maximal power of
    /// the adjacent class at either end.
    fn span_of(&self, a: usize, b: usize) -> Span {
        let g = self.graph();
        let left = self.gap(a);
        let (_, ls) = max_power_suffix(left, self.class(g.start(self.sk.steps[a])));
        let right = self.gap(b + 1);
        let (_, rp) = max_power_prefix(right, self.class(g.end(self.sk.steps[b])));
        Span {
            start: self.sk.pos[a] - ls,
            end: self.sk.pos[b] + 1 + rp,
        }
    }
}

fn spans(w: &Word, sp: &StandardPresentation, gamma: &GammaAnalysis, check: bool) -> Decomposition {
    let sk = skeleton(w, sp);
    let ctx = Ctx {
        sp,
        gamma,
        letters: w.letters(),
        sk,
    };
    let t = ctx.sk.steps.len();
    let vertex_excursions = ctx
        .sk
        .gaps
        .iter()
        .copied()
        .filter(|s| !s.is_empty())
        .collect();

    let mut gamma_words = Vec::new();
    let mut a = 0;
    while a < t {
        let mut b = a;
        while b + 1 < t && ctx.linked(b) {
            b += 1;
        }
        let path = ctx.sk.steps[a..=b].to_vec();
        if check {
            // a backtrack whose arriving label is ±1 would have been a pinch
            for i in a..b {
                let (s, n) = (ctx.sk.steps[i], ctx.sk.steps[i + 1]);
                assert!(
                    n != s.reversed() || ctx.graph().in_label(s).abs() != 1,
                    "internal error: pinch-free word has a unit backtrack"
                );
            }
        }
        gamma_words.push(GammaWordSpan {
            span: ctx.span_of(a, b),
            clean: ctx.clean(path[0]),
            path,
        });
        a = b + 1;
    }

    let mut extremal: Vec<ExtremalSpan> = Vec::new();
    for c in 0..t.saturating_sub(1) {
        let (s, n) = (ctx.sk.steps[c], ctx.sk.steps[c + 1]);
        if n != s.reversed() || ctx.clean(s) || !ctx.linked(c) {
            continue;
        }
        // grow while the letters mirror and both inner excursions are powers
        let mut l = 1;
        while c >= l
            && c + 1 + l < t
            && ctx.sk.steps[c + 1 + l] == ctx.sk.steps[c - l].reversed()
            && ctx.linked(c - l)
            && ctx.linked(c + l)
        {
            l += 1;
        }
        let (first, last) = (c + 1 - l, c + l);
        let span = ctx.span_of(first, last);
        extremal.push(ExtremalSpan {
            span,
            split: ctx.sk.pos[c + 1],
            apex: ctx.sk.gaps[c + 1],
            path: ctx.sk.steps[first..=c].to_vec(),
        });
    }
    let all = extremal.clone();
    extremal.retain(|e| {
        !all
            .iter()
            .any(|o| o.span != e.span && o.span.contains(&e.span))
    });
    extremal.dedup_by(|a, b| a.span == b.span);

    Decomposition {
        vertex_excursions,
        gamma_words,
        extremal,
    }
}

/// Vertex excursions, maximal Γ-words and extremal subwords of a pinch-free
/// word.
pub fn decompose(w: &Word, sp: &StandardPresentation) -> Result<Decomposition, BrittonError> {
    if !is_pinch_free(w, sp) {
        return Err(BrittonError::NotPinchFree);
    }
    Ok(spans(w, sp, &analyze(sp), true))
}

/// Same span analysis as [`decompose`] but without requiring the word to be
/// pinch-free; extremal candidates may then overlap.
pub fn scan_spans(w: &Word, sp: &StandardPresentation) -> Decomposition {
    spans(w, sp, &analyze(sp), false)
}

/// An extremal span is normalized when it reads `τ w^k τ^-1` with `τ` made
/// of stable letters only.
fn is_normalized(w: &Word, sp: &StandardPresentation, e: &ExtremalSpan) -> bool {
    let letters = w.letters();
    (e.span.start..e.span.end)
        .filter(|i| *i < e.apex.start || *i >= e.apex.end)
        .all(|i| sp.relation_of(letters[i]).is_some())
}

/// Rewrites one extremal span into normalized form.
fn normalize_span(
    w: &Word,
    sp: &StandardPresentation,
    g: &GammaGraph,
    e: &ExtremalSpan,
) -> Result<Word, BrittonError> {
    let letters = w.letters();
    let inner = Word::from_letters(letters[e.span.start..e.span.end].to_vec());
    let sk = skeleton(&inner, sp);
    let l = e.path.len();
    debug_assert_eq!(sk.steps.len(), 2 * l);
    let gap = |i: usize| &inner.letters()[sk.gaps[i].start..sk.gaps[i].end];
    let power = |i: usize, v: usize| {
        power_of(gap(i), sp.class(v).letters()).expect("extremal excursions are class powers")
    };
    let cross = |exp: i64, s: Step| -> Result<i64, BrittonError> {
        let out = g.out_label(s);
        if exp % out != 0 {
            return Err(BrittonError::NormalizationBlocked {
                exponent: exp,
                label: out,
            });
        }
        (exp / out)
            .checked_mul(g.in_label(s))
            .ok_or(BrittonError::ExponentOverflow)
    };
    let add = |a: i64, b: i64| a.checked_add(b).ok_or(BrittonError::ExponentOverflow);

    // left half: push everything right across τ_1 .. τ_l, collecting the apex
    let mut left = power(0, g.start(e.path[0]));
    for i in 0..l {
        left = cross(left, e.path[i])?;
        left = add(left, power(i + 1, g.end(e.path[i])))?;
    }
    // right half: push left across τ_1^-1, then τ_2^-1, ..., up to the apex
    let mut right = power(2 * l, g.start(e.path[0]));
    for i in 0..l {
        right = cross(right, e.path[i])?;
        if i + 1 < l {
            right = add(right, power(2 * l - 1 - i, g.end(e.path[i])))?;
        }
    }
    let apex_class = g.end(e.path[l - 1]);
    let total = add(left, right)?;

    let mut out: Vec<Letter> = letters[..e.span.start].to_vec();
    for &s in &e.path {
        out.push(sp.stable_letter(s.edge, s.forward));
    }
    out.extend_from_slice(sp.class(apex_class).word().pow(total).letters());
    for &s in e.path.iter().rev() {
        out.push(sp.stable_letter(s.edge, !s.forward));
    }
    out.extend_from_slice(&letters[e.span.end..]);
    Ok(Word::from_letters(out))
}

/// Normalizes extremal subwords until every one reads `τ w^k τ^-1`.
///
/// The stable-letter sequence is unchanged and the element is preserved.
/// Pushing a vertex power across a stable letter needs the outgoing label to
/// divide the exponent; when it does not, `NormalizationBlocked` is returned.
pub fn normalize_extremal(w: &Word, sp: &StandardPresentation) -> Result<Word, BrittonError> {
    if !is_pinch_free(w, sp) {
        return Err(BrittonError::NotPinchFree);
    }
    let gamma = analyze(sp);
    let mut cur = w.clone();
    // each rewrite shortens the non-apex excursions or removes one
    for _ in 0..=w.len() + 1 {
        let d = spans(&cur, sp, &gamma, true);
        let Some(e) = d.extremal.iter().find(|e| !is_normalized(&cur, sp, e)) else {
            return Ok(cur);
        };
        let next = normalize_span(&cur, sp, &gamma.graph, e)?;
        if !next.is_reduced() || pinch_step(&next, sp).is_some() {
            return Err(BrittonError::NotPinchFree);
        }
        cur = next;
    }
    panic!("internal error: extremal normalization did not terminate");
}

/// Stable letters of a word, in order.
pub fn stable_sequence(w: &Word, sp: &StandardPresentation) -> Vec<Letter> {
    w.letters()
        .iter()
        .copied()
        .filter(|&l| sp.relation_of(l).is_some())
        .collect()
}

/// Normalizes after Britton reduction, so any word is accepted.
pub fn reduce_and_normalize(w: &Word, sp: &StandardPresentation) -> Result<Word, BrittonError> {
    normalize_extremal(&britton_reduce(&free_reduce(w), sp), sp)
}

//! Input presentations and their standard form.
//!
//! Two text formats are accepted. HNN mode:
//!
//! ```text
//! hnn
//! gens a b
//! rel t : a^2 -> b^3
//! ```
//!
//! Graph mode:
//!
//! ```text
//! graph
//! vertex v1 gens a
//! vertex v2 gens b
//! edge e : v1 a^2 -- v2 b^3
//! ```
//!
//! `rel t : u -> v` means `t u t^-1 = v`; an edge `e : v0 u -- v1 v` becomes
//! the relation `e u e^-1 = v` after wedging the vertex groups together.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::words::{
    canonical_detail, cyclic_reduce, free_reduce, smallest_period, Alphabet, CyclicWord, Letter,
    Word,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresentationError {
    #[error("line {line}, column {col}: syntax error: {msg}")]
    SyntaxError { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: exponent must be nonzero")]
    ZeroExponent { line: usize, col: usize },
    #[error("line {line}: edge word is empty or freely trivial")]
    EmptyEdgeWord { line: usize },
    #[error("line {line}: duplicate identifier `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown vertex `{id}`")]
    UnknownVertex { line: usize, id: String },
    #[error("line {line}, column {col}: unknown generator `{id}`")]
    UnknownGenerator { line: usize, col: usize, id: String },
    #[error("relation `{stable}`: edge word is trivial in the free group")]
    TrivialEdgeWord { stable: String },
}

type Result<T> = std::result::Result<T, PresentationError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnnRelation {
    pub stable: String,
    pub u: Word,
    pub v: Word,
    /// Source line, 0 when built programmatically.
    pub line: usize,
}

/// A multiple HNN extension of the free group on `generators`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnnInput {
    pub generators: Alphabet,
    pub relations: Vec<HnnRelation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexInput {
    pub id: String,
    /// Indices into the graph's generator alphabet.
    pub generators: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeInput {
    pub id: String,
    pub v0: usize,
    pub word0: Word,
    pub v1: usize,
    pub word1: Word,
    pub line: usize,
}

/// A graph of free groups with cyclic edge groups. Generator names are
/// globally unique: a name used by several vertices is renamed `name_vertex`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphInput {
    pub generators: Alphabet,
    pub vertices: Vec<VertexInput>,
    pub edges: Vec<EdgeInput>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Hnn(HnnInput),
    Graph(GraphInput),
}

impl Input {
    pub fn into_hnn(self) -> HnnInput {
        match self {
            Input::Hnn(h) => h,
            Input::Graph(g) => to_hnn(&g),
        }
    }
}

/// One relation `t w_g^m t^-1 = w_h^n` of a standard presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StdRelation {
    pub stable: String,
    pub g: usize,
    pub m: i64,
    pub h: usize,
    pub n: i64,
}

/// Canonical multiple HNN presentation over the independent set `classes`.
///
/// The alphabet lists the vertex generators followed by one stable letter per
/// relation, in relation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardPresentation {
    alphabet: Alphabet,
    vertex_generators: usize,
    classes: Vec<CyclicWord>,
    relations: Vec<StdRelation>,
    // per relation, (X, Y) with input u = X w_g^m X^-1 and v = Y w_h^n Y^-1
    conjugators: Vec<(Word, Word)>,
}

impl StandardPresentation {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn vertex_generators(&self) -> usize {
        self.vertex_generators
    }

    pub fn classes(&self) -> &[CyclicWord] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &CyclicWord {
        &self.classes[i]
    }

    pub fn relations(&self) -> &[StdRelation] {
        &self.relations
    }

    /// Alphabet index of the stable letter of relation `j`.
    pub fn stable_generator(&self, j: usize) -> usize {
        self.vertex_generators + j
    }

    /// Relation index of a stable letter, `None` for vertex generators.
    pub fn relation_of(&self, l: Letter) -> Option<usize> {
        l.generator().checked_sub(self.vertex_generators)
    }

    pub fn stable_letter(&self, j: usize, forward: bool) -> Letter {
        if forward {
            Letter::pos(self.stable_generator(j))
        } else {
            Letter::neg(self.stable_generator(j))
        }
    }

    /// True when every relation was already in standard form, so input words
    /// and standard words coincide.
    pub fn is_literal(&self) -> bool {
        self.conjugators
            .iter()
            .all(|(x, y)| x.is_empty() && y.is_empty())
    }

    /// Rewrites a word over the input alphabet (same letters as `alphabet`)
    /// into the standard stable letters: `t = Y t' X^-1`.
    pub fn from_input_word(&self, w: &Word) -> Word {
        self.substitute(w, |j| {
            let (x, y) = &self.conjugators[j];
            y.mul(&Word::letter(self.stable_letter(j, true)))
                .mul(&x.inverse())
        })
    }

    /// Inverse of [`from_input_word`](Self::from_input_word): `t' = Y^-1 t X`.
    pub fn to_input_word(&self, w: &Word) -> Word {
        self.substitute(w, |j| {
            let (x, y) = &self.conjugators[j];
            y.inverse()
                .mul(&Word::letter(self.stable_letter(j, true)))
                .mul(x)
        })
    }

    fn substitute(&self, w: &Word, image: impl Fn(usize) -> Word) -> Word {
        if self.is_literal() {
            return free_reduce(w);
        }
        let mut out = Word::identity();
        for &l in w.letters() {
            match self.relation_of(l) {
                None => out.push_reducing(l),
                Some(j) => {
                    let img = image(j);
                    let img = if l.is_inverse() { img.inverse() } else { img };
                    for &x in img.letters() {
                        out.push_reducing(x);
                    }
                }
            }
        }
        out
    }

    /// HNN-mode text that parses and normalizes back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("hnn\ngens");
        for i in 0..self.vertex_generators {
            s.push(' ');
            s.push_str(self.alphabet.name(i));
        }
        s.push('\n');
        for r in &self.relations {
            let g = self.classes[r.g].word().display(&self.alphabet).to_string();
            let h = self.classes[r.h].word().display(&self.alphabet).to_string();
            let _ = writeln!(s, "rel {} : ({g})^{} -> ({h})^{}", r.stable, r.m, r.n);
        }
        s
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Caret,
    Int(i64),
    Open,
    Close,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col0: usize,
}

impl<'a> Lexer<'a> {
    fn col(&self) -> usize {
        self.col0 + self.src[..self.pos].chars().count()
    }

    fn err(&self, msg: impl Into<String>) -> PresentationError {
        PresentationError::SyntaxError {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    /// Next token and its column.
    fn next(&mut self) -> Result<Option<(Tok<'a>, usize)>> {
        self.skip_ws();
        let col = self.col();
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok(None);
        };
        let tok = match c {
            '^' => {
                self.pos += 1;
                Tok::Caret
            }
            '(' => {
                self.pos += 1;
                Tok::Open
            }
            ')' => {
                self.pos += 1;
                Tok::Close
            }
            '-' | '+' | '0'..='9' => {
                let len = 1 + rest[1..]
                    .find(|ch: char| !ch.is_ascii_digit())
                    .unwrap_or(rest.len() - 1);
                let text = &rest[..len];
                let v: i64 = text
                    .parse()
                    .map_err(|_| self.err(format!("bad integer `{text}`")))?;
                self.pos += len;
                Tok::Int(v)
            }
            c if is_ident_start(c) => {
                let len = rest
                    .find(|ch: char| !is_ident_char(ch))
                    .unwrap_or(rest.len());
                self.pos += len;
                Tok::Ident(&rest[..len])
            }
            c => return Err(self.err(format!("unexpected character `{c}`"))),
        };
        Ok(Some((tok, col)))
    }

    fn peek(&mut self) -> Result<Option<Tok<'a>>> {
        let save = self.pos;
        let t = self.next()?.map(|(t, _)| t);
        self.pos = save;
        Ok(t)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '.'
}

fn is_ident(s: &str) -> bool {
    let mut it = s.chars();
    it.next().is_some_and(is_ident_start) && it.all(is_ident_char)
}

/// Parses a word literal. `resolve` maps a name to a generator index.
fn parse_word_with(
    text: &str,
    line: usize,
    col0: usize,
    resolve: &dyn Fn(&str) -> Option<usize>,
) -> Result<Word> {
    let mut lx = Lexer {
        src: text,
        pos: 0,
        line,
        col0,
    };
    let w = parse_seq(&mut lx, resolve, false)?;
    Ok(free_reduce(&w))
}

fn parse_seq(
    lx: &mut Lexer<'_>,
    resolve: &dyn Fn(&str) -> Option<usize>,
    nested: bool,
) -> Result<Word> {
    let mut out: Vec<Letter> = Vec::new();
    loop {
        let Some((tok, col)) = lx.next()? else {
            if nested {
                return Err(lx.err("unclosed `(`"));
            }
            return Ok(Word::from_letters(out));
        };
        let base = match tok {
            Tok::Ident(name) => {
                let g = resolve(name).ok_or_else(|| PresentationError::UnknownGenerator {
                    line: lx.line,
                    col,
                    id: name.to_string(),
                })?;
                Word::letter(Letter::pos(g))
            }
            Tok::Open => parse_seq(lx, resolve, true)?,
            Tok::Close if nested => return Ok(Word::from_letters(out)),
            Tok::Close => return Err(lx.err("unmatched `)`")),
            Tok::Caret | Tok::Int(_) => {
                return Err(PresentationError::SyntaxError {
                    line: lx.line,
                    col,
                    msg: "expected a generator or `(`".into(),
                })
            }
        };
        let mut e = 1i64;
        if lx.peek()? == Some(Tok::Caret) {
            lx.next()?;
            match lx.next()? {
                Some((Tok::Int(0), col)) => {
                    return Err(PresentationError::ZeroExponent { line: lx.line, col })
                }
                Some((Tok::Int(k), _)) => e = k,
                _ => return Err(lx.err("expected an integer exponent")),
            }
        }
        let b = if e < 0 { base.inverse() } else { base };
        for _ in 0..e.unsigned_abs() {
            out.extend_from_slice(b.letters());
        }
    }
}

/// Parses a word over the letters of `alphabet`, as typed on a command line.
/// The empty string is the identity.
pub fn parse_word(text: &str, alphabet: &Alphabet) -> Result<Word> {
    parse_word_with(text, 1, 1, &|s| alphabet.get(s))
}

/// A logical input line: number, text without comment, and column offset.
struct Line<'a> {
    no: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    fn err(&self, at: &str, msg: impl Into<String>) -> PresentationError {
        PresentationError::SyntaxError {
            line: self.no,
            col: self.col_of(at),
            msg: msg.into(),
        }
    }

    /// 1-based column of a subslice of `text`.
    fn col_of(&self, sub: &str) -> usize {
        let off = sub.as_ptr() as usize - self.text.as_ptr() as usize;
        self.text[..off].chars().count() + 1
    }

    fn words(&self) -> Vec<&'a str> {
        self.text.split_whitespace().collect()
    }
}

fn logical_lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let t = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            };
            (!t.trim().is_empty()).then_some(Line { no: i + 1, text: t })
        })
        .collect()
}

/// Splits `rest` at the first occurrence of `sep`.
fn split_at_sep<'a>(line: &Line<'a>, rest: &'a str, sep: &str) -> Result<(&'a str, &'a str)> {
    match rest.find(sep) {
        Some(k) => Ok((&rest[..k], &rest[k + sep.len()..])),
        None => Err(line.err(rest, format!("expected `{sep}`"))),
    }
}

/// `<kw> <id> : rest`; returns the id and the text after the colon.
fn header<'a>(line: &Line<'a>, kw: &str) -> Result<(&'a str, &'a str)> {
    let body = line.text.trim_start();
    let after_kw = body[kw.len()..].trim_start();
    let (id, rest) = split_at_sep(line, after_kw, ":")?;
    let id = id.trim();
    if !is_ident(id) {
        return Err(line.err(after_kw, format!("bad identifier `{id}`")));
    }
    Ok((id, rest))
}

fn edge_word(
    line: &Line<'_>,
    text: &str,
    resolve: &dyn Fn(&str) -> Option<usize>,
) -> Result<Word> {
    let w = parse_word_with(text, line.no, line.col_of(text), resolve)?;
    if w.is_empty() {
        return Err(PresentationError::EmptyEdgeWord { line: line.no });
    }
    Ok(w)
}

/// Parses a presentation file in either format.
pub fn parse(text: &str) -> Result<Input> {
    let lines = logical_lines(text);
    let Some(first) = lines.first() else {
        return Err(PresentationError::SyntaxError {
            line: 1,
            col: 1,
            msg: "empty input; expected `hnn` or `graph`".into(),
        });
    };
    match first.words().as_slice() {
        ["hnn"] => parse_hnn(&lines[1..]).map(Input::Hnn),
        ["graph"] => parse_graph(&lines[1..]).map(Input::Graph),
        _ => Err(first.err(first.text.trim_start(), "expected `hnn` or `graph`")),
    }
}

fn parse_hnn(lines: &[Line<'_>]) -> Result<HnnInput> {
    let mut generators = Alphabet::new();
    let mut stables: HashMap<String, usize> = HashMap::new();
    let mut relations = Vec::new();
    let mut saw_gens = false;
    for line in lines {
        let words = line.words();
        match words[0] {
            "gens" if !saw_gens => {
                saw_gens = true;
                for id in &words[1..] {
                    if !is_ident(id) {
                        return Err(line.err(id, format!("bad identifier `{id}`")));
                    }
                    if generators.insert(id).is_none() {
                        return Err(PresentationError::DuplicateId {
                            line: line.no,
                            id: id.to_string(),
                        });
                    }
                }
            }
            "rel" if saw_gens => {
                let (id, rest) = header(line, "rel")?;
                if generators.get(id).is_some() || stables.insert(id.to_string(), line.no).is_some() {
                    return Err(PresentationError::DuplicateId {
                        line: line.no,
                        id: id.to_string(),
                    });
                }
                let (lhs, rhs) = split_at_sep(line, rest, "->")?;
                let resolve = |s: &str| generators.get(s);
                let u = edge_word(line, lhs, &resolve)?;
                let v = edge_word(line, rhs, &resolve)?;
                relations.push(HnnRelation {
                    stable: id.to_string(),
                    u,
                    v,
                    line: line.no,
                });
            }
            "rel" => return Err(line.err(words[0], "`gens` line must come first")),
            other => return Err(line.err(other, format!("unexpected `{other}`"))),
        }
    }
    if !saw_gens {
        return Err(PresentationError::SyntaxError {
            line: lines.last().map_or(1, |l| l.no),
            col: 1,
            msg: "missing `gens` line".into(),
        });
    }
    Ok(HnnInput {
        generators,
        relations,
    })
}

fn parse_graph(lines: &[Line<'_>]) -> Result<GraphInput> {
    // first pass: vertices, so that clashes can be renamed before edges resolve
    let mut vertex_ids: HashMap<String, usize> = HashMap::new();
    let mut raw_vertices: Vec<(String, Vec<String>, usize)> = Vec::new();
    for line in lines {
        let words = line.words();
        match words[0] {
            "vertex" => {
                if words.len() < 3 || words[2] != "gens" {
                    return Err(line.err(line.text.trim_start(), "expected `vertex <id> gens <id>+`"));
                }
                let id = words[1];
                if !is_ident(id) {
                    return Err(line.err(id, format!("bad identifier `{id}`")));
                }
                if vertex_ids.insert(id.to_string(), raw_vertices.len()).is_some() {
                    return Err(PresentationError::DuplicateId {
                        line: line.no,
                        id: id.to_string(),
                    });
                }
                let mut gens: Vec<String> = Vec::new();
                for g in &words[3..] {
                    if !is_ident(g) {
                        return Err(line.err(g, format!("bad identifier `{g}`")));
                    }
                    if gens.iter().any(|x| x == g) {
                        return Err(PresentationError::DuplicateId {
                            line: line.no,
                            id: g.to_string(),
                        });
                    }
                    gens.push(g.to_string());
                }
                raw_vertices.push((id.to_string(), gens, line.no));
            }
            "edge" => {}
            other => return Err(line.err(other, format!("unexpected `{other}`"))),
        }
    }

    let mut uses: HashMap<&str, usize> = HashMap::new();
    for (_, gens, _) in &raw_vertices {
        for g in gens {
            *uses.entry(g.as_str()).or_default() += 1;
        }
    }
    let mut generators = Alphabet::new();
    let mut vertices = Vec::new();
    // local name -> global index, per vertex
    let mut local: Vec<HashMap<String, usize>> = Vec::new();
    for (id, gens, line) in &raw_vertices {
        let mut map = HashMap::new();
        let mut idx = Vec::new();
        for g in gens {
            let global = if uses[g.as_str()] > 1 {
                format!("{g}_{id}")
            } else {
                g.clone()
            };
            let i = generators
                .insert(&global)
                .ok_or_else(|| PresentationError::DuplicateId {
                    line: *line,
                    id: global.clone(),
                })?;
            map.insert(g.clone(), i);
            idx.push(i);
        }
        local.push(map);
        vertices.push(VertexInput {
            id: id.clone(),
            generators: idx,
        });
    }

    let mut edges = Vec::new();
    let mut edge_ids: HashMap<String, usize> = HashMap::new();
    for line in lines {
        if line.words()[0] != "edge" {
            continue;
        }
        let (id, rest) = header(line, "edge")?;
        if generators.get(id).is_some()
            || vertex_ids.contains_key(id)
            || edge_ids.insert(id.to_string(), line.no).is_some()
        {
            return Err(PresentationError::DuplicateId {
                line: line.no,
                id: id.to_string(),
            });
        }
        let (left, right) = split_at_sep(line, rest, "--")?;
        let side = |part: &str| -> Result<(usize, Word)> {
            let part = part.trim_start();
            let vlen = part.find(char::is_whitespace).unwrap_or(part.len());
            let vid = &part[..vlen];
            if vid.is_empty() {
                return Err(line.err(part, "expected a vertex id"));
            }
            let v = *vertex_ids
                .get(vid)
                .ok_or_else(|| PresentationError::UnknownVertex {
                    line: line.no,
                    id: vid.to_string(),
                })?;
            let map = &local[v];
            let w = edge_word(line, &part[vlen..], &|s| map.get(s).copied())?;
            Ok((v, w))
        };
        let (v0, word0) = side(left)?;
        let (v1, word1) = side(right)?;
        edges.push(EdgeInput {
            id: id.to_string(),
            v0,
            word0,
            v1,
            word1,
            line: line.no,
        });
    }
    Ok(GraphInput {
        generators,
        vertices,
        edges,
    })
}

/// Wedges the vertex groups into one free group; each edge becomes a relation
/// whose stable letter is named after the edge.
pub fn to_hnn(g: &GraphInput) -> HnnInput {
    HnnInput {
        generators: g.generators.clone(),
        relations: g
            .edges
            .iter()
            .map(|e| HnnRelation {
                stable: e.id.clone(),
                u: e.word0.clone(),
                v: e.word1.clone(),
                line: e.line,
            })
            .collect(),
    }
}

// ---------------------------------------------------------- normalization

/// Writes `u = X ρ^e X^-1` with `ρ` a canonical class representative.
fn class_form(u: &Word) -> Option<(CyclicWord, i64, Word)> {
    let (core, conj) = cyclic_reduce(u);
    if core.is_empty() {
        return None;
    }
    let p = smallest_period(core.letters());
    let root = Word::from_letters(core.letters()[..p].to_vec());
    let k = (core.len() / p) as i64;
    let (rep, sign, offset) = canonical_detail(&root);
    // rep is root (or root^-1) rotated left by `offset`, i.e. rep = α^-1 r α
    // with α the first `offset` letters of r; so r = α rep α^-1
    let r = if sign.value() > 0 { root } else { root.inverse() };
    let alpha = Word::from_letters(r.letters()[..offset].to_vec());
    let x = conj.mul(&alpha);
    Some((rep, k * sign.value(), x))
}

/// Canonicalizes an HNN presentation: every edge word becomes a power of a
/// primitive canonical representative, and representatives are deduplicated.
pub fn normalize(h: &HnnInput) -> Result<StandardPresentation> {
    let mut alphabet = h.generators.clone();
    let vertex_generators = alphabet.len();
    let mut classes: Vec<CyclicWord> = Vec::new();
    let mut index: HashMap<CyclicWord, usize> = HashMap::new();
    let mut relations = Vec::new();
    let mut conjugators = Vec::new();
    for r in &h.relations {
        let trivial = || PresentationError::TrivialEdgeWord {
            stable: r.stable.clone(),
        };
        let (gu, m, x) = class_form(&r.u).ok_or_else(trivial)?;
        let (gv, n, y) = class_form(&r.v).ok_or_else(trivial)?;
        let mut intern = |c: CyclicWord| {
            *index.entry(c.clone()).or_insert_with(|| {
                classes.push(c);
                classes.len() - 1
            })
        };
        let g = intern(gu);
        let hh = intern(gv);
        if alphabet.insert(&r.stable).is_none() {
            return Err(PresentationError::DuplicateId {
                line: r.line,
                id: r.stable.clone(),
            });
        }
        relations.push(StdRelation {
            stable: r.stable.clone(),
            g,
            m,
            h: hh,
            n,
        });
        conjugators.push((x, y));
    }
    Ok(StandardPresentation {
        alphabet,
        vertex_generators,
        classes,
        relations,
        conjugators,
    })
}

/// Parses and normalizes in one step.
pub fn load(text: &str) -> Result<StandardPresentation> {
    normalize(&parse(text)?.into_hnn())
}

//! Residual finiteness decision and very-unbalanced certificates.
//!
//! A group is residually finite exactly when every non-clean component of Γ
//! has a single embedded cycle with a unit loop product and unit labels on
//! the far ends of all edges hanging off it. Otherwise some vertex class `g`
//! admits `h g^m h^-1 = g^n` with `1, |m|, |n|` distinct and neither divided
//! relation holding; that tuple is the certificate, and every certificate is
//! checked with Britton reduction before it is returned.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::britton::is_trivial;
use crate::gamma::{
    analyze, in_product, reverse_path, ComponentReport, FailureEvidence, GammaAnalysis,
    GammaGraph, Local, Step,
};
use crate::presentation::StandardPresentation;
use crate::words::Word;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("no verified certificate found for the component containing vertex {vertex}")]
    CertificateSearchExhausted { vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub claim: String,
    pub holds: bool,
}

/// `h g^m h^-1 = g^n` with `g` a vertex word; words over the standard
/// presentation's alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VUCertificate {
    pub g: Word,
    pub h: Word,
    pub m: i64,
    pub n: i64,
    pub transcript: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsReport {
    /// `BS(p, q)` embeds.
    Explicit { p: i64, q: i64 },
    /// `BS(q, q·ratio)` embeds for some prime `q`.
    PrimeExistence { ratio: i64 },
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub residually_finite: bool,
    pub lerf: bool,
    pub gamma: GammaAnalysis,
    pub certificate: Option<VUCertificate>,
    pub bs_report: Option<BsReport>,
}

impl Verdict {
    pub fn components(&self) -> &[ComponentReport] {
        &self.gamma.components
    }
}

pub fn decide(sp: &StandardPresentation) -> Result<Verdict, CertifyError> {
    let gamma = analyze(sp);
    let residually_finite = gamma
        .components
        .iter()
        .all(|c| c.structure_ok != Some(false));
    let lerf = gamma.components.iter().all(|c| c.clean);
    let mut certificate = None;
    if !residually_finite {
        let mut first_err = None;
        for c in gamma.components.iter().filter(|c| c.structure_ok == Some(false)) {
            match build_certificate(c, &gamma, sp) {
                Ok(cert) => {
                    certificate = Some(cert);
                    break;
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        if certificate.is_none() {
            return Err(first_err.expect("a failing component exists"));
        }
    }
    let bs_report = certificate.as_ref().map(|c| bs_report(c.m, c.n));
    Ok(Verdict {
        residually_finite,
        lerf,
        gamma,
        certificate,
        bs_report,
    })
}

/// Largest word `g^m` the search is willing to Britton-check.
const MAX_POWER_LETTERS: u64 = 1 << 18;
/// Closed walks tried by the fallback enumeration.
const WALK_BUDGET: usize = 4000;

/// Searches closed paths of a failing component for a verified certificate.
///
/// Candidates come from the constructions that show such a component yields
/// a very unbalanced element (rotations of an unbalanced cycle, a cycle
/// conjugated out to a bad off-cycle end, combinations of two cycles), then
/// from an enumeration of closed non-backtracking walks.
pub fn build_certificate(
    c: &ComponentReport,
    gamma: &GammaAnalysis,
    sp: &StandardPresentation,
) -> Result<VUCertificate, CertifyError> {
    let g = &gamma.graph;
    let mut walks: Vec<Vec<Step>> = Vec::new();
    let unbalanced = c
        .unbalanced_cycle
        .clone()
        .expect("failing component is not clean");
    walks.extend(rotations(&unbalanced));
    if let Some(u) = &c.unique_cycle {
        walks.extend(rotations(&u.steps));
    }
    match &c.failure_evidence {
        Some(FailureEvidence::OffCycleLabel { vertex, .. }) => {
            let cycle = &c.unique_cycle.as_ref().expect("unicyclic").steps;
            walks.extend(conjugated_cycle_walks(g, c, cycle, *vertex));
        }
        Some(FailureEvidence::MultipleCycles { first, .. }) => {
            walks.extend(two_cycle_walks(g, c, first));
        }
        _ => {}
    }
    let mut tried = 0usize;
    for w in &walks {
        if let Some(cert) = try_walk(g, sp, w) {
            return Ok(cert);
        }
        tried += 1;
    }
    let bound = 4 * c.edges.len() + 4;
    let mut found = None;
    enumerate_walks(g, c, bound, WALK_BUDGET.saturating_sub(tried), &mut |w| {
        found = try_walk(g, sp, w);
        found.is_some()
    });
    found.ok_or(CertifyError::CertificateSearchExhausted {
        vertex: c.vertices[0],
    })
}

fn rotations(cycle: &[Step]) -> Vec<Vec<Step>> {
    (0..cycle.len())
        .map(|k| cycle[k..].iter().chain(&cycle[..k]).copied().collect())
        .collect()
}

/// Rotation of `cycle` starting at vertex `v`, if it passes through `v`.
fn rotate_to(g: &GammaGraph, cycle: &[Step], v: usize) -> Option<Vec<Step>> {
    let k = cycle.iter().position(|&s| g.start(s) == v)?;
    Some(cycle[k..].iter().chain(&cycle[..k]).copied().collect())
}

/// Shortest path (by BFS inside the component) from `from` to any vertex in
/// `targets`.
fn shortest_path(
    g: &GammaGraph,
    c: &ComponentReport,
    from: usize,
    targets: &[usize],
    avoid_edge: Option<usize>,
) -> Option<Vec<Step>> {
    let mut prev: Local<Option<Step>> = Local::new(&c.vertices, None);
    let mut seen = Local::new(&c.vertices, false);
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if targets.contains(&v) {
            let mut path = Vec::new();
            let mut x = v;
            while x != from {
                let s = prev[x].expect("visited");
                path.push(s);
                x = g.start(s);
            }
            path.reverse();
            return Some(path);
        }
        for s in g.steps_from(v) {
            if Some(s.edge) == avoid_edge || c.edges.binary_search(&s.edge).is_err() {
                continue;
            }
            let w = g.end(s);
            if !seen[w] {
                seen[w] = true;
                prev[w] = Some(s);
                queue.push_back(w);
            }
        }
    }
    None
}

fn concat(parts: &[&[Step]]) -> Vec<Step> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// `p γ p^-1` and `p γ² p^-1` from `x` to the cycle, both orientations.
fn conjugated_cycle_walks(
    g: &GammaGraph,
    c: &ComponentReport,
    cycle: &[Step],
    x: usize,
) -> Vec<Vec<Step>> {
    let on_cycle: Vec<usize> = cycle.iter().map(|&s| g.start(s)).collect();
    let Some(p) = shortest_path(g, c, x, &on_cycle, None) else {
        return Vec::new();
    };
    let y = p.last().map_or(x, |&s| g.end(s));
    let gamma = rotate_to(g, cycle, y).expect("path ends on the cycle");
    let back = reverse_path(&p);
    let mut out = Vec::new();
    for gm in [gamma.clone(), reverse_path(&gamma)] {
        out.push(concat(&[&p, &gm, &back]));
        out.push(concat(&[&p, &gm, &gm, &back]));
    }
    out
}

/// Closed paths built from an unbalanced cycle and a second embedded cycle.
fn two_cycle_walks(g: &GammaGraph, c: &ComponentReport, cycle: &[Step]) -> Vec<Vec<Step>> {
    let mut out = Vec::new();
    for (i, &e) in cycle.iter().enumerate() {
        // orient γ so that it leaves x through e with a non-unit end at x
        let gamma_x = if g.out_label(e).abs() != 1 {
            cycle[i..].iter().chain(&cycle[..i]).copied().collect::<Vec<_>>()
        } else if g.in_label(e).abs() != 1 {
            let rev = reverse_path(cycle);
            let j = rev.iter().position(|&s| s == e.reversed()).expect("reversed edge");
            rev[j..].iter().chain(&rev[..j]).copied().collect()
        } else {
            continue;
        };
        let x = g.start(gamma_x[0]);
        let Some(other) = cycle_avoiding(g, c, e.edge) else {
            continue;
        };
        let other_vs: Vec<usize> = other.iter().map(|&s| g.start(s)).collect();
        // walk from x through e along γ until γ' is met
        let mut stem = Vec::new();
        let mut meet = None;
        for &s in &gamma_x {
            stem.push(s);
            if other_vs.contains(&g.end(s)) {
                meet = Some(g.end(s));
                break;
            }
        }
        let stem = match meet {
            Some(_) => stem,
            None => {
                let gamma_vs: Vec<usize> = gamma_x.iter().map(|&s| g.start(s)).collect();
                // minimal bridge from γ to γ', then walk along γ to its start
                let mut best: Option<(Vec<Step>, usize)> = None;
                for &v in &gamma_vs {
                    if let Some(r) = shortest_path(g, c, v, &other_vs, None) {
                        if best.as_ref().is_none_or(|b| r.len() < b.0.len()) {
                            best = Some((r, v));
                        }
                    }
                }
                let Some((r, y)) = best else { continue };
                let mut prefix = Vec::new();
                for &s in &gamma_x {
                    prefix.push(s);
                    if g.end(s) == y {
                        break;
                    }
                }
                concat(&[&prefix, &r])
            }
        };
        let z = stem.last().map_or(x, |&s| g.end(s));
        let loop_z = rotate_to(g, &other, z).expect("stem ends on the second cycle");
        let back = reverse_path(&stem);
        for lp in [loop_z.clone(), reverse_path(&loop_z)] {
            let q = concat(&[&stem, &lp, &back]);
            let s = concat(&[&gamma_x, &q]);
            out.push(q);
            out.push(s);
        }
    }
    out
}

/// Some embedded cycle of the component that does not use edge `e`.
fn cycle_avoiding(g: &GammaGraph, c: &ComponentReport, e: usize) -> Option<Vec<Step>> {
    // a non-tree edge of a spanning forest of C - e closes such a cycle
    let mut parent: Local<Option<Step>> = Local::new(&c.vertices, None);
    let mut depth = Local::new(&c.vertices, usize::MAX);
    let mut tree_edge = Local::new(&c.edges, false);
    for &root in &c.vertices {
        if depth[root] != usize::MAX {
            continue;
        }
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for s in g.steps_from(v) {
                let w = g.end(s);
                if s.edge != e && depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    parent[w] = Some(s);
                    tree_edge[s.edge] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let f = *c.edges.iter().find(|&&f| f != e && !tree_edge[f])?;
    let ed = g.edge(f);
    let mut cycle = vec![Step {
        edge: f,
        forward: true,
    }];
    let (mut a, mut b) = (ed.head, ed.tail);
    let mut up = Vec::new();
    let mut down = Vec::new();
    while a != b {
        if depth[a] >= depth[b] {
            let s = parent[a]?;
            up.push(s.reversed());
            a = g.start(s);
        } else {
            let s = parent[b]?;
            down.push(s);
            b = g.start(s);
        }
    }
    cycle.extend(up);
    cycle.extend(down.into_iter().rev());
    Some(cycle)
}

/// Closed non-backtracking walks of length at most `bound`, from each vertex,
/// shortest first; `visit` returns true to stop.
fn enumerate_walks(
    g: &GammaGraph,
    c: &ComponentReport,
    bound: usize,
    budget: usize,
    visit: &mut dyn FnMut(&[Step]) -> bool,
) {
    let mut remaining = budget;
    for len in 1..=bound {
        for &v in &c.vertices {
            let mut path = Vec::with_capacity(len);
            if walk_dfs(g, v, v, len, &mut path, &mut remaining, visit) {
                return;
            }
            if remaining == 0 {
                return;
            }
        }
    }
}

fn walk_dfs(
    g: &GammaGraph,
    start: usize,
    v: usize,
    len: usize,
    path: &mut Vec<Step>,
    remaining: &mut usize,
    visit: &mut dyn FnMut(&[Step]) -> bool,
) -> bool {
    if *remaining == 0 {
        return false;
    }
    if path.len() == len {
        if v == start {
            *remaining -= 1;
            return visit(path);
        }
        return false;
    }
    let steps: Vec<Step> = g.steps_from(v).collect();
    for s in steps {
        if path.last().is_some_and(|&p| p == s.reversed()) {
            continue;
        }
        path.push(s);
        let stop = walk_dfs(g, start, g.end(s), len, path, remaining, visit);
        path.pop();
        if stop || *remaining == 0 {
            return stop;
        }
    }
    false
}

/// Stable-letter word of a walk.
fn walk_word(sp: &StandardPresentation, walk: &[Step]) -> Word {
    Word::reduced(walk.iter().map(|s| sp.stable_letter(s.edge, s.forward)))
}

/// Tries a closed walk `W` based at `a`: `W w_a^{out} W^-1 = w_a^{in}` read
/// backwards gives `(h, m, n) = (W, in, out)`, forwards `(W^-1, out, in)`.
fn try_walk(g: &GammaGraph, sp: &StandardPresentation, walk: &[Step]) -> Option<VUCertificate> {
    let a = g.start(walk[0]);
    let out: BigInt = walk.iter().map(|&s| BigInt::from(g.out_label(s))).product();
    let inn = in_product(g, walk);
    let w = walk_word(sp, walk);
    let base = sp.class(a).word();
    for (h, m, n) in [(w.clone(), &inn, &out), (w.inverse(), &out, &inn)] {
        let (Some(m), Some(n)) = (m.to_i64(), n.to_i64()) else {
            continue;
        };
        if m.unsigned_abs().max(n.unsigned_abs()).saturating_mul(base.len() as u64) > MAX_POWER_LETTERS {
            continue;
        }
        if let Some(c) = descend(sp, base, &h, m, n) {
            return Some(c);
        }
    }
    None
}

/// Tries `(g, h, m/k, n/k)` for divisors `k` of `gcd(m, n)`, largest first.
fn descend(sp: &StandardPresentation, g: &Word, h: &Word, m: i64, n: i64) -> Option<VUCertificate> {
    let d = m.gcd(&n).unsigned_abs();
    let mut divisors: Vec<u64> = (1..=d).filter(|k| d % k == 0).collect();
    divisors.reverse();
    for k in divisors {
        let k = k as i64;
        let (mk, nk) = (m / k, n / k);
        if !relation_holds(sp, g, h, mk, nk) {
            continue;
        }
        let mut cert = VUCertificate {
            g: g.clone(),
            h: h.clone(),
            m: mk,
            n: nk,
            transcript: Vec::new(),
        };
        let (ok, checks) = verify_certificate(&cert, sp);
        if ok {
            cert.transcript = checks;
            return Some(cert);
        }
    }
    None
}

fn relation_holds(sp: &StandardPresentation, g: &Word, h: &Word, m: i64, n: i64) -> bool {
    let w = h.mul(&g.pow(m)).mul(&h.inverse()).mul(&g.pow(-n));
    is_trivial(&w, sp)
}

/// Checks every defining condition of a very unbalanced element and records
/// each check. Returns whether all hold.
pub fn verify_certificate(cert: &VUCertificate, sp: &StandardPresentation) -> (bool, Vec<Check>) {
    let al = sp.alphabet();
    let (g, h, m, n) = (&cert.g, &cert.h, cert.m, cert.n);
    let gs = g.display(al).to_string();
    let hs = h.display(al).to_string();
    let mut checks = Vec::new();

    let vertex_only = g.letters().iter().all(|&l| sp.relation_of(l).is_none());
    let g_ok = vertex_only && !crate::words::free_reduce(g).is_empty();
    checks.push(Check {
        claim: format!("g = {gs} is a nontrivial word in the vertex generators"),
        holds: g_ok,
    });
    let (am, an) = (m.unsigned_abs(), n.unsigned_abs());
    let distinct = am != 1 && an != 1 && am != an;
    checks.push(Check {
        claim: format!("1, |m| = {am}, |n| = {an} are pairwise distinct"),
        holds: distinct,
    });
    if !g_ok || m == 0 || n == 0 {
        return (false, checks);
    }
    let too_big = am.max(an).saturating_mul(g.len() as u64) > MAX_POWER_LETTERS * 4;
    if too_big {
        checks.push(Check {
            claim: format!("exponents m = {m}, n = {n} are small enough to check"),
            holds: false,
        });
        return (false, checks);
    }
    let rel = relation_holds(sp, g, h, m, n);
    checks.push(Check {
        claim: format!("h g^{m} h^-1 = g^{n} with h = {hs}"),
        holds: rel,
    });
    let mut ok = g_ok && distinct && rel;
    if m % n == 0 {
        let q = m / n;
        let holds = !relation_holds(sp, g, h, q, 1);
        checks.push(Check {
            claim: format!("h g^{q} h^-1 != g"),
            holds,
        });
        ok &= holds;
    }
    if n % m == 0 {
        let q = n / m;
        let holds = !relation_holds(sp, g, h, 1, q);
        checks.push(Check {
            claim: format!("h g h^-1 != g^{q}"),
            holds,
        });
        ok &= holds;
    }
    (ok, checks)
}

/// Which Baumslag-Solitar group a verified certificate embeds.
pub fn bs_report(m: i64, n: i64) -> BsReport {
    let d = m.gcd(&n);
    if n % m == 0 {
        BsReport::PrimeExistence { ratio: n / m }
    } else if m % n == 0 {
        BsReport::PrimeExistence { ratio: m / n }
    } else {
        BsReport::Explicit { p: m / d, q: n / d }
    }
}

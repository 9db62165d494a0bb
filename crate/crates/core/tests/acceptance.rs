//! End-to-end acceptance checks. One test runs every criterion in sequence so
//! that the timing criteria are not measured under load from the others.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hnnrf::britton::{are_equal, decompose, is_pinch_free, is_trivial, normalize_extremal, stable_sequence};
use hnnrf::certify::{decide, verify_certificate, VUCertificate};
use hnnrf::complexes::{
    bs_cover, is_covering, label_map, CMap, ComplexError, Lifter, TwoComplex,
};
use hnnrf::gamma::{analyze_graph, GammaEdge, GammaGraph};
use hnnrf::presentation::{load, parse_word, StandardPresentation};
use hnnrf::words::{Letter, Word};

type Outcome = Result<String, String>;

fn bs(p: i64, q: i64) -> StandardPresentation {
    load(&format!("hnn\ngens a\nrel t : a^{p} -> a^{q}")).unwrap()
}

fn word(sp: &StandardPresentation, s: &str) -> Word {
    parse_word(s, sp.alphabet()).unwrap()
}

fn certificate_ok(sp: &StandardPresentation, cert: &VUCertificate) -> bool {
    let (ok, checks) = verify_certificate(cert, sp);
    ok && checks.iter().all(|c| c.holds)
}

// 1. BS(p,q) classification grid.
fn bs_grid() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut count = 0;
    for p in (-5i64..=5).filter(|&x| x != 0) {
        for q in (-5i64..=5).filter(|&x| x != 0) {
            count += 1;
            let v = decide(&bs(p, q)).map_err(|e| format!("BS({p},{q}): {e}"))?;
            let (ap, aq) = (p.abs(), q.abs());
            let distinct = ap != 1 && aq != 1 && ap != aq;
            if v.residually_finite == distinct || v.lerf != (ap == aq) {
                mismatches.push(format!("BS({p},{q})"));
            }
        }
    }
    let elapsed = start.elapsed();
    if !mismatches.is_empty() {
        return Err(format!("mismatches: {}", mismatches.join(", ")));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("{count} presentations took {elapsed:?} (limit 1s)"));
    }
    Ok(format!("{count} presentations, 0 mismatches, {elapsed:?}"))
}

fn random_edge_word(rng: &mut ChaCha8Rng, gens: usize) -> String {
    loop {
        let len = rng.gen_range(1..=6);
        let letters: Vec<Letter> = (0..len)
            .map(|_| {
                let g = rng.gen_range(0..gens);
                if rng.gen_bool(0.5) {
                    Letter::pos(g)
                } else {
                    Letter::neg(g)
                }
            })
            .collect();
        let w = Word::reduced(letters.clone());
        if !w.is_empty() {
            return letters
                .iter()
                .map(|l| {
                    let name = ["a", "b", "c", "d"][l.generator()];
                    if l.is_inverse() {
                        format!("{name}^-1")
                    } else {
                        name.to_string()
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
        }
    }
}

fn random_exponent(rng: &mut ChaCha8Rng) -> i64 {
    *[-5i64, -4, -3, -2, -1, 1, 2, 3, 4, 5].choose(rng).unwrap()
}

// 2. Every not-RF verdict ships a verifying certificate.
fn certificate_soundness() -> Outcome {
    let mut failures = Vec::new();
    let mut not_rf = 0;
    for p in (-5i64..=5).filter(|&x| x != 0) {
        for q in (-5i64..=5).filter(|&x| x != 0) {
            let sp = bs(p, q);
            let v = decide(&sp).map_err(|e| e.to_string())?;
            if !v.residually_finite {
                not_rf += 1;
                match &v.certificate {
                    Some(c) if certificate_ok(&sp, c) => {}
                    _ => failures.push(format!("BS({p},{q})")),
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut random_not_rf = 0;
    for i in 0..50 {
        let gens = rng.gen_range(1..=4);
        let rels = rng.gen_range(1..=4);
        let mut text = format!("hnn\ngens {}\n", ["a", "b", "c", "d"][..gens].join(" "));
        for j in 0..rels {
            let (u, v) = (random_edge_word(&mut rng, gens), random_edge_word(&mut rng, gens));
            let (e, f) = (random_exponent(&mut rng), random_exponent(&mut rng));
            text.push_str(&format!("rel t{j} : ({u})^{e} -> ({v})^{f}\n"));
        }
        let sp = load(&text).map_err(|e| format!("random {i}: {e}\n{text}"))?;
        match decide(&sp) {
            Ok(v) if v.residually_finite => {}
            Ok(v) => {
                random_not_rf += 1;
                not_rf += 1;
                match &v.certificate {
                    Some(c) if certificate_ok(&sp, c) => {}
                    _ => failures.push(format!("random {i}:\n{text}")),
                }
            }
            Err(e) => failures.push(format!("random {i}: {e}\n{text}")),
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "{not_rf} not-RF verdicts ({random_not_rf} of 50 random), all certificates verify"
        ))
    } else {
        Err(format!("{} failures: {}", failures.len(), failures.join("; ")))
    }
}

// 3. Named certificates.
fn named_certificates() -> Outcome {
    let sp = bs(2, 4);
    let v = decide(&sp).map_err(|e| e.to_string())?;
    let c = v.certificate.ok_or("BS(2,4) has no certificate")?;
    let a = word(&sp, "a");
    let t = word(&sp, "t");
    if (c.g.clone(), c.h.clone(), c.m, c.n) != (a.clone(), t.clone(), 2, 4) {
        return Err(format!(
            "BS(2,4) certificate is ({}, {}, {}, {})",
            c.g.display(sp.alphabet()),
            c.h.display(sp.alphabet()),
            c.m,
            c.n
        ));
    }
    if !certificate_ok(&sp, &c) {
        return Err("BS(2,4) certificate does not verify".into());
    }
    if is_trivial(&word(&sp, "t a t^-1 a^-2"), &sp) {
        return Err("t a t^-1 = a^2 in BS(2,4)".into());
    }
    let inequality = c
        .transcript
        .iter()
        .any(|k| k.claim == "h g h^-1 != g^2" && k.holds);
    if !inequality {
        return Err("transcript lacks t a t^-1 != a^2".into());
    }

    let sp = bs(1, 2);
    let bad = VUCertificate {
        g: word(&sp, "a"),
        h: word(&sp, "t"),
        m: 1,
        n: 2,
        transcript: Vec::new(),
    };
    let (ok, checks) = verify_certificate(&bad, &sp);
    let distinctness_failed = checks
        .iter()
        .any(|k| k.claim.contains("pairwise distinct") && !k.holds);
    if ok || !distinctness_failed {
        return Err("(a, t, 1, 2) in BS(1,2) was not rejected on distinctness".into());
    }
    Ok("BS(2,4) -> (a, t, 2, 4) with t a t^-1 != a^2; (a, t, 1, 2) rejected".into())
}

fn all_reduced_words(max_len: usize) -> Vec<Word> {
    let letters = [Letter::pos(0), Letter::neg(0), Letter::pos(1), Letter::neg(1)];
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Vec::<Letter>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                if w.last().is_some_and(|&p| p == l.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                out.push(Word::from_letters(v.clone()));
                next.push(v);
            }
        }
        frontier = next;
    }
    out
}

/// `w` acting on the line by `t: x -> 2x`, `a: x -> x + 1`, values scaled by
/// `2^8`; returns the images of 0 and 1.
fn affine(w: &Word) -> (i64, i64) {
    let scale = 1i64 << 8;
    let mut pts = [0, scale];
    for l in w.letters().iter().rev() {
        for x in &mut pts {
            *x = match (l.generator(), l.is_inverse()) {
                (0, false) => *x + scale,
                (0, true) => *x - scale,
                (_, false) => *x * 2,
                (_, true) => {
                    assert!(*x % 2 == 0, "scale too small");
                    *x / 2
                }
            };
        }
    }
    (pts[0], pts[1])
}

// 4. Word problem in BS(1,2) against lifts to finite covers.
fn word_problem_oracle() -> Outcome {
    // A nontrivial word of length ≤ 8 either has t-exponent k with 0 < |k| ≤ 8,
    // caught by the cycle count 9, or k = 0 and acts as x -> x + X / 2^d where
    // d ≤ 4 is its depth and X is a sum of at most 8 - 2d terms ±2^e, e ≤ d.
    // So |X| ≤ max_d (8 - 2d) 2^d, and X is invisible only to a cover whose
    // cycle length divides it.
    let bound = (0..=4u32).map(|d| (8 - 2 * d as i64) << d).max().unwrap();
    let crude = 1i64 << 7;
    if !(bound <= crude && crude < 131) {
        return Err(format!("exponent bound {bound} does not clear 131"));
    }
    let sp = bs(1, 2);
    let covers: Vec<Lifter> = [(3, 2), (5, 3), (131, 9)]
        .iter()
        .map(|&(n, m)| Lifter::new(&bs_cover(2, n, m).unwrap().1))
        .collect();
    let start = Instant::now();
    let words = all_reduced_words(8);
    let mut mismatches = Vec::new();
    let mut trivial = 0;
    let mut max_translation = 0i64;
    for w in &words {
        let solver = is_trivial(w, &sp);
        let mut closed = true;
        for c in &covers {
            if !c.closed_everywhere(w).map_err(|e| e.to_string())? {
                closed = false;
                break;
            }
        }
        let (x0, x1) = affine(w);
        let affine_trivial = x0 == 0 && x1 == 1 << 8;
        if x1 - x0 == 1 << 8 {
            let g = x0.abs().gcd(&(1 << 8));
            max_translation = max_translation.max(x0.abs() / g);
        }
        trivial += usize::from(solver);
        if solver != closed || solver != affine_trivial {
            mismatches.push(w.display(sp.alphabet()).to_string());
        }
    }
    let elapsed = start.elapsed();
    if max_translation > bound {
        return Err(format!("observed translation numerator {max_translation} > {bound}"));
    }
    if !mismatches.is_empty() {
        return Err(format!(
            "{} mismatches, first: {}",
            mismatches.len(),
            mismatches[..mismatches.len().min(5)].join(", ")
        ));
    }
    Ok(format!(
        "{} words ({trivial} trivial), 0 mismatches, bound {bound} <= {crude} < 131, {elapsed:?}",
        words.len()
    ))
}

/// Attaches the wrapping side of tube `i` to cycle `i + 2` instead of `i + 1`.
fn rotate_tube(x: &TwoComplex, n: usize, m: usize, i: usize) -> TwoComplex {
    let shift = |v: usize| if v / n == (i + 1) % m { ((i + 2) % m) * n + v % n } else { v };
    let mut ones = x.one_cells().to_vec();
    for k in 0..n {
        let e = &mut ones[m * n + i * n + k];
        e.src = shift(e.src);
    }
    let mut faces = x.two_cells().to_vec();
    for face in faces.iter_mut().skip(i * n).take(n) {
        for t in face.iter_mut().skip(3) {
            t.cell = shift(t.cell);
        }
    }
    TwoComplex::new(x.zero_cells(), ones, faces).unwrap()
}

fn drop_face(x: &TwoComplex, c: usize) -> TwoComplex {
    let mut faces = x.two_cells().to_vec();
    faces.remove(c);
    TwoComplex::new(x.zero_cells(), x.one_cells().to_vec(), faces).unwrap()
}

fn relabel(x: &TwoComplex, e: usize, label: usize) -> TwoComplex {
    let mut ones = x.one_cells().to_vec();
    ones[e].label = label;
    TwoComplex::new(x.zero_cells(), ones, x.two_cells().to_vec()).unwrap()
}

fn accepted(x: &TwoComplex, f: &CMap) -> Result<bool, String> {
    match label_map(x, f.target()) {
        Ok(g) => Ok(is_covering(&g)),
        Err(ComplexError::IllFormedMap(_)) => Ok(false),
        Err(e) => Err(e.to_string()),
    }
}

// 5. Covering checks on the BS(1,q) covers and corrupted variants.
fn covering_validity() -> Outcome {
    let mut errors = Vec::new();
    let mut good = 0;
    for q in [2u64, 3] {
        for n in [3u64, 5].into_iter().filter(|n| n.gcd(&q) == 1) {
            for m in [1u64, 2, 3] {
                let (x, f) = bs_cover(q, n, m).map_err(|e| e.to_string())?;
                good += 1;
                if !is_covering(&f) || !accepted(&x, &f)? {
                    errors.push(format!("false reject Ŷ({n},{m}) for q = {q}"));
                }
            }
        }
    }
    let mut corrupted = Vec::new();
    for &(q, n, m, i) in &[(2u64, 3usize, 2usize, 0usize), (2, 3, 3, 1), (3, 5, 2, 1), (3, 5, 3, 2)] {
        let (x, f) = bs_cover(q, n as u64, m as u64).unwrap();
        corrupted.push((format!("rotated tube {i} of Ŷ({n},{m}), q = {q}"), rotate_tube(&x, n, m, i), f));
    }
    for &(q, n, m, c) in &[(2u64, 3u64, 1u64, 0usize), (2, 5, 2, 7), (3, 5, 3, 14)] {
        let (x, f) = bs_cover(q, n, m).unwrap();
        corrupted.push((format!("dropped 2-cell {c} of Ŷ({n},{m}), q = {q}"), drop_face(&x, c), f));
    }
    for &(q, n, m, e, l) in &[(2u64, 3u64, 2u64, 1usize, 1usize), (2, 5, 1, 7, 0), (3, 5, 3, 20, 0)] {
        let (x, f) = bs_cover(q, n, m).unwrap();
        corrupted.push((format!("relabeled 1-cell {e} of Ŷ({n},{m}), q = {q}"), relabel(&x, e, l), f));
    }
    for (name, y, f) in &corrupted {
        if accepted(y, f)? {
            errors.push(format!("false accept: {name}"));
        }
    }
    if errors.is_empty() {
        Ok(format!("{good} covers accepted, {} corruptions rejected", corrupted.len()))
    } else {
        Err(errors.join("; "))
    }
}

/// Embedded cycles by brute force: every closed walk with distinct edges and
/// distinct vertices, as (out labels, in labels).
fn embedded_cycles_balanced(nv: usize, edges: &[GammaEdge]) -> bool {
    fn walk(
        edges: &[GammaEdge],
        start: usize,
        cur: usize,
        used_e: &mut Vec<bool>,
        used_v: &mut Vec<bool>,
        out: BigUint,
        inn: BigUint,
    ) -> bool {
        for (i, e) in edges.iter().enumerate() {
            if used_e[i] {
                continue;
            }
            for (from, from_l, to, to_l) in [
                (e.tail, e.tail_label, e.head, e.head_label),
                (e.head, e.head_label, e.tail, e.tail_label),
            ] {
                if from != cur {
                    continue;
                }
                let o = &out * from_l.unsigned_abs();
                let n = &inn * to_l.unsigned_abs();
                if to == start {
                    if o != n {
                        return false;
                    }
                    continue;
                }
                if used_v[to] {
                    continue;
                }
                used_e[i] = true;
                used_v[to] = true;
                let ok = walk(edges, start, to, used_e, used_v, o, n);
                used_e[i] = false;
                used_v[to] = false;
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    (0..nv).all(|s| {
        let mut used_v = vec![false; nv];
        used_v[s] = true;
        walk(edges, s, s, &mut vec![false; edges.len()], &mut used_v, BigUint::one(), BigUint::one())
    })
}

fn random_connected(rng: &mut ChaCha8Rng, nv: usize, ne: usize, label: &mut dyn FnMut(&mut ChaCha8Rng, usize, usize) -> (i64, i64)) -> Vec<GammaEdge> {
    let mut edges = Vec::new();
    for i in 0..ne {
        let (tail, head) = if i + 1 < nv {
            (rng.gen_range(0..=i), i + 1)
        } else {
            (rng.gen_range(0..nv), rng.gen_range(0..nv))
        };
        let (tail_label, head_label) = label(rng, tail, head);
        edges.push(GammaEdge { head, head_label, tail, tail_label });
    }
    edges
}

fn divisors(x: u64) -> Vec<u64> {
    (1..=x).filter(|d| x % d == 0).collect()
}

// 6. Potentials on random clean components; cleanliness against brute force.
fn potentials() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut brute_checked = 0;
    for trial in 0..100 {
        let nv: usize = rng.gen_range(1..=5);
        let ne = rng.gen_range(nv.saturating_sub(1).max(1)..=nv + 3);
        let pot: Vec<u64> = (0..nv).map(|_| rng.gen_range(1..=12)).collect();
        let edges = random_connected(&mut rng, nv, ne, &mut |rng, t, h| {
            let c = *divisors(pot[t].gcd(&pot[h])).choose(rng).unwrap();
            let sign = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 1 } else { -1 };
            ((pot[t] / c) as i64 * sign(rng), (pot[h] / c) as i64 * sign(rng))
        });
        let analysis = analyze_graph(GammaGraph::new(nv, edges.clone()));
        if analysis.components.len() != 1 {
            return Err(format!("trial {trial}: generated graph is disconnected"));
        }
        let report = &analysis.components[0];
        let p = match (&report.clean, &report.potential) {
            (true, Some(p)) => p,
            _ => return Err(format!("trial {trial}: clean component reported unclean")),
        };
        let val = |v: usize| &p[report.vertices.iter().position(|&x| x == v).unwrap()];
        for e in &edges {
            let (ph, pt) = (val(e.head), val(e.tail));
            let (mh, mt) = (BigUint::from(e.head_label.unsigned_abs()), BigUint::from(e.tail_label.unsigned_abs()));
            if ph.is_zero() || pt.is_zero() || !(ph % &mh).is_zero() || !(pt % &mt).is_zero() || ph / &mh != pt / &mt {
                return Err(format!("trial {trial}: potential violates an edge constraint"));
            }
        }
        // the recovered potential is proportional to the planted one
        let p0 = val(0).clone();
        for (v, &planted) in pot.iter().enumerate() {
            if val(v) * pot[0] != &p0 * planted {
                return Err(format!("trial {trial}: potential not proportional to the planted one"));
            }
        }
        // dividing by a common prime breaks integrality somewhere
        let g = p.iter().fold(BigUint::zero(), |acc, x| acc.gcd(x));
        let g = g.to_u64().unwrap();
        for prime in (2..=g).filter(|&d| g % d == 0 && (2..d).all(|k| d % k != 0)) {
            let still_valid = edges.iter().all(|e| {
                let (ph, pt) = (val(e.head) / prime, val(e.tail) / prime);
                let (mh, mt) = (BigUint::from(e.head_label.unsigned_abs()), BigUint::from(e.tail_label.unsigned_abs()));
                (&ph % &mh).is_zero() && (&pt % &mt).is_zero() && &ph / &mh == &pt / &mt
            });
            if still_valid {
                return Err(format!("trial {trial}: potential divisible by {prime}"));
            }
        }
        if edges.len() <= 6 {
            brute_checked += 1;
            if !embedded_cycles_balanced(nv, &edges) {
                return Err(format!("trial {trial}: brute force finds an unbalanced cycle"));
            }
        }
    }
    let mut unclean = 0;
    let mut total = 0;
    for trial in 0..200 {
        let nv: usize = rng.gen_range(1..=4);
        let ne = rng.gen_range(nv.saturating_sub(1).max(1)..=6);
        let edges = random_connected(&mut rng, nv, ne, &mut |rng, _, _| {
            let l = |rng: &mut ChaCha8Rng| *[-3i64, -2, -1, 1, 2, 3, 4, 6].choose(rng).unwrap();
            (l(rng), l(rng))
        });
        let analysis = analyze_graph(GammaGraph::new(nv, edges.clone()));
        let clean = analysis.components.iter().all(|c| c.clean);
        if clean != embedded_cycles_balanced(nv, &edges) {
            return Err(format!("random graph {trial}: gain test and brute force disagree"));
        }
        total += 1;
        unclean += usize::from(!clean);
    }
    Ok(format!(
        "100 planted potentials recovered and minimal ({brute_checked} brute-forced), \
         {total} random graphs ({unclean} unclean) agree with cycle enumeration"
    ))
}

const MIXED: &str = "hnn\ngens a b c\nrel s : a -> a^2\nrel t : b^2 -> c^3\n";

const CORPUS: &[(&str, &[&str])] = &[
    (
        "hnn\ngens a\nrel t : a -> a^2\n",
        &[
            "t^-1 a t",
            "a t^-1 a t",
            "t^-1 a t a",
            "a^3 t^-1 a t a^-1",
            "t^-1 a^3 t",
            "a t^-1 a^-1 t a^2",
            "t^-2 a t^2",
            "a t^-2 a t a t",
            "t^-1 a t^-1 a t a t",
            "t^-1 a^3 t^-1 a t a t",
            "a^-2 t^-1 a^5 t a^3",
            "t t^-1",
            "a^-1 t^-1 a^-1 t",
            "t^-3 a t^3",
            "t^-1 a t^2 a",
        ],
    ),
    (
        "hnn\ngens a\nrel t : a -> a^4\n",
        &[
            "t^-1 a t",
            "t^-1 a^2 t",
            "a t^-1 a^3 t",
            "a^2 t^-1 a t a",
            "t^-1 a^5 t",
            "t^-2 a t^2",
            "a t^-2 a^3 t a t a^-1",
            "t^-1 a^-3 t a^7",
            "t^-1 a t t^-1 a^2 t",
            "t^-1 a^6 t",
        ],
    ),
    (
        MIXED,
        &[
            "s^-1 a s",
            "a s^-1 a s a",
            "t^-1 c t",
            "b^2 t^-1 c t b^-4",
            "t^-1 c^2 t b",
            "s^-1 a s b^2 t^-1 c t",
            "b^-2 t^-1 c^-1 t",
            "t^-1 c t s^-1 a^3 s",
        ],
    ),
];

// 7. Normalization of extremal subwords.
fn normalization_suite() -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    for (text, words) in CORPUS {
        let sp = load(text).unwrap();
        for s in *words {
            let w = Word::reduced(word(&sp, s).into_letters());
            if !is_pinch_free(&w, &sp) {
                failures.push(format!("`{s}` is not pinch-free"));
                continue;
            }
            count += 1;
            let out = match normalize_extremal(&w, &sp) {
                Ok(o) => o,
                Err(e) => {
                    failures.push(format!("`{s}`: {e}"));
                    continue;
                }
            };
            if !are_equal(&out, &w, &sp) {
                failures.push(format!("`{s}`: element changed"));
            }
            if stable_sequence(&out, &sp) != stable_sequence(&w, &sp) {
                failures.push(format!("`{s}`: stable letters changed"));
            }
            let d = decompose(&out, &sp).map_err(|e| format!("`{s}`: {e}"))?;
            for e in &d.extremal {
                let outside = (e.span.start..e.span.end).filter(|&i| i < e.apex.start || i >= e.apex.end);
                if outside.clone().any(|i| sp.relation_of(out.letters()[i]).is_none()) {
                    failures.push(format!("`{s}`: extremal subword left unnormalized"));
                }
            }
            if normalize_extremal(&out, &sp).ok().as_ref() != Some(&out) {
                failures.push(format!("`{s}`: not idempotent"));
            }
        }
    }
    if count < 30 {
        failures.push(format!("corpus has only {count} pinch-free words"));
    }
    if failures.is_empty() {
        Ok(format!("{count} words over 3 presentations"))
    } else {
        Err(failures.join("; "))
    }
}

fn random_primitive_word(rng: &mut ChaCha8Rng, gens: &[&str]) -> String {
    let len = rng.gen_range(8..=32);
    let mut letters: Vec<(usize, bool)> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = (rng.gen_range(0..gens.len()), rng.gen_bool(0.5));
        let cancels = |p: &(usize, bool)| p.0 == l.0 && p.1 != l.1;
        if letters.last().is_some_and(cancels) {
            continue;
        }
        if letters.len() + 1 == len && letters.first().is_some_and(cancels) {
            continue;
        }
        letters.push(l);
    }
    letters
        .iter()
        .map(|&(g, inv)| if inv { format!("{}^-1", gens[g]) } else { gens[g].to_string() })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `n` relations, each joining two words drawn from a pool of `4n` random
/// cyclically reduced words. Γ is a sparse random multigraph with mean degree
/// 1/2, so its components stay small as `n` grows.
fn synthetic(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = ["a", "b", "c", "d"];
    let words: Vec<String> = (0..4 * n).map(|_| random_primitive_word(&mut rng, &gens)).collect();
    let mut text = String::from("hnn\ngens a b c d\n");
    for j in 0..n {
        let (x, y) = (rng.gen_range(0..4 * n), rng.gen_range(0..4 * n));
        let (e, f) = (random_exponent(&mut rng) % 4, random_exponent(&mut rng) % 4);
        let (e, f) = (if e == 0 { 1 } else { e }, if f == 0 { -1 } else { f });
        text.push_str(&format!("rel t{j} : ({})^{e} -> ({})^{f}\n", words[x], words[y]));
    }
    text
}

/// A single path of `n` relations with labels in 1..=3. Its minimal potential
/// has Θ(n²) bits in total, so runtime here is bounded below by output size.
fn synthetic_path(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = ["a", "b", "c", "d"];
    let words: Vec<String> = (0..=n).map(|_| random_primitive_word(&mut rng, &gens)).collect();
    let mut text = String::from("hnn\ngens a b c d\n");
    for j in 0..n {
        let (e, f) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        text.push_str(&format!("rel t{j} : ({})^{e} -> ({})^{f}\n", words[j], words[j + 1]));
    }
    text
}

/// Per-call times of `decide` on each input, as the best of many short rounds.
/// Rounds alternate between inputs so both see the same machine load.
fn time_decide(
    sps: &[&StandardPresentation],
    rounds: usize,
    batch: u32,
) -> Result<Vec<Duration>, String> {
    let mut best = vec![Duration::MAX; sps.len()];
    for _ in 0..rounds {
        for (sp, b) in sps.iter().zip(&mut best) {
            let start = Instant::now();
            for _ in 0..batch {
                decide(sp).map_err(|e| e.to_string())?;
            }
            *b = (*b).min(start.elapsed() / batch);
        }
    }
    Ok(best)
}

// 8. Performance on large synthetic presentations.
fn performance() -> Outcome {
    let small = load(&synthetic(1000, 0x5eed_0008)).map_err(|e| e.to_string())?;
    let large = load(&synthetic(2000, 0x5eed_0008)).map_err(|e| e.to_string())?;
    if small.relations().len() != 1000 || large.relations().len() != 2000 {
        return Err("synthetic presentation lost relations".into());
    }
    let [t1, t2] = time_decide(&[&small, &large], 200, 2)?[..] else { unreachable!() };
    let ratio = t2.as_secs_f64() / t1.as_secs_f64();
    let path1 = load(&synthetic_path(1000, 0x5eed_0008)).map_err(|e| e.to_string())?;
    let path2 = load(&synthetic_path(2000, 0x5eed_0008)).map_err(|e| e.to_string())?;
    let [p1, p2] = time_decide(&[&path1, &path2], 3, 1)?[..] else { unreachable!() };
    let path_ratio = p2.as_secs_f64() / p1.as_secs_f64();
    let summary = format!(
        "10^3 relations in {t1:?}, 2·10^3 in {t2:?}, ratio {ratio:.2} \
         (single-path potential blowup, not gated: ratio {path_ratio:.2})"
    );
    if t1 >= Duration::from_secs(1) {
        return Err(format!("{summary}; limit 1s"));
    }
    if ratio > 2.2 {
        return Err(format!("{summary}; limit 2.2"));
    }
    Ok(summary)
}

// runs without the libtest harness so the criterion lines are never captured
fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("BS classification grid", bs_grid),
        ("certificate soundness", certificate_soundness),
        ("named certificates", named_certificates),
        ("word problem vs cover lifts", word_problem_oracle),
        ("covering validity", covering_validity),
        ("potentials and cleanliness", potentials),
        ("extremal normalization", normalization_suite),
        ("performance", performance),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

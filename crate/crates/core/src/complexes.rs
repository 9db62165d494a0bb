//! Combinatorial 2-complexes, links, and covering maps.
//!
//! A map of complexes is a covering exactly when it induces an isomorphism
//! of links at every 0-cell; [`is_covering`] checks this directly. The finite
//! covers of the presentation complex of `BS(1,q)` built by [`bs_cover`]
//! give an independent word-problem oracle through [`lift_path`].

use std::fmt::Write as _;

use num_integer::Integer;
use thiserror::Error;

use crate::britton::is_trivial;
use crate::presentation::{load, StandardPresentation};
use crate::words::Word;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error("unknown cell {0}")]
    UnknownCell(usize),
    #[error("ill-formed complex: {0}")]
    IllFormedComplex(String),
    #[error("ill-formed map: {0}")]
    IllFormedMap(String),
    #[error("q = {q} and n = {n} are not coprime")]
    NotCoprime { q: u64, n: u64 },
    #[error("bad cover parameters: {0}")]
    BadParameters(String),
    #[error("no 1-cell with label {0} at the current 0-cell")]
    UnknownLabel(usize),
    #[error("word is trivial; no finite cover can witness it")]
    TrivialWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneCell {
    pub src: usize,
    pub dst: usize,
    /// Generator index in the alphabet of the labeling presentation.
    pub label: usize,
}

/// A 1-cell traversed along (`forward`) or against its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Traversal {
    pub cell: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoComplex {
    zero_cells: usize,
    one_cells: Vec<OneCell>,
    two_cells: Vec<Vec<Traversal>>,
}

impl TwoComplex {
    /// Checks that every boundary is a nonempty closed edge path.
    pub fn new(
        zero_cells: usize,
        one_cells: Vec<OneCell>,
        two_cells: Vec<Vec<Traversal>>,
    ) -> Result<TwoComplex, ComplexError> {
        for (i, e) in one_cells.iter().enumerate() {
            if e.src >= zero_cells || e.dst >= zero_cells {
                return Err(ComplexError::IllFormedComplex(format!(
                    "1-cell {i} has an endpoint outside the 0-cells"
                )));
            }
        }
        let x = TwoComplex {
            zero_cells,
            one_cells,
            two_cells,
        };
        for (i, b) in x.two_cells.iter().enumerate() {
            if b.is_empty() {
                return Err(ComplexError::IllFormedComplex(format!("2-cell {i} has empty boundary")));
            }
            if b.iter().any(|t| t.cell >= x.one_cells.len()) {
                return Err(ComplexError::IllFormedComplex(format!(
                    "2-cell {i} uses an unknown 1-cell"
                )));
            }
            for k in 0..b.len() {
                let next = b[(k + 1) % b.len()];
                if x.terminal(b[k]) != x.initial(next) {
                    return Err(ComplexError::IllFormedComplex(format!(
                        "boundary of 2-cell {i} is not closed at position {k}"
                    )));
                }
            }
        }
        Ok(x)
    }

    pub fn zero_cells(&self) -> usize {
        self.zero_cells
    }

    pub fn one_cells(&self) -> &[OneCell] {
        &self.one_cells
    }

    pub fn two_cells(&self) -> &[Vec<Traversal>] {
        &self.two_cells
    }

    pub fn initial(&self, t: Traversal) -> usize {
        let e = &self.one_cells[t.cell];
        if t.forward {
            e.src
        } else {
            e.dst
        }
    }

    pub fn terminal(&self, t: Traversal) -> usize {
        let e = &self.one_cells[t.cell];
        if t.forward {
            e.dst
        } else {
            e.src
        }
    }

    /// Adjacency dump for debugging: one line per cell.
    pub fn dump(&self) -> String {
        let mut s = format!("0-cells {}\n", self.zero_cells);
        for (i, e) in self.one_cells.iter().enumerate() {
            let _ = writeln!(s, "1-cell {i}: {} -> {} label {}", e.src, e.dst, e.label);
        }
        for (i, b) in self.two_cells.iter().enumerate() {
            let parts: Vec<String> = b
                .iter()
                .map(|t| format!("{}{}", t.cell, if t.forward { "+" } else { "-" }))
                .collect();
            let _ = writeln!(s, "2-cell {i}: {}", parts.join(" "));
        }
        s
    }
}

/// Presentation complex: one 0-cell, a 1-cell per generator and stable
/// letter (labeled by its alphabet index), a 2-cell per relation with
/// boundary `t w_g^m t^-1 w_h^-n`.
pub fn presentation_complex(sp: &StandardPresentation) -> TwoComplex {
    let one_cells = (0..sp.alphabet().len())
        .map(|label| OneCell {
            src: 0,
            dst: 0,
            label,
        })
        .collect();
    let two_cells = sp
        .relations()
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let t = sp.stable_letter(j, true);
            let w = Word::letter(t)
                .mul(&sp.class(r.g).word().pow(r.m))
                .mul(&Word::letter(t.inverse()))
                .mul(&sp.class(r.h).word().pow(-r.n));
            w.letters()
                .iter()
                .map(|l| Traversal {
                    cell: l.generator(),
                    forward: !l.is_inverse(),
                })
                .collect()
        })
        .collect();
    TwoComplex::new(1, one_cells, two_cells).expect("presentation complex is well formed")
}

/// Which end of a 1-cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellEnd {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkVertex {
    pub cell: usize,
    pub end: CellEnd,
}

/// Corner of a 2-cell between boundary positions `index` and `index + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Corner {
    pub two_cell: usize,
    pub index: usize,
    pub from: LinkVertex,
    pub to: LinkVertex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub vertices: Vec<LinkVertex>,
    pub edges: Vec<Corner>,
}

fn arriving_end(t: Traversal) -> LinkVertex {
    LinkVertex {
        cell: t.cell,
        end: if t.forward { CellEnd::Target } else { CellEnd::Source },
    }
}

fn leaving_end(t: Traversal) -> LinkVertex {
    LinkVertex {
        cell: t.cell,
        end: if t.forward { CellEnd::Source } else { CellEnd::Target },
    }
}

pub fn link(x: &TwoComplex, v: usize) -> Result<Link, ComplexError> {
    if v >= x.zero_cells {
        return Err(ComplexError::UnknownCell(v));
    }
    let mut vertices = Vec::new();
    for (i, e) in x.one_cells.iter().enumerate() {
        if e.src == v {
            vertices.push(LinkVertex {
                cell: i,
                end: CellEnd::Source,
            });
        }
        if e.dst == v {
            vertices.push(LinkVertex {
                cell: i,
                end: CellEnd::Target,
            });
        }
    }
    let mut edges = Vec::new();
    for (c, b) in x.two_cells.iter().enumerate() {
        for i in 0..b.len() {
            let (d, next) = (b[i], b[(i + 1) % b.len()]);
            if x.terminal(d) == v {
                edges.push(Corner {
                    two_cell: c,
                    index: i,
                    from: arriving_end(d),
                    to: leaving_end(next),
                });
            }
        }
    }
    Ok(Link { vertices, edges })
}

/// Where a 2-cell goes: target cell, rotation, and whether the boundary is
/// read backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceImage {
    pub cell: usize,
    pub shift: usize,
    pub reversed: bool,
}

/// A combinatorial map between 2-complexes that preserves labels and
/// orientations of 1-cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CMap {
    source: TwoComplex,
    target: TwoComplex,
    zero: Vec<usize>,
    one: Vec<usize>,
    two: Vec<FaceImage>,
}

impl CMap {
    /// Checks that the assignment commutes with the attaching maps.
    pub fn new(
        source: TwoComplex,
        target: TwoComplex,
        zero: Vec<usize>,
        one: Vec<usize>,
        two: Vec<FaceImage>,
    ) -> Result<CMap, ComplexError> {
        let bad = |m: String| Err(ComplexError::IllFormedMap(m));
        if zero.len() != source.zero_cells
            || one.len() != source.one_cells.len()
            || two.len() != source.two_cells.len()
        {
            return bad("cell assignment has the wrong size".into());
        }
        if zero.iter().any(|&v| v >= target.zero_cells)
            || one.iter().any(|&e| e >= target.one_cells.len())
            || two.iter().any(|f| f.cell >= target.two_cells.len())
        {
            return bad("cell assignment leaves the target".into());
        }
        for (i, e) in source.one_cells.iter().enumerate() {
            let fe = target.one_cells[one[i]];
            if fe.label != e.label {
                return bad(format!("1-cell {i} changes label"));
            }
            if zero[e.src] != fe.src || zero[e.dst] != fe.dst {
                return bad(format!("1-cell {i} does not commute with its endpoints"));
            }
        }
        for (c, b) in source.two_cells.iter().enumerate() {
            let img = two[c];
            let tb = &target.two_cells[img.cell];
            if tb.len() != b.len() {
                return bad(format!("2-cell {c} maps to a boundary of different length"));
            }
            for (i, d) in b.iter().enumerate() {
                let expect = face_traversal(tb, img, i);
                if one[d.cell] != expect.cell || d.forward != expect.forward {
                    return bad(format!("2-cell {c} boundary position {i} does not match"));
                }
            }
        }
        Ok(CMap {
            source,
            target,
            zero,
            one,
            two,
        })
    }

    pub fn source(&self) -> &TwoComplex {
        &self.source
    }

    pub fn target(&self) -> &TwoComplex {
        &self.target
    }

    pub fn zero_map(&self) -> &[usize] {
        &self.zero
    }

    pub fn identity(x: &TwoComplex) -> CMap {
        CMap::new(
            x.clone(),
            x.clone(),
            (0..x.zero_cells).collect(),
            (0..x.one_cells.len()).collect(),
            (0..x.two_cells.len())
                .map(|cell| FaceImage {
                    cell,
                    shift: 0,
                    reversed: false,
                })
                .collect(),
        )
        .expect("identity commutes")
    }
}

/// Target traversal that source boundary position `i` must map to.
fn face_traversal(tb: &[Traversal], img: FaceImage, i: usize) -> Traversal {
    let k = tb.len();
    if img.reversed {
        let t = tb[(img.shift + k - i % k) % k];
        Traversal {
            cell: t.cell,
            forward: !t.forward,
        }
    } else {
        tb[(img.shift + i) % k]
    }
}

/// Target corner index for source corner `i` (between positions `i`, `i+1`).
fn face_corner(k: usize, img: FaceImage, i: usize) -> usize {
    if img.reversed {
        (img.shift + 2 * k - i - 1) % k
    } else {
        (img.shift + i) % k
    }
}

/// Derives the map into a complex with one 0-cell whose 1-cells carry
/// distinct labels, matching 2-cells by their boundary labels.
pub fn label_map(source: &TwoComplex, target: &TwoComplex) -> Result<CMap, ComplexError> {
    if target.zero_cells != 1 {
        return Err(ComplexError::IllFormedMap("target must have one 0-cell".into()));
    }
    let one = source
        .one_cells
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mut hits = target
                .one_cells
                .iter()
                .enumerate()
                .filter(|(_, f)| f.label == e.label);
            match (hits.next(), hits.next()) {
                (Some((j, _)), None) => Ok(j),
                _ => Err(ComplexError::IllFormedMap(format!(
                    "label of 1-cell {i} has no unique image"
                ))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut two = Vec::with_capacity(source.two_cells.len());
    for (c, b) in source.two_cells.iter().enumerate() {
        let img = find_face(target, &one, b).ok_or_else(|| {
            ComplexError::IllFormedMap(format!("2-cell {c} matches no relator"))
        })?;
        two.push(img);
    }
    CMap::new(
        source.clone(),
        target.clone(),
        vec![0; source.zero_cells],
        one,
        two,
    )
}

fn find_face(target: &TwoComplex, one: &[usize], b: &[Traversal]) -> Option<FaceImage> {
    for (cell, tb) in target.two_cells.iter().enumerate() {
        if tb.len() != b.len() {
            continue;
        }
        for shift in 0..tb.len() {
            for reversed in [false, true] {
                let img = FaceImage {
                    cell,
                    shift,
                    reversed,
                };
                let fits = b.iter().enumerate().all(|(i, d)| {
                    let t = face_traversal(tb, img, i);
                    one[d.cell] == t.cell && d.forward == t.forward
                });
                if fits {
                    return Some(img);
                }
            }
        }
    }
    None
}

/// Local bijectivity on links at every 0-cell.
pub fn is_covering(f: &CMap) -> bool {
    let x = &f.source;
    let y = &f.target;
    let target_links: Vec<Link> = (0..y.zero_cells)
        .map(|v| link(y, v).expect("valid 0-cell"))
        .collect();
    // every source 0-cell's link, built in one pass
    let mut vertex_images: Vec<Vec<LinkVertex>> = vec![Vec::new(); x.zero_cells];
    for (i, e) in x.one_cells.iter().enumerate() {
        vertex_images[e.src].push(LinkVertex {
            cell: f.one[i],
            end: CellEnd::Source,
        });
        vertex_images[e.dst].push(LinkVertex {
            cell: f.one[i],
            end: CellEnd::Target,
        });
    }
    let mut corner_images: Vec<Vec<(usize, usize)>> = vec![Vec::new(); x.zero_cells];
    for (c, b) in x.two_cells.iter().enumerate() {
        let img = f.two[c];
        let k = b.len();
        for i in 0..k {
            let v = x.terminal(b[i]);
            corner_images[v].push((img.cell, face_corner(k, img, i)));
        }
    }
    for v in 0..x.zero_cells {
        let tl = &target_links[f.zero[v]];
        let mut got = std::mem::take(&mut vertex_images[v]);
        got.sort_unstable();
        let mut want = tl.vertices.clone();
        want.sort_unstable();
        if got != want {
            return false;
        }
        let mut got = std::mem::take(&mut corner_images[v]);
        got.sort_unstable();
        let mut want: Vec<(usize, usize)> = tl.edges.iter().map(|c| (c.two_cell, c.index)).collect();
        want.sort_unstable();
        if got != want {
            return false;
        }
    }
    true
}

/// Presentation complex of `BS(1,q)` with `a` labeled 0 and `t` labeled 1.
pub fn bs_presentation(q: u64) -> StandardPresentation {
    load(&format!("hnn\ngens a\nrel t : a -> a^{q}")).expect("BS(1,q) presentation")
}

/// The cover of the `BS(1,q)` presentation complex made of `m` cycles of `n`
/// `a`-edges and `m` tubes: tube `i` is glued to cycle `i` by a homeomorphism
/// and wraps `q` times around cycle `i+1`. Degree `n·m`.
pub fn bs_cover(q: u64, n: u64, m: u64) -> Result<(TwoComplex, CMap), ComplexError> {
    if q < 2 || n < 1 || m < 1 {
        return Err(ComplexError::BadParameters(format!(
            "need q >= 2, n >= 1, m >= 1 (got q = {q}, n = {n}, m = {m})"
        )));
    }
    if q.gcd(&n) != 1 {
        return Err(ComplexError::NotCoprime { q, n });
    }
    let (n, m, q) = (n as usize, m as usize, q as usize);
    let v = |i: usize, k: usize| (i % m) * n + k % n;
    let a_edge = |i: usize, k: usize| (i % m) * n + k % n;
    let t_edge = |i: usize, k: usize| m * n + (i % m) * n + k % n;
    let mut one_cells = Vec::with_capacity(2 * m * n);
    for i in 0..m {
        for k in 0..n {
            one_cells.push(OneCell {
                src: v(i, k),
                dst: v(i, k + 1),
                label: 0,
            });
        }
    }
    for i in 0..m {
        for k in 0..n {
            one_cells.push(OneCell {
                src: v(i + 1, k * q),
                dst: v(i, k),
                label: 1,
            });
        }
    }
    let mut two_cells = Vec::with_capacity(m * n);
    let mut faces = Vec::with_capacity(m * n);
    for i in 0..m {
        for k in 0..n {
            let mut b = vec![
                Traversal { cell: t_edge(i, k), forward: true },
                Traversal { cell: a_edge(i, k), forward: true },
                Traversal { cell: t_edge(i, k + 1), forward: false },
            ];
            for s in (0..q).rev() {
                b.push(Traversal {
                    cell: a_edge(i + 1, k * q + s),
                    forward: false,
                });
            }
            two_cells.push(b);
            faces.push(FaceImage {
                cell: 0,
                shift: 0,
                reversed: false,
            });
        }
    }
    let x = TwoComplex::new(m * n, one_cells, two_cells)?;
    let y = presentation_complex(&bs_presentation(q as u64));
    let one = x.one_cells.iter().map(|e| e.label).collect();
    let f = CMap::new(x.clone(), y, vec![0; m * n], one, faces)?;
    Ok((x, f))
}

/// Per-0-cell lookup of outgoing and incoming 1-cells by label.
#[derive(Debug, Clone)]
pub struct Lifter {
    out: Vec<Vec<Option<usize>>>,
    inc: Vec<Vec<Option<usize>>>,
    cells: Vec<OneCell>,
}

impl Lifter {
    pub fn new(f: &CMap) -> Lifter {
        let x = &f.source;
        let labels = f.target.one_cells.iter().map(|e| e.label).max().map_or(0, |l| l + 1);
        let mut out = vec![vec![None; labels]; x.zero_cells];
        let mut inc = vec![vec![None; labels]; x.zero_cells];
        for (i, e) in x.one_cells.iter().enumerate() {
            out[e.src][e.label] = Some(i);
            inc[e.dst][e.label] = Some(i);
        }
        Lifter {
            out,
            inc,
            cells: x.one_cells.clone(),
        }
    }

    pub fn zero_cells(&self) -> usize {
        self.out.len()
    }

    /// End of the lift of `w` starting at `base`.
    pub fn end(&self, w: &Word, base: usize) -> Result<usize, ComplexError> {
        let mut cur = base;
        for &l in w.letters() {
            let g = l.generator();
            let table = if l.is_inverse() { &self.inc } else { &self.out };
            let e = table[cur]
                .get(g)
                .copied()
                .flatten()
                .ok_or(ComplexError::UnknownLabel(g))?;
            cur = if l.is_inverse() {
                self.cells[e].src
            } else {
                self.cells[e].dst
            };
        }
        Ok(cur)
    }

    pub fn closed_everywhere(&self, w: &Word) -> Result<bool, ComplexError> {
        for b in 0..self.zero_cells() {
            if self.end(w, b)? != b {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Traces the lift of `w` (letters are target labels) from `base`.
pub fn lift_path(f: &CMap, w: &Word, base: usize) -> Result<(usize, bool), ComplexError> {
    if base >= f.source.zero_cells {
        return Err(ComplexError::UnknownCell(base));
    }
    let end = Lifter::new(f).end(w, base)?;
    Ok((end, end == base))
}

/// First `(n, m)` whose cover has a non-closed lift of `w` at some base.
/// `w` is a word over `a` (0) and `t` (1) that must be nontrivial in `BS(1,q)`.
pub fn rf_witness_search(
    q: u64,
    w: &Word,
    params: &[(u64, u64)],
) -> Result<Option<(u64, u64)>, ComplexError> {
    if is_trivial(w, &bs_presentation(q)) {
        return Err(ComplexError::TrivialWord);
    }
    for &(n, m) in params {
        let (_, f) = bs_cover(q, n, m)?;
        if !Lifter::new(&f).closed_everywhere(w)? {
            return Ok(Some((n, m)));
        }
    }
    Ok(None)
}

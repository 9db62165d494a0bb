//! The labeled graph Γ of a standard presentation and its component analysis.
//!
//! Vertices are the classes of the independent set. Relation `j`
//! (`t_j w_g^m t_j^-1 = w_h^n`) gives an edge from `h` (tail, label `n`) to
//! `g` (head, label `m`). Traversing the edge forward corresponds to reading
//! the stable letter `t_j`, backward to `t_j^-1`; in both cases the step
//! satisfies `w_start^out · τ = τ · w_end^in` in the group.

use std::collections::VecDeque;
use std::ops::{Index, IndexMut};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

use crate::presentation::StandardPresentation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GammaError {
    #[error("path is empty")]
    EmptyCycle,
    #[error("steps do not form a closed path")]
    NotClosed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaEdge {
    pub head: usize,
    pub head_label: i64,
    pub tail: usize,
    pub tail_label: i64,
}

/// One traversal of an edge. Forward runs tail to head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub edge: usize,
    pub forward: bool,
}

impl Step {
    pub fn reversed(self) -> Step {
        Step {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

/// Reverses a path: inverse steps in opposite order.
pub fn reverse_path(path: &[Step]) -> Vec<Step> {
    path.iter().rev().map(|s| s.reversed()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaGraph {
    vertex_count: usize,
    edges: Vec<GammaEdge>,
    /// Incidence lists, concatenated; vertex `v` owns `offsets[v]..offsets[v + 1]`.
    offsets: Vec<usize>,
    incident: Vec<usize>,
}

impl GammaGraph {
    pub fn new(vertex_count: usize, edges: Vec<GammaEdge>) -> GammaGraph {
        let mut offsets = vec![0usize; vertex_count + 1];
        for e in &edges {
            offsets[e.tail + 1] += 1;
            if e.head != e.tail {
                offsets[e.head + 1] += 1;
            }
        }
        for v in 0..vertex_count {
            offsets[v + 1] += offsets[v];
        }
        let mut fill = offsets.clone();
        let mut incident = vec![0; offsets[vertex_count]];
        for (i, e) in edges.iter().enumerate() {
            incident[fill[e.tail]] = i;
            fill[e.tail] += 1;
            if e.head != e.tail {
                incident[fill[e.head]] = i;
                fill[e.head] += 1;
            }
        }
        GammaGraph {
            vertex_count,
            edges,
            offsets,
            incident,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[GammaEdge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &GammaEdge {
        &self.edges[i]
    }

    /// Edges incident to `v`, each once (self-loops included once).
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn start(&self, s: Step) -> usize {
        let e = &self.edges[s.edge];
        if s.forward {
            e.tail
        } else {
            e.head
        }
    }

    pub fn end(&self, s: Step) -> usize {
        let e = &self.edges[s.edge];
        if s.forward {
            e.head
        } else {
            e.tail
        }
    }

    /// Label of the half-edge the step leaves from.
    pub fn out_label(&self, s: Step) -> i64 {
        let e = &self.edges[s.edge];
        if s.forward {
            e.tail_label
        } else {
            e.head_label
        }
    }

    /// Label of the half-edge the step arrives at.
    pub fn in_label(&self, s: Step) -> i64 {
        let e = &self.edges[s.edge];
        if s.forward {
            e.head_label
        } else {
            e.tail_label
        }
    }

    /// All steps leaving `v`; a self-loop contributes both directions.
    pub fn steps_from(&self, v: usize) -> impl Iterator<Item = Step> + '_ {
        self.incident(v).iter().flat_map(move |&i| {
            let e = &self.edges[i];
            let f = (e.tail == v).then_some(Step {
                edge: i,
                forward: true,
            });
            let b = (e.head == v).then_some(Step {
                edge: i,
                forward: false,
            });
            f.into_iter().chain(b)
        })
    }

    pub fn is_path(&self, path: &[Step]) -> bool {
        path.windows(2)
            .all(|p| self.end(p[0]) == self.start(p[1]))
    }

    pub fn is_closed_path(&self, path: &[Step]) -> bool {
        !path.is_empty()
            && self.is_path(path)
            && self.end(path[path.len() - 1]) == self.start(path[0])
    }
}

pub fn build_gamma(sp: &StandardPresentation) -> GammaGraph {
    let edges = sp
        .relations()
        .iter()
        .map(|r| GammaEdge {
            head: r.g,
            head_label: r.m,
            tail: r.h,
            tail_label: r.n,
        })
        .collect();
    GammaGraph::new(sp.classes().len(), edges)
}

/// Product of outgoing labels along a closed path.
pub fn loop_product(g: &GammaGraph, path: &[Step]) -> Result<BigInt, GammaError> {
    if path.is_empty() {
        return Err(GammaError::EmptyCycle);
    }
    if !g.is_closed_path(path) {
        return Err(GammaError::NotClosed);
    }
    Ok(path.iter().map(|&s| BigInt::from(g.out_label(s))).product())
}

/// Product of incoming labels; equals the loop product of the reversed path.
pub fn in_product(g: &GammaGraph, path: &[Step]) -> BigInt {
    path.iter().map(|&s| BigInt::from(g.in_label(s))).product()
}

/// A cycle is balanced when its two loop products agree in absolute value.
pub fn is_balanced(g: &GammaGraph, path: &[Step]) -> bool {
    let a: BigInt = path.iter().map(|&s| BigInt::from(g.out_label(s))).product();
    a.abs() == in_product(g, path).abs()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniqueCycle {
    /// Starts at the least vertex of the cycle.
    pub steps: Vec<Step>,
    pub loop_product_forward: BigInt,
    pub loop_product_backward: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureEvidence {
    /// The only embedded cycle has no loop product equal to ±1.
    NoUnitLoopProduct { cycle: Vec<Step> },
    /// An edge off the cycle whose end away from the cycle is not ±1.
    OffCycleLabel { edge: usize, vertex: usize, label: i64 },
    /// Two distinct embedded cycles in a non-clean component.
    MultipleCycles { first: Vec<Step>, second: Vec<Step> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentReport {
    /// Sorted.
    pub vertices: Vec<usize>,
    /// Sorted.
    pub edges: Vec<usize>,
    pub betti: usize,
    pub clean: bool,
    /// Aligned with `vertices`; present iff clean.
    pub potential: Option<Vec<BigUint>>,
    /// An embedded unbalanced cycle; present iff not clean.
    pub unbalanced_cycle: Option<Vec<Step>>,
    /// Present iff not clean and `betti == 1`.
    pub unique_cycle: Option<UniqueCycle>,
    /// Present iff not clean.
    pub structure_ok: Option<bool>,
    pub failure_evidence: Option<FailureEvidence>,
}

impl ComponentReport {
    pub fn potential_of(&self, v: usize) -> Option<&BigUint> {
        let i = self.vertices.binary_search(&v).ok()?;
        self.potential.as_ref().map(|p| &p[i])
    }
}

#[derive(Debug, Clone)]
pub struct GammaAnalysis {
    pub graph: GammaGraph,
    /// Sorted by least vertex.
    pub components: Vec<ComponentReport>,
    /// Component index of each vertex.
    pub component_of: Vec<usize>,
}

/// Builds Γ and analyzes every component.
pub fn analyze(sp: &StandardPresentation) -> GammaAnalysis {
    let graph = build_gamma(sp);
    analyze_graph(graph)
}

pub fn analyze_graph(graph: GammaGraph) -> GammaAnalysis {
    let n = graph.vertex_count();
    let mut component_of = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = Vec::new();
    for root in 0..n {
        if component_of[root] != usize::MAX {
            continue;
        }
        component_of[root] = count;
        queue.clear();
        queue.push(root);
        while let Some(v) = queue.pop() {
            for &e in graph.incident(v) {
                let ed = graph.edge(e);
                for w in [ed.head, ed.tail] {
                    if component_of[w] == usize::MAX {
                        component_of[w] = count;
                        queue.push(w);
                    }
                }
            }
        }
        count += 1;
    }
    // bucket the vertices by component; scanning in order keeps each bucket sorted
    let mut start = vec![0usize; count + 1];
    for &c in &component_of {
        start[c + 1] += 1;
    }
    for c in 0..count {
        start[c + 1] += start[c];
    }
    let mut fill = start.clone();
    let mut grouped = vec![0usize; n];
    for (v, &c) in component_of.iter().enumerate() {
        grouped[fill[c]] = v;
        fill[c] += 1;
    }
    let components = (0..count)
        .map(|c| analyze_component(&graph, &grouped[start[c]..start[c + 1]]))
        .collect();
    GammaAnalysis {
        graph,
        components,
        component_of,
    }
}

/// Scratch space for one component, indexed by global vertex or edge index.
/// `keys` is the component's sorted vertex or edge list, so the storage is
/// proportional to the component rather than the whole graph.
#[derive(Debug, Clone)]
pub(crate) struct Local<'a, T> {
    keys: &'a [usize],
    data: Vec<T>,
}

impl<'a, T: Clone> Local<'a, T> {
    pub(crate) fn new(keys: &'a [usize], default: T) -> Local<'a, T> {
        Local {
            keys,
            data: vec![default; keys.len()],
        }
    }
}

impl<T> Local<'_, T> {
    fn slot(&self, i: usize) -> usize {
        self.keys.binary_search(&i).expect("index inside the component")
    }
}

impl<T> Index<usize> for Local<'_, T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.data[self.slot(i)]
    }
}

impl<T> IndexMut<usize> for Local<'_, T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        let k = self.slot(i);
        &mut self.data[k]
    }
}

/// Spanning tree of a component: parent step into each vertex (None at root)
/// and BFS order.
struct Tree<'a> {
    order: Vec<usize>,
    /// Parent step and depth of each vertex.
    node: Local<'a, (Option<Step>, usize)>,
}

/// BFS tree of the component with sorted vertex list `vertices`, rooted at
/// its least vertex.
fn spanning_tree<'a>(g: &GammaGraph, vertices: &'a [usize]) -> Tree<'a> {
    let root = vertices[0];
    let mut node = Local::new(vertices, (None, usize::MAX));
    let mut order = Vec::with_capacity(vertices.len());
    order.push(root);
    node[root].1 = 0;
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        for s in g.steps_from(v) {
            let w = g.end(s);
            if node[w].1 == usize::MAX {
                node[w] = (Some(s), node[v].1 + 1);
                order.push(w);
            }
        }
    }
    Tree { order, node }
}

impl Tree<'_> {
    fn parent(&self, v: usize) -> Option<Step> {
        self.node[v].0
    }

    fn is_tree_edge(&self, g: &GammaGraph, e: usize) -> bool {
        let ed = g.edge(e);
        [ed.head, ed.tail]
            .iter()
            .any(|&v| self.parent(v).is_some_and(|s| s.edge == e))
    }

    /// Embedded cycle formed by non-tree edge `e` and the tree path between
    /// its endpoints, starting with `e` traversed forward.
    fn fundamental_cycle(&self, g: &GammaGraph, e: usize) -> Vec<Step> {
        let ed = g.edge(e);
        let first = Step {
            edge: e,
            forward: true,
        };
        // from head back to tail through the tree
        let (mut a, mut b) = (ed.head, ed.tail);
        let mut up = Vec::new(); // steps from a upward, reversed later
        let mut down = Vec::new(); // steps into b, from the top
        while a != b {
            if self.node[a].1 >= self.node[b].1 {
                let s = self.parent(a).expect("non-root vertex has a parent");
                up.push(s.reversed());
                a = g.start(s);
            } else {
                let s = self.parent(b).expect("non-root vertex has a parent");
                down.push(s);
                b = g.start(s);
            }
        }
        let mut cycle = vec![first];
        cycle.extend(up);
        cycle.extend(down.into_iter().rev());
        cycle
    }
}

fn abs_ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a.unsigned_abs()), BigInt::from(b.unsigned_abs()))
}

/// Non-tree edges whose gain disagrees with the tree-induced vertex ratios,
/// and the minimal potential when there are none.
fn gains(
    g: &GammaGraph,
    tree: &Tree,
    vertices: &[usize],
    edges: &[usize],
) -> (Vec<usize>, Option<Vec<BigUint>>) {
    small_gains(g, tree, vertices, edges).unwrap_or_else(|| big_gains(g, tree, vertices, edges))
}

fn reduced(num: u128, den: u128) -> Option<(u64, u64)> {
    let d = num.gcd(&den);
    Some(((num / d).try_into().ok()?, (den / d).try_into().ok()?))
}

/// [`gains`] in machine integers; `None` on overflow.
fn small_gains(
    g: &GammaGraph,
    tree: &Tree,
    vertices: &[usize],
    edges: &[usize],
) -> Option<(Vec<usize>, Option<Vec<BigUint>>)> {
    let mut ratio = Local::new(vertices, (1u64, 1u64));
    for &v in &tree.order[1..] {
        let s = tree.parent(v).expect("tree vertex");
        let (n, d) = ratio[g.start(s)];
        ratio[v] = reduced(
            u128::from(n) * u128::from(g.in_label(s).unsigned_abs()),
            u128::from(d) * u128::from(g.out_label(s).unsigned_abs()),
        )?;
    }
    // r(v) / |label| as a reduced fraction
    let end = |v: usize, l: i64| {
        let (n, d) = ratio[v];
        reduced(u128::from(n), u128::from(d) * u128::from(l.unsigned_abs()))
    };
    let mut violating = Vec::new();
    let mut lambda = 1u64;
    for &e in edges {
        let ed = g.edge(e);
        let tail = end(ed.tail, ed.tail_label)?;
        let head = end(ed.head, ed.head_label)?;
        if !tree.is_tree_edge(g, e) && tail != head {
            violating.push(e);
        }
        lambda = lambda.checked_mul(tail.1 / lambda.gcd(&tail.1))?;
        lambda = lambda.checked_mul(head.1 / lambda.gcd(&head.1))?;
    }
    if !violating.is_empty() {
        return Some((violating, None));
    }
    for &v in vertices {
        let d = ratio[v].1;
        lambda = lambda.checked_mul(d / lambda.gcd(&d))?;
    }
    let pot = vertices
        .iter()
        .map(|&v| {
            let (n, d) = ratio[v];
            n.checked_mul(lambda / d).map(BigUint::from)
        })
        .collect::<Option<Vec<_>>>()?;
    Some((violating, Some(pot)))
}

fn big_gains(
    g: &GammaGraph,
    tree: &Tree,
    vertices: &[usize],
    edges: &[usize],
) -> (Vec<usize>, Option<Vec<BigUint>>) {
    let mut ratio: Local<Option<BigRational>> = Local::new(vertices, None);
    ratio[tree.order[0]] = Some(BigRational::one());
    for &v in &tree.order[1..] {
        let s = tree.parent(v).expect("tree vertex");
        let near = ratio[g.start(s)].clone().expect("parent visited first");
        ratio[v] = Some(near * abs_ratio(g.in_label(s), g.out_label(s)));
    }
    let r = |v: usize| ratio[v].as_ref().expect("component vertex");

    let mut violating = Vec::new();
    for &e in edges {
        if tree.is_tree_edge(g, e) {
            continue;
        }
        let ed = g.edge(e);
        let lhs = r(ed.tail) / BigInt::from(ed.tail_label.unsigned_abs());
        let rhs = r(ed.head) / BigInt::from(ed.head_label.unsigned_abs());
        if lhs != rhs {
            violating.push(e);
        }
    }
    if !violating.is_empty() {
        return (violating, None);
    }
    let mut lambda = BigInt::one();
    for &e in edges {
        let ed = g.edge(e);
        for (v, l) in [(ed.head, ed.head_label), (ed.tail, ed.tail_label)] {
            let q = r(v) / BigInt::from(l.unsigned_abs());
            lambda = lambda.lcm(q.denom());
        }
    }
    for &v in vertices {
        lambda = lambda.lcm(r(v).denom());
    }
    let pot = vertices
        .iter()
        .map(|&v| {
            let p = r(v) * &lambda;
            debug_assert!(p.is_integer());
            p.to_integer().to_biguint().expect("potentials are positive")
        })
        .collect();
    (violating, Some(pot))
}

/// Analyzes the component spanned by `vertices` (sorted, connected).
pub fn analyze_component(g: &GammaGraph, vertices: &[usize]) -> ComponentReport {
    let tree = spanning_tree(g, vertices);
    debug_assert_eq!(tree.order.len(), vertices.len());
    let mut edges: Vec<usize> = vertices
        .iter()
        .flat_map(|&v| g.incident(v).iter().copied())
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let betti = edges.len() + 1 - vertices.len();

    let (violating, potential) = gains(g, &tree, vertices, &edges);
    let clean = violating.is_empty();

    if clean {
        return ComponentReport {
            vertices: vertices.to_vec(),
            edges,
            betti,
            clean,
            potential,
            unbalanced_cycle: None,
            unique_cycle: None,
            structure_ok: None,
            failure_evidence: None,
        };
    }
    let mut report = ComponentReport {
        vertices: vertices.to_vec(),
        edges: edges.clone(),
        betti,
        clean,
        potential: None,
        unbalanced_cycle: None,
        unique_cycle: None,
        structure_ok: None,
        failure_evidence: None,
    };

    report.unbalanced_cycle = Some(tree.fundamental_cycle(g, violating[0]));
    // a tree has no cycles, so it cannot be unbalanced
    assert!(betti >= 1, "non-clean component without cycles");

    if betti >= 2 {
        let non_tree: Vec<usize> = edges
            .iter()
            .copied()
            .filter(|&e| !tree.is_tree_edge(g, e))
            .collect();
        let first = tree.fundamental_cycle(g, violating[0]);
        let other = *non_tree
            .iter()
            .find(|&&e| e != violating[0])
            .expect("betti >= 2 gives two non-tree edges");
        let second = tree.fundamental_cycle(g, other);
        report.structure_ok = Some(false);
        report.failure_evidence = Some(FailureEvidence::MultipleCycles { first, second });
        return report;
    }

    let cycle_edges = prune_to_cycle(g, vertices, &edges);
    let steps = order_cycle(g, &cycle_edges);
    let fwd = loop_product(g, &steps).expect("pruned cycle is closed");
    let bwd = in_product(g, &steps);
    let unit = |x: &BigInt| x.abs().is_one();
    let mut evidence = None;
    if !unit(&fwd) && !unit(&bwd) {
        evidence = Some(FailureEvidence::NoUnitLoopProduct {
            cycle: steps.clone(),
        });
    } else {
        let dist = distance_from(g, vertices, &steps);
        for &e in &edges {
            if cycle_edges.contains(&e) {
                continue;
            }
            let ed = g.edge(e);
            let (v, label) = if dist[ed.head] > dist[ed.tail] {
                (ed.head, ed.head_label)
            } else {
                (ed.tail, ed.tail_label)
            };
            if label.abs() != 1 {
                evidence = Some(FailureEvidence::OffCycleLabel {
                    edge: e,
                    vertex: v,
                    label,
                });
                break;
            }
        }
    }
    report.structure_ok = Some(evidence.is_none());
    report.failure_evidence = evidence;
    report.unique_cycle = Some(UniqueCycle {
        steps,
        loop_product_forward: fwd,
        loop_product_backward: bwd,
    });
    report
}

/// Edges of the unique cycle of a unicyclic component, by degree-1 pruning.
/// Self-loops count twice towards degree.
fn prune_to_cycle(g: &GammaGraph, vertices: &[usize], edges: &[usize]) -> Vec<usize> {
    let mut degree = Local::new(vertices, 0usize);
    for &e in edges {
        let ed = g.edge(e);
        degree[ed.head] += 1;
        degree[ed.tail] += 1;
    }
    let mut removed = Local::new(edges, false);
    let mut queue: VecDeque<usize> = vertices.iter().copied().filter(|&v| degree[v] == 1).collect();
    while let Some(v) = queue.pop_front() {
        if degree[v] != 1 {
            continue;
        }
        let e = *g
            .incident(v)
            .iter()
            .find(|&&e| !removed[e])
            .expect("degree-1 vertex has an edge");
        removed[e] = true;
        let ed = g.edge(e);
        let w = if ed.head == v { ed.tail } else { ed.head };
        degree[v] = 0;
        degree[w] -= 1;
        if degree[w] == 1 {
            queue.push_back(w);
        }
    }
    edges.iter().copied().filter(|&e| !removed[e]).collect()
}

/// Orders cycle edges into a closed path starting at the least vertex, leaving
/// along its lowest-numbered cycle edge (forward for a self-loop).
fn order_cycle(g: &GammaGraph, cycle_edges: &[usize]) -> Vec<Step> {
    let start = cycle_edges
        .iter()
        .flat_map(|&e| [g.edge(e).head, g.edge(e).tail])
        .min()
        .expect("nonempty cycle");
    if cycle_edges.len() == 1 {
        return vec![Step {
            edge: cycle_edges[0],
            forward: true,
        }];
    }
    let on_cycle = |e: usize| cycle_edges.binary_search(&e).is_ok();
    let mut steps = Vec::with_capacity(cycle_edges.len());
    let mut v = start;
    let mut last_edge = usize::MAX;
    loop {
        let s = g
            .steps_from(v)
            .filter(|s| on_cycle(s.edge) && s.edge != last_edge)
            .min_by_key(|s| s.edge)
            .expect("cycle vertex has two cycle edges");
        steps.push(s);
        last_edge = s.edge;
        v = g.end(s);
        if v == start {
            break;
        }
    }
    steps
}

fn distance_from<'a>(g: &GammaGraph, vertices: &'a [usize], cycle: &[Step]) -> Local<'a, usize> {
    let mut dist = Local::new(vertices, usize::MAX);
    let mut queue = VecDeque::new();
    for &s in cycle {
        let v = g.start(s);
        if dist[v] == usize::MAX {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for s in g.steps_from(v) {
            let w = g.end(s);
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Integer value as `i64` when it fits.
pub fn small(x: &BigInt) -> Option<i64> {
    x.to_i64()
}

//! Quotient of a pointed graph by the radial pseudo-metric
//! `d'(x, y) = d(x, o) + d(y, o) - 2 R_o(x, y)`, where `R_o(x, y)` is the
//! largest radius `r` such that `x` and `y` stay connected once the open
//! ball `B(o, r)` is removed.
//!
//! On a simplicial quasi-tree the quotient is an R-tree that is roughly
//! isometric to the graph. Everything here works on vertices only; the
//! induced-subgraph reduction in [`PointedGraph::components_outside_ball`]
//! accounts for edge interiors.

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::{build_pointed_graph, GraphError, PointedGraph};
use crate::scalar::Scalar;
use crate::union_find::DisjointSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KerrError {
    #[error("pseudo-metric violation at ({x}, {y}, {z}): {detail}")]
    PseudoMetricViolation {
        x: usize,
        y: usize,
        z: usize,
        detail: &'static str,
    },
    #[error("quotient distance exceeds graph distance for ({x1}, {x2}): d_Y = {d_y} > d_X = {d_x}")]
    UpperBoundViolation { x1: usize, x2: usize, d_x: u32, d_y: u32 },
    #[error("right inverse is not (1 + {delta})-Lipschitz on classes ({c1}, {c2})")]
    RightInverseNotLipschitz { c1: usize, c2: usize, delta: u32 },
    #[error("not a metric: {detail}")]
    NotAMetric { detail: String },
    #[error("not a tree metric: classes ({a}, {b}) realized at {realized}, expected {expected}")]
    NotTreeMetric {
        a: usize,
        b: usize,
        expected: String,
        realized: String,
    },
    #[error("quotient metric is not the path metric of its unit-distance graph")]
    NotGraphMetric,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `R_o(x1, x2)` straight from the definition: scan radii upward until the
/// two vertices fall into different components outside the open ball.
pub fn r_o(pg: &PointedGraph, x1: usize, x2: usize) -> u32 {
    let top = pg.depth(x1).min(pg.depth(x2));
    let mut best = 0;
    for r in 1..=top {
        let joined = pg
            .components_outside_ball(r)
            .iter()
            .any(|block| block.binary_search(&x1).is_ok() && block.binary_search(&x2).is_ok());
        if !joined {
            break;
        }
        best = r;
    }
    best
}

/// All-pairs `R_o`, computed by adding vertices in order of decreasing depth
/// and recording the level at which each pair first shares a component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadialProducts {
    n: usize,
    values: Vec<u32>,
}

impl RadialProducts {
    pub fn new(pg: &PointedGraph) -> Self {
        let n = pg.vertex_count();
        let mut values = vec![0u32; n * n];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(pg.depth(v)));

        let mut dsu = DisjointSet::new(n);
        let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        let mut active = vec![false; n];
        let mut idx = 0;
        while idx < n {
            let level = pg.depth(order[idx]);
            let start = idx;
            while idx < n && pg.depth(order[idx]) == level {
                let v = order[idx];
                active[v] = true;
                values[v * n + v] = level;
                idx += 1;
            }
            for &v in &order[start..idx] {
                for &w in pg.graph().neighbors(v) {
                    if !active[w] {
                        continue;
                    }
                    let (rv, rw) = (dsu.find(v), dsu.find(w));
                    if rv == rw {
                        continue;
                    }
                    for &a in &members[rv] {
                        for &b in &members[rw] {
                            values[a * n + b] = level;
                            values[b * n + a] = level;
                        }
                    }
                    dsu.union(rv, rw);
                    let root = dsu.find(rv);
                    let other = if root == rv { rw } else { rv };
                    let moved = std::mem::take(&mut members[other]);
                    members[root].extend(moved);
                }
            }
        }
        RadialProducts { n, values }
    }

    pub fn get(&self, x1: usize, x2: usize) -> u32 {
        self.values[x1 * self.n + x2]
    }
}

/// `d'(x1, x2)` for a single pair.
pub fn d_prime(pg: &PointedGraph, x1: usize, x2: usize) -> u32 {
    pg.depth(x1) + pg.depth(x2) - 2 * r_o(pg, x1, x2)
}

/// Metric quotient: equivalence classes of vertices and the class distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientMetric {
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    dist: Vec<u32>,
    base_class: usize,
}

impl QuotientMetric {
    /// Wraps an explicit finite metric with singleton classes. The matrix is
    /// validated as a metric (zero diagonal only, symmetric, positive off the
    /// diagonal, triangle inequality).
    pub fn from_distances(matrix: &[Vec<u32>], base: usize) -> Result<Self, KerrError> {
        let k = matrix.len();
        if k == 0 || base >= k {
            return Err(KerrError::NotAMetric {
                detail: "empty matrix or base out of range".into(),
            });
        }
        if matrix.iter().any(|row| row.len() != k) {
            return Err(KerrError::NotAMetric {
                detail: "matrix is not square".into(),
            });
        }
        for i in 0..k {
            for j in 0..k {
                let d = matrix[i][j];
                if (i == j) != (d == 0) || d != matrix[j][i] {
                    return Err(KerrError::NotAMetric {
                        detail: format!("entry ({i}, {j})"),
                    });
                }
                for (l, row) in matrix.iter().enumerate() {
                    if d > matrix[i][l] + row[j] {
                        return Err(KerrError::NotAMetric {
                            detail: format!("triangle ({i}, {l}, {j})"),
                        });
                    }
                }
            }
        }
        Ok(QuotientMetric {
            classes: (0..k).map(|c| vec![c]).collect(),
            class_of: (0..k).collect(),
            dist: matrix.iter().flatten().copied().collect(),
            base_class: base,
        })
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.class_of[v]
    }

    pub fn class_map(&self) -> &[usize] {
        &self.class_of
    }

    pub fn base_class(&self) -> usize {
        self.base_class
    }

    pub fn dist(&self, c1: usize, c2: usize) -> u32 {
        self.dist[c1 * self.class_count() + c2]
    }

    pub fn dist_rows(&self) -> Vec<Vec<u32>> {
        let k = self.class_count();
        (0..k).map(|i| self.dist[i * k..(i + 1) * k].to_vec()).collect()
    }

    /// The graph on classes with an edge wherever `dist = 1`, after checking
    /// that its path metric reproduces `dist`. Quotients of graphs always
    /// pass: every integer point of a geodesic from the base class is the
    /// image of a vertex.
    pub fn unit_graph(&self) -> Result<PointedGraph, KerrError> {
        let k = self.class_count();
        let edges: Vec<_> = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .filter(|&(i, j)| self.dist(i, j) == 1)
            .collect();
        let g = build_pointed_graph(k, &edges, self.base_class).map_err(|_| KerrError::NotGraphMetric)?;
        for i in 0..k {
            for j in 0..k {
                if g.dist(i, j) != self.dist(i, j) {
                    return Err(KerrError::NotGraphMetric);
                }
            }
        }
        Ok(g)
    }
}

/// Builds the metric quotient of `pg` by `d' = 0`, checking the
/// pseudo-metric axioms of `d'` over every vertex triple along the way.
pub fn build_quotient(pg: &PointedGraph) -> Result<QuotientMetric, KerrError> {
    let n = pg.vertex_count();
    let products = RadialProducts::new(pg);
    let mut dp = vec![0u32; n * n];
    for x in 0..n {
        for y in 0..n {
            let r = products.get(x, y);
            let sum = pg.depth(x) + pg.depth(y);
            if 2 * r > sum {
                return Err(KerrError::PseudoMetricViolation {
                    x,
                    y,
                    z: y,
                    detail: "negative value",
                });
            }
            dp[x * n + y] = sum - 2 * r;
        }
    }
    for x in 0..n {
        if dp[x * n + x] != 0 {
            return Err(KerrError::PseudoMetricViolation {
                x,
                y: x,
                z: x,
                detail: "nonzero diagonal",
            });
        }
        for y in 0..n {
            let dxy = dp[x * n + y];
            if dxy != dp[y * n + x] {
                return Err(KerrError::PseudoMetricViolation {
                    x,
                    y,
                    z: y,
                    detail: "asymmetric",
                });
            }
            for z in 0..n {
                if dxy > dp[x * n + z] + dp[z * n + y] {
                    return Err(KerrError::PseudoMetricViolation {
                        x,
                        y,
                        z,
                        detail: "triangle inequality",
                    });
                }
            }
        }
    }

    // d' is a pseudo-metric, so "first vertex at d' = 0" is a class representative
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        match (0..x).find(|&y| dp[x * n + y] == 0) {
            Some(y) => {
                class_of[x] = class_of[y];
                classes[class_of[y]].push(x);
            }
            None => {
                class_of[x] = classes.len();
                classes.push(vec![x]);
            }
        }
    }
    let k = classes.len();
    let mut dist = vec![0u32; k * k];
    for (i, ci) in classes.iter().enumerate() {
        for (j, cj) in classes.iter().enumerate() {
            dist[i * k + j] = dp[ci[0] * n + cj[0]];
        }
    }
    for x in 0..n {
        for y in 0..n {
            if dist[class_of[x] * k + class_of[y]] != dp[x * n + y] {
                return Err(KerrError::PseudoMetricViolation {
                    x,
                    y,
                    z: y,
                    detail: "class distance depends on representative",
                });
            }
        }
    }
    let base_class = class_of[pg.basepoint()];
    Ok(QuotientMetric {
        classes,
        class_of,
        dist,
        base_class,
    })
}

/// Largest value of `d(x,y) + d(z,w) - max(d(x,z) + d(y,w), d(x,w) + d(y,z))`
/// over all quadruples. Zero certifies a tree metric; degenerate quadruples
/// already give zero, so the result is never negative.
pub fn four_point_defect(qm: &QuotientMetric) -> i64 {
    let k = qm.class_count();
    let d = |a: usize, b: usize| qm.dist(a, b) as i64;
    let mut defect = 0i64;
    for x in 0..k {
        for y in x + 1..k {
            for z in y + 1..k {
                for w in z + 1..k {
                    let mut sums = [d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)];
                    sums.sort_unstable();
                    defect = defect.max(sums[2] - sums[1]);
                }
            }
        }
    }
    defect
}

/// `Δ* = max (d_X - d_Y)` over vertex pairs, after checking `d_Y ≤ d_X`.
pub fn delta_star(pg: &PointedGraph, qm: &QuotientMetric) -> Result<u32, KerrError> {
    let n = pg.vertex_count();
    let mut delta = 0;
    for x1 in 0..n {
        for x2 in 0..n {
            let d_x = pg.dist(x1, x2);
            let d_y = qm.dist(qm.class_of(x1), qm.class_of(x2));
            if d_y > d_x {
                return Err(KerrError::UpperBoundViolation { x1, x2, d_x, d_y });
            }
            delta = delta.max(d_x - d_y);
        }
    }
    Ok(delta)
}

/// Right inverse of the quotient map on vertex classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RightInverse {
    representative: Vec<usize>,
}

impl RightInverse {
    pub fn of(&self, class: usize) -> usize {
        self.representative[class]
    }

    pub fn representatives(&self) -> &[usize] {
        &self.representative
    }

    /// `h(g(x))`.
    pub fn retract(&self, qm: &QuotientMetric, x: usize) -> usize {
        self.representative[qm.class_of(x)]
    }

    /// `max_x d(x, h(g(x)))`.
    pub fn displacement(&self, pg: &PointedGraph, qm: &QuotientMetric) -> u32 {
        (0..pg.vertex_count())
            .map(|x| pg.dist(x, self.retract(qm, x)))
            .max()
            .unwrap_or(0)
    }
}

/// Picks the smallest vertex of each class and checks that the result is
/// `(1 + Δ*)`-Lipschitz from the quotient back to the graph.
pub fn right_inverse_h(pg: &PointedGraph, qm: &QuotientMetric) -> Result<RightInverse, KerrError> {
    let representative: Vec<usize> = qm.classes().iter().map(|c| c[0]).collect();
    debug_assert_eq!(representative[qm.base_class()], pg.basepoint());
    let delta = delta_star(pg, qm)?;
    let k = qm.class_count();
    for c1 in 0..k {
        for c2 in 0..k {
            if pg.dist(representative[c1], representative[c2]) > (1 + delta) * qm.dist(c1, c2) {
                return Err(KerrError::RightInverseNotLipschitz { c1, c2, delta });
            }
        }
    }
    Ok(RightInverse { representative })
}

/// Finite weighted tree whose path metric reproduces a tree metric on classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRealization<T> {
    node_class: Vec<Option<usize>>,
    adjacency: Vec<Vec<(usize, T)>>,
    node_of_class: Vec<usize>,
}

impl<T: Scalar> TreeRealization<T> {
    pub fn node_count(&self) -> usize {
        self.node_class.len()
    }

    /// Class embedded at `node`, or `None` for a synthesized branch node.
    pub fn node_class(&self, node: usize) -> Option<usize> {
        self.node_class[node]
    }

    pub fn node_of_class(&self, class: usize) -> usize {
        self.node_of_class[class]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn synthesized_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&v| self.node_class[v].is_none())
            .collect()
    }

    /// Edges as `(u, v, length)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            for (v, len) in nbrs {
                if u < *v {
                    out.push((u, *v, len.clone()));
                }
            }
        }
        out
    }

    /// Connected with `nodes - 1` edges.
    pub fn is_tree(&self) -> bool {
        let nodes = self.node_count();
        if self.edges().len() + 1 != nodes {
            return false;
        }
        self.distances_from(0).iter().all(Option::is_some)
    }

    fn distances_from(&self, source: usize) -> Vec<Option<T>> {
        let mut dist: Vec<Option<T>> = vec![None; self.node_count()];
        dist[source] = Some(T::zero());
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].clone().expect("queued nodes have distances");
            for (v, len) in &self.adjacency[u] {
                if dist[*v].is_none() {
                    dist[*v] = Some(du.clone() + len.clone());
                    queue.push_back(*v);
                }
            }
        }
        dist
    }

    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.node_count()];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for (v, _) in &self.adjacency[u] {
                if parent[*v] == usize::MAX {
                    parent[*v] = u;
                    queue.push_back(*v);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    fn edge_length(&self, u: usize, v: usize) -> T {
        self.adjacency[u]
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, l)| l.clone())
            .expect("edge exists")
    }

    fn add_node(&mut self, class: Option<usize>) -> usize {
        self.node_class.push(class);
        self.adjacency.push(Vec::new());
        self.node_class.len() - 1
    }

    fn link(&mut self, u: usize, v: usize, len: T) {
        self.adjacency[u].push((v, len.clone()));
        self.adjacency[v].push((u, len));
    }

    fn unlink(&mut self, u: usize, v: usize) {
        self.adjacency[u].retain(|(w, _)| *w != v);
        self.adjacency[v].retain(|(w, _)| *w != u);
    }

    /// Path length between the nodes of two classes.
    pub fn class_distance(&self, a: usize, b: usize) -> T {
        self.distances_from(self.node_of_class[a])[self.node_of_class[b]]
            .clone()
            .expect("tree is connected")
    }
}

/// Inserts classes by increasing distance from the base class (ties by class
/// index). Each new class hangs off the point of the current tree at
/// distance `max_a (a|c)_base` from the base along the path to the
/// maximizing `a`; a branch node is synthesized when that point lies inside
/// an edge. The finished realization is checked pair by pair.
pub fn realize_tree<T: Scalar>(qm: &QuotientMetric) -> Result<TreeRealization<T>, KerrError> {
    let k = qm.class_count();
    let base = qm.base_class();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| (qm.dist(base, c), c));
    let d = |a: usize, b: usize| T::from_int(qm.dist(a, b) as i64);
    let two = T::from_int(2);

    let mut tr: TreeRealization<T> = TreeRealization {
        node_class: Vec::new(),
        adjacency: Vec::new(),
        node_of_class: vec![usize::MAX; k],
    };
    let root = tr.add_node(Some(base));
    tr.node_of_class[base] = root;
    let mut inserted = vec![base];

    for &c in order.iter().skip(1) {
        let mut best: Option<(usize, T)> = None;
        for &a in &inserted {
            let product = (d(base, a) + d(base, c) - d(a, c)) / two.clone();
            if best.as_ref().is_none_or(|(_, m)| product > *m) {
                best = Some((a, product));
            }
        }
        let (anchor, along) = best.expect("base is inserted");
        let pendant = d(base, c) - along.clone();
        if pendant < T::zero() || along < T::zero() {
            return Err(not_tree(qm, base, c, &along));
        }

        // locate the attachment point on the path base -> anchor
        let path = tr.path(root, tr.node_of_class[anchor]);
        let mut walked = T::zero();
        let mut attach = None;
        for pair in path.windows(2) {
            let (u, w) = (pair[0], pair[1]);
            if walked == along {
                attach = Some(u);
                break;
            }
            let len = tr.edge_length(u, w);
            let next = walked.clone() + len.clone();
            if along < next {
                let offset = along.clone() - walked.clone();
                tr.unlink(u, w);
                let mid = tr.add_node(None);
                tr.link(u, mid, offset.clone());
                tr.link(mid, w, len - offset);
                attach = Some(mid);
                break;
            }
            walked = next;
        }
        let attach = match attach {
            Some(node) => node,
            None if walked == along => *path.last().expect("path is nonempty"),
            None => return Err(not_tree(qm, base, c, &along)),
        };

        if pendant.negligible() {
            if tr.node_class[attach].is_some() {
                return Err(not_tree(qm, anchor, c, &T::zero()));
            }
            tr.node_class[attach] = Some(c);
            tr.node_of_class[c] = attach;
        } else {
            let node = tr.add_node(Some(c));
            tr.link(attach, node, pendant);
            tr.node_of_class[c] = node;
        }
        inserted.push(c);
    }

    for a in 0..k {
        let from_a = tr.distances_from(tr.node_of_class[a]);
        for b in 0..k {
            let realized = from_a[tr.node_of_class[b]].clone().expect("tree is connected");
            if realized != d(a, b) {
                return Err(KerrError::NotTreeMetric {
                    a,
                    b,
                    expected: qm.dist(a, b).to_string(),
                    realized: realized.to_exact_string(),
                });
            }
        }
    }
    Ok(tr)
}

fn not_tree<T: Scalar>(qm: &QuotientMetric, a: usize, b: usize, realized: &T) -> KerrError {
    KerrError::NotTreeMetric {
        a,
        b,
        expected: qm.dist(a, b).to_string(),
        realized: realized.to_exact_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchCheck {
    pub holds: bool,
    /// Nodes of degree at least three.
    pub branch_nodes: Vec<usize>,
    /// Synthesized (non-class) nodes among `branch_nodes`.
    pub offending: Vec<usize>,
}

/// Whether every node of degree ≥ 3 carries a class.
pub fn branch_points_in_image<T: Scalar>(tr: &TreeRealization<T>) -> BranchCheck {
    let branch_nodes: Vec<usize> = (0..tr.node_count()).filter(|&v| tr.degree(v) >= 3).collect();
    let offending: Vec<usize> = branch_nodes
        .iter()
        .copied()
        .filter(|&v| tr.node_class(v).is_none())
        .collect();
    BranchCheck {
        holds: offending.is_empty(),
        branch_nodes,
        offending,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{cycle, path, random_tree, seeded_rng, star, subdivide};
    use crate::Rational;

    #[test]
    fn radial_products_small() {
        let c4 = cycle(4);
        for x in 0..4 {
            assert_eq!(r_o(&c4, x, 0), 0);
        }
        assert_eq!(r_o(&c4, 1, 3), 1);
        assert_eq!(r_o(&c4, 2, 2), 2);
        assert_eq!(d_prime(&c4, 1, 3), 0);
        let rp = RadialProducts::new(&c4);
        assert_eq!(rp.get(1, 3), 1);
        assert_eq!(rp.get(0, 0), 0);
    }

    #[test]
    fn incremental_matches_definition() {
        let mut rng = seeded_rng(7);
        for n in [6, 11, 17] {
            let pg = crate::corpus::random_connected(n, n / 2, &mut rng);
            let rp = RadialProducts::new(&pg);
            for x in 0..n {
                for y in 0..n {
                    assert_eq!(rp.get(x, y), r_o(&pg, x, y), "pair ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn gromov_product_on_trees() {
        let mut rng = seeded_rng(3);
        for _ in 0..20 {
            let t = random_tree(40, &mut rng);
            let rp = RadialProducts::new(&t);
            for x in 0..40 {
                for y in 0..40 {
                    let gromov = (t.depth(x) + t.depth(y) - t.dist(x, y)) / 2;
                    assert_eq!(rp.get(x, y), gromov);
                    assert_eq!(d_prime(&t, x, y), t.dist(x, y));
                }
            }
        }
    }

    #[test]
    fn quotients_of_small_graphs() {
        let p3 = build_quotient(&path(3)).unwrap();
        assert_eq!(p3.classes(), &[vec![0], vec![1], vec![2]]);
        assert_eq!(p3.dist(0, 2), 2);

        let c4 = build_quotient(&cycle(4)).unwrap();
        assert_eq!(c4.classes(), &[vec![0], vec![1, 3], vec![2]]);
        assert_eq!(c4.dist_rows(), vec![vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]]);

        let c5 = build_quotient(&cycle(5)).unwrap();
        assert_eq!(c5.classes(), &[vec![0], vec![1, 4], vec![2, 3]]);
        assert_eq!(c5.dist_rows(), vec![vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]]);
    }

    #[test]
    fn defect_and_delta() {
        let c4 = cycle(4);
        let raw: Vec<Vec<u32>> = (0..4).map(|i| (0..4).map(|j| c4.dist(i, j)).collect()).collect();
        assert_eq!(four_point_defect(&QuotientMetric::from_distances(&raw, 0).unwrap()), 2);
        let q4 = build_quotient(&c4).unwrap();
        assert_eq!(four_point_defect(&q4), 0);
        assert_eq!(delta_star(&c4, &q4), Ok(2));
        let c5 = cycle(5);
        assert_eq!(delta_star(&c5, &build_quotient(&c5).unwrap()), Ok(2));
        let single = QuotientMetric::from_distances(&[vec![0]], 0).unwrap();
        assert_eq!(four_point_defect(&single), 0);
        let s = star(3);
        assert_eq!(delta_star(&s, &build_quotient(&s).unwrap()), Ok(0));
    }

    #[test]
    fn right_inverse_picks_smallest() {
        let c4 = cycle(4);
        let q = build_quotient(&c4).unwrap();
        let h = right_inverse_h(&c4, &q).unwrap();
        assert_eq!(h.of(q.class_of(3)), 1);
        assert_eq!(h.of(q.base_class()), 0);
        assert_eq!(h.displacement(&c4, &q), 2);
        let t = path(4);
        let qt = build_quotient(&t).unwrap();
        let ht = right_inverse_h(&t, &qt).unwrap();
        assert_eq!(ht.representatives(), &[0, 1, 2, 3]);
    }

    #[test]
    fn realization_examples() {
        let p = QuotientMetric::from_distances(&[vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]], 0).unwrap();
        let tr = realize_tree::<Rational>(&p).unwrap();
        assert!(tr.synthesized_nodes().is_empty());
        assert_eq!(tr.node_count(), 3);

        // base at distance 1 from a, b, c which are pairwise at distance 2
        let star = vec![vec![0, 1, 1, 1], vec![1, 0, 2, 2], vec![1, 2, 0, 2], vec![1, 2, 2, 0]];
        let tr = realize_tree::<Rational>(&QuotientMetric::from_distances(&star, 0).unwrap()).unwrap();
        assert!(tr.synthesized_nodes().is_empty());
        assert!(branch_points_in_image(&tr).holds);

        let fork = vec![vec![0, 3, 3], vec![3, 0, 2], vec![3, 2, 0]];
        let tr = realize_tree::<Rational>(&QuotientMetric::from_distances(&fork, 0).unwrap()).unwrap();
        let synth = tr.synthesized_nodes();
        assert_eq!(synth.len(), 1);
        assert!(tr.is_tree());
        let dist_from_p = tr.distances_from(tr.node_of_class(0));
        assert_eq!(dist_from_p[synth[0]], Some(Rational::from_int(2)));
        let check = branch_points_in_image(&tr);
        assert!(!check.holds);
        assert_eq!(check.offending, synth);
    }

    #[test]
    fn half_integer_branch_point() {
        // triangle metric 1,1,1 has its median at distance 1/2 from each point
        let tri = vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
        let tr = realize_tree::<Rational>(&QuotientMetric::from_distances(&tri, 0).unwrap()).unwrap();
        assert_eq!(tr.synthesized_nodes().len(), 1);
        assert_eq!(tr.class_distance(1, 2), Rational::from_int(1));
        assert!(realize_tree::<f64>(&QuotientMetric::from_distances(&tri, 0).unwrap()).is_ok());
    }

    #[test]
    fn non_tree_metric_rejected() {
        let c4 = cycle(4);
        let raw: Vec<Vec<u32>> = (0..4).map(|i| (0..4).map(|j| c4.dist(i, j)).collect()).collect();
        let qm = QuotientMetric::from_distances(&raw, 0).unwrap();
        assert!(matches!(
            realize_tree::<Rational>(&qm),
            Err(KerrError::NotTreeMetric { .. })
        ));
    }

    #[test]
    fn from_distances_validation() {
        assert!(QuotientMetric::from_distances(&[vec![0, 1], vec![2, 0]], 0).is_err());
        assert!(QuotientMetric::from_distances(&[vec![0, 0], vec![0, 0]], 0).is_err());
        assert!(QuotientMetric::from_distances(&[vec![0, 1, 5], vec![1, 0, 1], vec![5, 1, 0]], 0).is_err());
        assert!(QuotientMetric::from_distances(&[vec![0]], 1).is_err());
    }

    #[test]
    fn unit_graph_of_quotient() {
        let q = build_quotient(&cycle(6)).unwrap();
        let g = q.unit_graph().unwrap();
        assert_eq!(g.vertex_count(), q.class_count());
        let tri = QuotientMetric::from_distances(&[vec![0, 2], vec![2, 0]], 0).unwrap();
        assert_eq!(tri.unit_graph(), Err(KerrError::NotGraphMetric));
    }

    /// Subdividing every edge into `k + 1` pieces scales the 1-skeleton by
    /// `k + 1`; the vertex-level `d'` must scale with it.
    #[test]
    fn subdivision_oracle() {
        let mut rng = seeded_rng(21);
        let mut graphs = vec![cycle(4), cycle(5), cycle(7), crate::corpus::grid(2, 4)];
        for _ in 0..6 {
            graphs.push(crate::corpus::random_connected(10, 5, &mut rng));
        }
        for pg in graphs {
            let n = pg.vertex_count();
            let base = RadialProducts::new(&pg);
            for k in 1..=3u32 {
                let sub = subdivide(&pg, k as usize);
                let rp = RadialProducts::new(&sub);
                for x in 0..n {
                    for y in 0..n {
                        let dp = pg.depth(x) + pg.depth(y) - 2 * base.get(x, y);
                        let dp_sub = sub.depth(x) + sub.depth(y) - 2 * rp.get(x, y);
                        assert_eq!(dp_sub, (k + 1) * dp);
                    }
                }
                for r in 0..=pg.max_depth() {
                    let coarse = pg.components_outside_ball(r);
                    let fine: Vec<Vec<usize>> = sub
                        .components_outside_ball(r * (k + 1))
                        .into_iter()
                        .map(|b| b.into_iter().filter(|&v| v < n).collect::<Vec<_>>())
                        .filter(|b| !b.is_empty())
                        .collect();
                    assert_eq!(coarse, fine);
                }
            }
        }
    }
}

//! Deterministic graph families and seeded random samplers.
//!
//! All randomness goes through [`seeded_rng`] (xoshiro256++), so a seed fully
//! determines every sampled graph and vector.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::free_space::FreeVector;
use crate::graph::{build_pointed_graph, PointedGraph};
use crate::scalar::Scalar;

pub type CorpusRng = Xoshiro256PlusPlus;

pub fn seeded_rng(seed: u64) -> CorpusRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn path(n: usize) -> PointedGraph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    build_pointed_graph(n, &edges, 0).expect("path is connected")
}

/// `C_n` for `n ≥ 3`, basepoint 0.
pub fn cycle(n: usize) -> PointedGraph {
    assert!(n >= 3, "cycles need at least three vertices");
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    build_pointed_graph(n, &edges, 0).expect("cycle is connected")
}

/// Star with center 0 and `leaves` leaves.
pub fn star(leaves: usize) -> PointedGraph {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    build_pointed_graph(leaves + 1, &edges, 0).expect("star is connected")
}

/// `rows × cols` grid; vertex `(r, c)` is `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> PointedGraph {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    build_pointed_graph(rows * cols, &edges, 0).expect("grid is connected")
}

/// Random recursive tree: vertex `i` attaches to a uniform earlier vertex.
pub fn random_tree(n: usize, rng: &mut CorpusRng) -> PointedGraph {
    let edges: Vec<_> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    build_pointed_graph(n, &edges, 0).expect("tree is connected")
}

/// Random spanning tree plus up to `extra` additional distinct edges,
/// basepoint drawn uniformly.
pub fn random_connected(n: usize, extra: usize, rng: &mut CorpusRng) -> PointedGraph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    let mut missing: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !edges.contains(&(u, v)))
        .collect();
    missing.shuffle(rng);
    edges.extend(missing.into_iter().take(extra));
    let basepoint = rng.gen_range(0..n);
    build_pointed_graph(n, &edges, basepoint).expect("spanning tree keeps it connected")
}

/// Replaces every edge by a path with `k` interior vertices. Original vertices
/// keep their indices; the basepoint is preserved.
pub fn subdivide(pg: &PointedGraph, k: usize) -> PointedGraph {
    let n = pg.vertex_count();
    let mut next = n;
    let mut edges = Vec::new();
    for &(u, v) in pg.edges() {
        let mut prev = u;
        for _ in 0..k {
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
        edges.push((prev, v));
    }
    build_pointed_graph(next, &edges, pg.basepoint()).expect("subdivision is connected")
}

/// Nonzero rational `p/q` with `|p| ≤ 5` and `1 ≤ q ≤ 4`.
pub fn random_rational<T: Scalar>(rng: &mut CorpusRng) -> T {
    let mut p = rng.gen_range(-5i64..=4);
    if p >= 0 {
        p += 1;
    }
    T::ratio(p, rng.gen_range(1..=4))
}

/// Random vector supported on `1..=max_support` distinct non-basepoint vertices.
/// Single-vertex graphs yield the zero vector.
pub fn random_free_vector<T: Scalar>(pg: &PointedGraph, max_support: usize, rng: &mut CorpusRng) -> FreeVector<T> {
    let mut candidates: Vec<usize> = (0..pg.vertex_count()).filter(|&v| v != pg.basepoint()).collect();
    candidates.shuffle(rng);
    let size = rng.gen_range(1..=max_support.max(1)).min(candidates.len());
    FreeVector::from_pairs(
        pg.basepoint(),
        candidates[..size].iter().map(|&v| (v, random_rational(rng))),
    )
}

//! Uncapacitated min-cost transshipment by successive shortest paths.
//!
//! Arc costs are integers, so Dijkstra with Johnson potentials runs on exact
//! `i64` distances; only the pushed amounts live in the scalar type.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
struct Arc<T> {
    to: usize,
    cost: i64,
    /// `None` means unbounded.
    cap: Option<T>,
    twin: usize,
}

/// Residual network over `n` nodes plus a super source and a super sink.
#[derive(Debug, Clone)]
pub struct Transshipment<T> {
    n: usize,
    arcs: Vec<Arc<T>>,
    out: Vec<Vec<usize>>,
    /// Index of the forward arc of each undirected edge, in insertion order.
    edge_arcs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransshipmentSolution<T> {
    pub cost: T,
    /// Net flow along each undirected edge `(u, v)` in the `u → v` direction.
    pub edge_flow: Vec<T>,
    pub augmentations: usize,
}

impl<T: Scalar> Transshipment<T> {
    pub fn new(n: usize) -> Self {
        Transshipment {
            n,
            arcs: Vec::new(),
            out: vec![Vec::new(); n + 2],
            edge_arcs: Vec::new(),
        }
    }

    fn push_arc(&mut self, from: usize, to: usize, cost: i64, cap: Option<T>, twin_cap: Option<T>) -> usize {
        let a = self.arcs.len();
        self.arcs.push(Arc {
            to,
            cost,
            cap,
            twin: a + 1,
        });
        self.arcs.push(Arc {
            to: from,
            cost: -cost,
            cap: twin_cap,
            twin: a,
        });
        self.out[from].push(a);
        self.out[to].push(a + 1);
        a
    }

    /// Undirected edge with unbounded capacity in both directions.
    pub fn add_edge(&mut self, u: usize, v: usize, cost: i64) {
        let forward = self.push_arc(u, v, cost, None, Some(T::zero()));
        let backward = self.push_arc(v, u, cost, None, Some(T::zero()));
        self.edge_arcs.push((forward, backward));
    }

    fn flow_on(&self, arc: usize) -> T {
        self.arcs[self.arcs[arc].twin].cap.clone().unwrap_or_else(T::zero)
    }

    /// Routes `supply[v]` units out of every node (negative = demand).
    /// Supplies must sum to zero.
    pub fn solve(mut self, supply: &[T]) -> TransshipmentSolution<T> {
        assert_eq!(supply.len(), self.n);
        let (source, sink) = (self.n, self.n + 1);
        for (v, s) in supply.iter().enumerate() {
            if s.strictly_positive() {
                self.push_arc(source, v, 0, Some(s.clone()), Some(T::zero()));
            } else if (-s.clone()).strictly_positive() {
                self.push_arc(v, sink, 0, Some(-s.clone()), Some(T::zero()));
            }
        }

        let nodes = self.n + 2;
        let mut potential = vec![0i64; nodes];
        let mut cost = T::zero();
        let mut augmentations = 0;
        loop {
            let mut dist = vec![i64::MAX; nodes];
            let mut via = vec![usize::MAX; nodes];
            let mut heap = BinaryHeap::new();
            dist[source] = 0;
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &a in &self.out[u] {
                    let arc = &self.arcs[a];
                    if arc.cap.as_ref().is_some_and(|c| !c.strictly_positive()) {
                        continue;
                    }
                    let reduced = arc.cost + potential[u] - potential[arc.to];
                    debug_assert!(reduced >= 0, "potentials keep reduced costs nonnegative");
                    let nd = d + reduced;
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        via[arc.to] = a;
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[sink] == i64::MAX {
                break;
            }
            // capping at the sink distance keeps reduced costs nonnegative for
            // nodes the search did not settle
            let cap = dist[sink];
            for v in 0..nodes {
                potential[v] += dist[v].min(cap);
            }

            let mut amount: Option<T> = None;
            let mut path_cost = 0i64;
            let mut v = sink;
            while v != source {
                let a = via[v];
                if let Some(c) = &self.arcs[a].cap {
                    if amount.as_ref().is_none_or(|m| c < m) {
                        amount = Some(c.clone());
                    }
                }
                path_cost += self.arcs[a].cost;
                v = self.arcs[self.arcs[a].twin].to;
            }
            let amount = amount.expect("source arcs are capacitated");
            let mut v = sink;
            while v != source {
                let a = via[v];
                let twin = self.arcs[a].twin;
                if let Some(c) = self.arcs[a].cap.as_mut() {
                    *c = c.clone() - amount.clone();
                }
                if let Some(c) = self.arcs[twin].cap.as_mut() {
                    *c = c.clone() + amount.clone();
                }
                v = self.arcs[twin].to;
            }
            cost = cost + amount * T::from_int(path_cost);
            augmentations += 1;
        }

        let edge_flow = self
            .edge_arcs
            .iter()
            .map(|&(fwd, bwd)| self.flow_on(fwd) - self.flow_on(bwd))
            .collect();
        TransshipmentSolution {
            cost,
            edge_flow,
            augmentations,
        }
    }
}

//! Finite connected graphs with a basepoint and their edge-path metric.
//!
//! Distances are exact integers held in a dense `n × n` matrix; the
//! intended scale is a few thousand vertices at most.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::union_find::DisjointSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("invalid edge ({u}, {v}): {reason}")]
    InvalidEdge { u: usize, v: usize, reason: &'static str },
    #[error("graph is disconnected: vertex {vertex} is unreachable from vertex 0")]
    DisconnectedGraph { vertex: usize },
    #[error("basepoint {basepoint} out of range for {n} vertices")]
    InvalidBasepoint { basepoint: usize, n: usize },
}

/// Simple undirected graph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Validates the edge list and connectivity. Edges are stored as
    /// `(min, max)` pairs in sorted order.
    pub fn new(n: usize, edge_list: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut edges = BTreeSet::new();
        for &(u, v) in edge_list {
            if u >= n || v >= n {
                return Err(GraphError::InvalidEdge {
                    u,
                    v,
                    reason: "vertex out of range",
                });
            }
            if u == v {
                return Err(GraphError::InvalidEdge { u, v, reason: "loop" });
            }
            if !edges.insert((u.min(v), u.max(v))) {
                return Err(GraphError::InvalidEdge {
                    u,
                    v,
                    reason: "duplicate edge",
                });
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let graph = Graph { n, edges, adjacency };
        let from_zero = graph.bfs(0);
        if let Some(vertex) = from_zero.iter().position(|d| *d == u32::MAX) {
            return Err(GraphError::DisconnectedGraph { vertex });
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Hop distances from `source`; unreachable vertices get `u32::MAX`.
    pub fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = VecDeque::from([source]);
        dist[source] = 0;
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// A connected graph with a basepoint `o` and its full distance matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointedGraph {
    graph: Graph,
    basepoint: usize,
    dist: Vec<u32>,
}

/// On-disk graph format: `{"n": 3, "edges": [[0,1],[1,2]], "basepoint": 0}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub basepoint: usize,
}

impl PointedGraph {
    pub fn new(graph: Graph, basepoint: usize) -> Result<Self, GraphError> {
        let n = graph.vertex_count();
        if basepoint >= n {
            return Err(GraphError::InvalidBasepoint { basepoint, n });
        }
        let mut dist = Vec::with_capacity(n * n);
        for source in 0..n {
            dist.extend(graph.bfs(source));
        }
        Ok(PointedGraph { graph, basepoint, dist })
    }

    /// Same graph, different basepoint; reuses the distance matrix.
    pub fn with_basepoint(&self, basepoint: usize) -> Result<Self, GraphError> {
        let n = self.vertex_count();
        if basepoint >= n {
            return Err(GraphError::InvalidBasepoint { basepoint, n });
        }
        Ok(PointedGraph {
            graph: self.graph.clone(),
            basepoint,
            dist: self.dist.clone(),
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        self.graph.edges()
    }

    pub fn dist(&self, u: usize, v: usize) -> u32 {
        self.dist[u * self.vertex_count() + v]
    }

    /// `d(o, v)`.
    pub fn depth(&self, v: usize) -> u32 {
        self.dist(self.basepoint, v)
    }

    pub fn max_depth(&self) -> u32 {
        (0..self.vertex_count()).map(|v| self.depth(v)).max().unwrap_or(0)
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    /// `{v : d(o, v) < radius}`.
    pub fn open_ball(&self, radius: u32) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.depth(v) < radius).collect()
    }

    /// Connected components of the subgraph induced on `{v : d(o, v) ≥ radius}`.
    ///
    /// Two such vertices are joined in the 1-skeleton minus the open ball iff
    /// they are joined in this induced subgraph: an edge with an endpoint
    /// inside the ball only contributes a dangling segment.
    ///
    /// Blocks are sorted internally and ordered by their smallest vertex.
    pub fn components_outside_ball(&self, radius: u32) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut dsu = DisjointSet::new(n);
        for &(u, v) in self.edges() {
            if self.depth(u) >= radius && self.depth(v) >= radius {
                dsu.union(u, v);
            }
        }
        let mut block_of_root = vec![usize::MAX; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for v in (0..n).filter(|&v| self.depth(v) >= radius) {
            let root = dsu.find(v);
            if block_of_root[root] == usize::MAX {
                block_of_root[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[block_of_root[root]].push(v);
        }
        blocks
    }

    pub fn from_file(file: &GraphFile) -> Result<Self, GraphError> {
        let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = Graph::new(file.n, &edges)?;
        PointedGraph::new(graph, file.basepoint)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.vertex_count(),
            edges: self.edges().iter().map(|&(u, v)| [u, v]).collect(),
            basepoint: self.basepoint,
        }
    }
}

/// Convenience constructor used throughout tests and the corpus.
pub fn build_pointed_graph(
    vertex_count: usize,
    edge_list: &[(usize, usize)],
    basepoint: usize,
) -> Result<PointedGraph, GraphError> {
    PointedGraph::new(Graph::new(vertex_count, edge_list)?, basepoint)
}

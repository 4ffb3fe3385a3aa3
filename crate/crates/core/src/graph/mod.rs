//! Bipartite graphs, balanced bicliques and instance generators.
//!
//! The two sides are indexed separately and 0-based: left vertices are
//! `0..n_u`, right vertices `0..n_v`. Adjacency is stored as one bitset row
//! per vertex on each side, so `adj(i, j)` is a single bit lookup.

mod generate;
mod io;

pub use generate::{complete, empty, planted_instance, random_bipartite, PlantedSolution};
pub use io::{parse_graph, serialize_graph, serialize_graph_with_comments};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable bipartite graph `(U, V, E)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_u: usize,
    n_v: usize,
    edges: Vec<(usize, usize)>,
    u_rows: Vec<FixedBitSet>,
    v_rows: Vec<FixedBitSet>,
}

impl BipartiteGraph {
    /// Validates indices and removes duplicate edges.
    pub fn new(n_u: usize, n_v: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_u == 0 || n_v == 0 {
            return Err(Error::EmptySide { n_u, n_v });
        }
        let mut list = Vec::new();
        for (i, j) in edges {
            if i >= n_u || j >= n_v {
                return Err(Error::EdgeOutOfRange { i, j, n_u, n_v });
            }
            list.push((i, j));
        }
        Ok(Self::from_valid_edges(n_u, n_v, list))
    }

    /// Builds a graph from edges already known to be in range. Sides may be
    /// empty here, which happens for induced subgraphs of rounding survivors.
    fn from_valid_edges(n_u: usize, n_v: usize, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut u_rows = vec![FixedBitSet::with_capacity(n_v); n_u];
        let mut v_rows = vec![FixedBitSet::with_capacity(n_u); n_v];
        for &(i, j) in &edges {
            u_rows[i].insert(j);
            v_rows[j].insert(i);
        }
        Self {
            n_u,
            n_v,
            edges,
            u_rows,
            v_rows,
        }
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    /// Larger side size; the `n` of a balanced instance.
    pub fn n(&self) -> usize {
        self.n_u.max(self.n_v)
    }

    /// Sorted, deduplicated edge list.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn non_edge_count(&self) -> usize {
        self.n_u * self.n_v - self.edges.len()
    }

    /// Out-of-range indices are reported as non-adjacent.
    pub fn adj(&self, i: usize, j: usize) -> bool {
        i < self.n_u && j < self.n_v && self.u_rows[i].contains(j)
    }

    /// Neighbours of left vertex `i`, as a bitset over `0..n_v`.
    pub fn u_neighbors(&self, i: usize) -> &FixedBitSet {
        &self.u_rows[i]
    }

    /// Neighbours of right vertex `j`, as a bitset over `0..n_u`.
    pub fn v_neighbors(&self, j: usize) -> &FixedBitSet {
        &self.v_rows[j]
    }

    pub fn u_degree(&self, i: usize) -> usize {
        self.u_rows[i].count_ones(..)
    }

    pub fn v_degree(&self, j: usize) -> usize {
        self.v_rows[j].count_ones(..)
    }

    /// Edge and non-edge counts `(F, Q)` inside `left x right`.
    ///
    /// Indices are assumed valid and duplicate-free.
    pub fn induced_counts(&self, left: &[usize], right: &[usize]) -> (usize, usize) {
        let mut mask = FixedBitSet::with_capacity(self.n_v);
        for &j in right {
            mask.insert(j);
        }
        let f: usize = left
            .iter()
            .map(|&i| self.u_rows[i].intersection_count(&mask))
            .sum();
        (f, left.len() * right.len() - f)
    }

    /// Subgraph induced by `left x right`, relabelled so that `left[a]`
    /// becomes `a` and `right[b]` becomes `b`.
    pub fn induced(&self, left: &[usize], right: &[usize]) -> BipartiteGraph {
        let mut edges = Vec::new();
        for (a, &i) in left.iter().enumerate() {
            for (b, &j) in right.iter().enumerate() {
                if self.adj(i, j) {
                    edges.push((a, b));
                }
            }
        }
        Self::from_valid_edges(left.len(), right.len(), edges)
    }

    /// True iff `|left| = |right|` and every cross pair is an edge.
    /// Out-of-range indices yield `false`.
    pub fn verify_biclique(&self, left: &[usize], right: &[usize]) -> bool {
        if left.len() != right.len() {
            return false;
        }
        if left.iter().any(|&i| i >= self.n_u) || right.iter().any(|&j| j >= self.n_v) {
            return false;
        }
        left.iter()
            .all(|&i| right.iter().all(|&j| self.u_rows[i].contains(j)))
    }
}

/// A balanced complete bipartite subgraph `K_{k,k}`.
///
/// Constructed only through [`Biclique::certify`], which checks it against
/// a host graph. Deserialized values are unchecked and must be re-verified.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Biclique {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Biclique {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and deduplicates both sides, then returns the biclique if it is
    /// balanced and complete in `g`.
    pub fn certify(g: &BipartiteGraph, mut left: Vec<usize>, mut right: Vec<usize>) -> Option<Self> {
        left.sort_unstable();
        left.dedup();
        right.sort_unstable();
        right.dedup();
        g.verify_biclique(&left, &right).then_some(Self { left, right })
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    /// Side length `k` of the `K_{k,k}`.
    pub fn size(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn verify(&self, g: &BipartiteGraph) -> bool {
        g.verify_biclique(&self.left, &self.right)
    }

    /// Maps indices of an induced subgraph back to its host.
    pub(crate) fn lift(&self, left_map: &[usize], right_map: &[usize]) -> (Vec<usize>, Vec<usize>) {
        (
            self.left.iter().map(|&a| left_map[a]).collect(),
            self.right.iter().map(|&b| right_map[b]).collect(),
        )
    }
}

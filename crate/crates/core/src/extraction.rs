//! Turning a dense bipartite graph into a balanced biclique.
//!
//! Two stages. Density cleaning repeatedly deletes a vertex whose edge degree
//! `d_F` is at most `2r` times its non-edge degree `d_Q`; every such deletion
//! can only raise `W = F - 2rQ`. In what is left each vertex misses fewer than
//! a `1/(2r)` fraction of the other side, so any `r` left vertices still share
//! at least half of the right side. Construction picks those `r` vertices and
//! `r` of their common neighbours.
//!
//! If `F - 2rQ >= 2nr` holds for a graph with at most `n` vertices per side,
//! both stages are guaranteed to succeed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Biclique, BipartiteGraph};

/// A vertex of either side, ordered `U` before `V` (the global index order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Vertex {
    U(usize),
    V(usize),
}

/// Record of one cleaning pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningTrace {
    pub r: usize,
    /// `W` before any deletion.
    pub initial_w: i64,
    /// Deleted vertices, in deletion order, in the input graph's indices.
    pub deleted: Vec<Vertex>,
    /// `W` after each deletion; same length as `deleted`.
    pub w: Vec<i64>,
}

impl CleaningTrace {
    pub fn final_w(&self) -> i64 {
        self.w.last().copied().unwrap_or(self.initial_w)
    }

    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial_w;
        self.w.iter().all(|&w| {
            let ok = w >= prev;
            prev = w;
            ok
        })
    }
}

/// Survivors of cleaning as an induced subgraph, with maps back to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Cleaned {
    pub graph: BipartiteGraph,
    /// `left[a]` is the input index of the cleaned graph's left vertex `a`.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// `W = F - 2rQ`.
pub fn potential(f: usize, q: usize, r: usize) -> i64 {
    f as i64 - 2 * r as i64 * q as i64
}

/// True iff `F - 2rQ >= 2nr` for the whole of `h`.
pub fn lemma_precondition(h: &BipartiteGraph, r: usize, n: usize) -> bool {
    let f = h.edge_count();
    let q = h.non_edge_count();
    potential(f, q, r) >= 2 * n as i64 * r as i64
}

/// Deletes, lowest global index first, any vertex with `d_F <= 2r d_Q` until
/// none is left. Degrees are updated incrementally after each deletion.
pub fn density_clean(h: &BipartiteGraph, r: usize) -> (Cleaned, CleaningTrace) {
    let (nu, nv) = (h.n_u(), h.n_v());
    let mut alive_u = vec![true; nu];
    let mut alive_v = vec![true; nv];
    let mut du: Vec<usize> = (0..nu).map(|i| h.u_degree(i)).collect();
    let mut dv: Vec<usize> = (0..nv).map(|j| h.v_degree(j)).collect();
    let (mut cnt_u, mut cnt_v) = (nu, nv);
    let mut f = h.edge_count();
    let mut q = h.non_edge_count();
    let r2 = 2 * r;
    let mut trace = CleaningTrace {
        r,
        initial_w: potential(f, q, r),
        deleted: Vec::new(),
        w: Vec::new(),
    };

    loop {
        // Non-edge degree of a U vertex is |V alive| - d_F and vice versa.
        let victim = (0..nu)
            .find(|&i| alive_u[i] && du[i] <= r2 * (cnt_v - du[i]))
            .map(Vertex::U)
            .or_else(|| {
                (0..nv)
                    .find(|&j| alive_v[j] && dv[j] <= r2 * (cnt_u - dv[j]))
                    .map(Vertex::V)
            });
        let Some(victim) = victim else { break };
        match victim {
            Vertex::U(i) => {
                alive_u[i] = false;
                cnt_u -= 1;
                f -= du[i];
                q -= cnt_v - du[i];
                for j in h.u_neighbors(i).ones() {
                    if alive_v[j] {
                        dv[j] -= 1;
                    }
                }
            }
            Vertex::V(j) => {
                alive_v[j] = false;
                cnt_v -= 1;
                f -= dv[j];
                q -= cnt_u - dv[j];
                for i in h.v_neighbors(j).ones() {
                    if alive_u[i] {
                        du[i] -= 1;
                    }
                }
            }
        }
        trace.deleted.push(victim);
        trace.w.push(potential(f, q, r));
    }

    let left: Vec<usize> = (0..nu).filter(|&i| alive_u[i]).collect();
    let right: Vec<usize> = (0..nv).filter(|&j| alive_v[j]).collect();
    let graph = h.induced(&left, &right);
    (Cleaned { graph, left, right }, trace)
}

/// Takes the `r` lowest-index left vertices, removes their non-neighbours
/// from the right side and keeps the `r` lowest-index survivors.
///
/// Needs `|U| >= r` and `|V| >= r`. On a graph cleaned for `r` with
/// `|V| >= 2r` the common neighbourhood always has at least `r` vertices;
/// smaller right sides are attempted too and fail with an error if the
/// neighbourhood comes up short.
pub fn construct_biclique(h: &BipartiteGraph, r: usize) -> Result<Biclique> {
    if r == 0 {
        return Ok(Biclique::empty());
    }
    if h.n_u() < r || h.n_v() < r {
        return Err(Error::ExtractionPrecondition(format!(
            "need at least {r} vertices per side, have {} and {}",
            h.n_u(),
            h.n_v()
        )));
    }
    pick(h, r).ok_or_else(|| {
        Error::ExtractionPrecondition(format!("fewer than {r} common neighbours; graph is not cleaned for r = {r}"))
    })
}

fn pick(h: &BipartiteGraph, r: usize) -> Option<Biclique> {
    if h.n_u() < r {
        return None;
    }
    let left: Vec<usize> = (0..r).collect();
    let mut common = h.u_neighbors(0).clone();
    for &i in &left[1..] {
        common.intersect_with(h.u_neighbors(i));
    }
    let right: Vec<usize> = common.ones().take(r).collect();
    if right.len() < r {
        return None;
    }
    Biclique::certify(h, left, right)
}

/// Cleans `h` for `r` and builds a `K_{r,r}`, returned in `h`'s indices.
///
/// `n` is the per-side bound of the host the lemma is applied in; it is
/// raised to `h`'s own larger side if smaller. When `F - 2rQ >= 2nr` a
/// biclique is always found. Otherwise the construction is still attempted
/// on whatever survives cleaning.
pub fn greedy_extract(h: &BipartiteGraph, r: usize, n: usize) -> Option<Biclique> {
    if r == 0 {
        return None;
    }
    let n = n.max(h.n());
    let guaranteed = lemma_precondition(h, r, n);
    let (cleaned, _) = density_clean(h, r);
    let found = pick(&cleaned.graph, r).and_then(|b| {
        let (left, right) = b.lift(&cleaned.left, &cleaned.right);
        Biclique::certify(h, left, right)
    });
    debug_assert!(!guaranteed || found.is_some(), "extraction failed although F - 2rQ >= 2nr");
    found
}

/// Largest `r >= 1` with `F - 2rQ >= 2nr`, i.e. `floor(F / (2Q + 2n))`, or 0.
pub fn best_extractable_r(h: &BipartiteGraph, n: usize) -> usize {
    let n = n.max(h.n());
    let denom = 2 * h.non_edge_count() + 2 * n;
    if denom == 0 {
        return 0;
    }
    h.edge_count() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, empty, random_bipartite};

    #[test]
    fn complete_graph_is_left_alone() {
        let g = complete(2, 2).unwrap();
        let (c, trace) = density_clean(&g, 1);
        assert!(trace.deleted.is_empty());
        assert_eq!(c.graph, g);
        assert_eq!(trace.initial_w, 4);
    }

    #[test]
    fn empty_graph_is_wiped() {
        let (c, trace) = density_clean(&empty(2, 2).unwrap(), 1);
        assert_eq!(c.graph.n_u() + c.graph.n_v(), 0);
        assert_eq!(trace.deleted, vec![Vertex::U(0), Vertex::U(1), Vertex::V(0), Vertex::V(1)]);
        assert_eq!(trace.initial_w, -8);
        assert_eq!(trace.w, vec![-4, 0, 0, 0]);
        assert!(trace.is_monotone());
    }

    #[test]
    fn cleaned_survivors_satisfy_strict_condition() {
        for seed in 0..20 {
            let g = random_bipartite(10, 10, 0.7, seed).unwrap();
            let (c, trace) = density_clean(&g, 2);
            assert!(trace.is_monotone());
            assert!(trace.final_w() >= trace.initial_w);
            let h = &c.graph;
            let (f, q) = (h.edge_count(), h.non_edge_count());
            assert_eq!(potential(f, q, 2), trace.final_w());
            for i in 0..h.n_u() {
                assert!(h.u_degree(i) > 4 * (h.n_v() - h.u_degree(i)));
            }
            for j in 0..h.n_v() {
                assert!(h.v_degree(j) > 4 * (h.n_u() - h.v_degree(j)));
            }
        }
    }

    #[test]
    fn construction_on_complete_graph() {
        let g = complete(2, 2).unwrap();
        let b = construct_biclique(&g, 2).unwrap();
        assert_eq!(b.left(), &[0, 1]);
        assert_eq!(b.right(), &[0, 1]);
    }

    #[test]
    fn construction_without_matching() {
        let edges = (0..3).flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)));
        let g = BipartiteGraph::new(3, 3, edges).unwrap();
        let b = construct_biclique(&g, 1).unwrap();
        assert_eq!(b.size(), 1);
        assert!(b.verify(&g));
        assert_eq!((b.left()[0], b.right()[0]), (0, 1));
    }

    #[test]
    fn construction_precondition_errors() {
        let g = complete(1, 3).unwrap();
        assert!(matches!(construct_biclique(&g, 2), Err(Error::ExtractionPrecondition(_))));
        let g = BipartiteGraph::new(2, 4, [(0, 0), (1, 1)]).unwrap();
        assert!(matches!(construct_biclique(&g, 2), Err(Error::ExtractionPrecondition(_))));
    }

    #[test]
    fn extract_from_complete_graphs() {
        let g = complete(4, 4).unwrap();
        assert!(lemma_precondition(&g, 2, 4));
        let b = greedy_extract(&g, 2, 4).unwrap();
        assert_eq!(b.size(), 2);
        assert!(b.verify(&g));
        let g = complete(2, 2).unwrap();
        assert!(lemma_precondition(&g, 1, 2));
        assert_eq!(greedy_extract(&g, 1, 2).unwrap().size(), 1);
        assert!(greedy_extract(&g, 0, 2).is_none());
    }

    #[test]
    fn best_r_arithmetic() {
        assert_eq!(best_extractable_r(&complete(4, 4).unwrap(), 4), 2);
        assert_eq!(best_extractable_r(&empty(3, 3).unwrap(), 3), 0);
        // F = 100, Q = 3 inside a 103-pair block is impossible with n = 10
        // per side, so build F = 97, Q = 3 on 10 x 10 and check the formula.
        let g = BipartiteGraph::new(10, 10, (0..100).filter(|&x| x >= 3).map(|x| (x / 10, x % 10))).unwrap();
        assert_eq!(g.edge_count(), 97);
        assert_eq!(best_extractable_r(&g, 10), 97 / 26);
        let r = best_extractable_r(&g, 10);
        assert!(lemma_precondition(&g, r, 10));
        assert!(!lemma_precondition(&g, r + 1, 10));
    }
}

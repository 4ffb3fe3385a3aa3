use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Biclique, BipartiteGraph};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Ground truth recorded alongside a planted instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSolution {
    pub biclique: Biclique,
    pub p: f64,
    pub seed: u64,
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::BadProbability(p))
    }
}

/// `n x n` graph with a uniformly chosen `K_{k,k}` planted on top of
/// independent `G(n, n, p)` background edges.
pub fn planted_instance(n: usize, k: usize, p: f64, seed: u64) -> Result<(BipartiteGraph, PlantedSolution)> {
    if n == 0 {
        return Err(Error::EmptySide { n_u: n, n_v: n });
    }
    if k == 0 || k > n {
        return Err(Error::PlantedTooLarge { k, n });
    }
    check_probability(p)?;
    let mut rng = seeded(seed);
    let mut left = index::sample(&mut rng, n, k).into_vec();
    let mut right = index::sample(&mut rng, n, k).into_vec();
    left.sort_unstable();
    right.sort_unstable();
    let mut in_left = vec![false; n];
    let mut in_right = vec![false; n];
    left.iter().for_each(|&i| in_left[i] = true);
    right.iter().for_each(|&j| in_right[j] = true);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if (in_left[i] && in_right[j]) || rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let g = BipartiteGraph::new(n, n, edges)?;
    let biclique = Biclique::certify(&g, left, right).expect("planted block is complete by construction");
    Ok((g, PlantedSolution { biclique, p, seed }))
}

/// Independent edges with probability `p`.
pub fn random_bipartite(n_u: usize, n_v: usize, p: f64, seed: u64) -> Result<BipartiteGraph> {
    check_probability(p)?;
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n_u {
        for j in 0..n_v {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    BipartiteGraph::new(n_u, n_v, edges)
}

pub fn complete(n_u: usize, n_v: usize) -> Result<BipartiteGraph> {
    BipartiteGraph::new(n_u, n_v, (0..n_u).flat_map(|i| (0..n_v).map(move |j| (i, j))))
}

pub fn empty(n_u: usize, n_v: usize) -> Result<BipartiteGraph> {
    BipartiteGraph::new(n_u, n_v, [])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equal_n_is_complete() {
        let (g, sol) = planted_instance(4, 4, 0.0, 9).unwrap();
        assert_eq!(g, complete(4, 4).unwrap());
        assert_eq!(sol.biclique.size(), 4);
    }

    #[test]
    fn zero_background_has_exactly_k_squared_edges() {
        for seed in 0..20 {
            let (g, sol) = planted_instance(8, 3, 0.0, seed).unwrap();
            assert_eq!(g.edge_count(), 9);
            assert!(sol.biclique.verify(&g));
            assert!(g.verify_biclique(sol.biclique.left(), sol.biclique.right()));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = planted_instance(16, 4, 0.25, 7).unwrap();
        let b = planted_instance(16, 4, 0.25, 7).unwrap();
        let c = planted_instance(16, 4, 0.25, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn planted_errors() {
        assert!(matches!(planted_instance(3, 4, 0.1, 0), Err(Error::PlantedTooLarge { .. })));
        assert!(matches!(planted_instance(3, 2, 1.5, 0), Err(Error::BadProbability(_))));
    }

    #[test]
    fn random_density_is_plausible() {
        let g = random_bipartite(40, 40, 0.3, 1).unwrap();
        let density = g.edge_count() as f64 / 1600.0;
        assert!((density - 0.3).abs() < 0.05, "{density}");
    }
}

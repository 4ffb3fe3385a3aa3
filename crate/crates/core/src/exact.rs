//! Exact maximum balanced biclique by branch and bound.
//!
//! Subsets `S` of the smaller side are enumerated with their common
//! neighbourhood `N(S)`; the best balanced biclique using exactly `S` has
//! size `min(|S|, |N(S)|)`. The search is exponential in the smaller side and
//! refuses instances above a size guard unless the caller raises it.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::graph::{Biclique, BipartiteGraph};

/// Default cap on the smaller side for [`exact_mbb`].
pub const DEFAULT_SIZE_LIMIT: usize = 24;

struct Search<'a> {
    order: Vec<usize>,
    rows: Vec<&'a FixedBitSet>,
    best: usize,
    stop_at: usize,
}

impl Search<'_> {
    fn dfs(&mut self, pos: usize, chosen: usize, common: &FixedBitSet) {
        if self.best >= self.stop_at {
            return;
        }
        let here = chosen.min(common.count_ones(..));
        self.best = self.best.max(here);
        for idx in pos..self.order.len() {
            let left_after = self.order.len() - idx - 1;
            // Upper bound for any extension that includes order[idx].
            if (chosen + 1 + left_after).min(common.count_ones(..)) <= self.best {
                return;
            }
            let v = self.order[idx];
            let mut next = common.clone();
            next.intersect_with(self.rows[v]);
            if (chosen + 1 + left_after).min(next.count_ones(..)) > self.best {
                self.dfs(idx + 1, chosen + 1, &next);
                if self.best >= self.stop_at {
                    return;
                }
            }
        }
    }
}

fn check_limit(g: &BipartiteGraph, size_limit: Option<usize>) -> Result<()> {
    let limit = size_limit.unwrap_or(DEFAULT_SIZE_LIMIT);
    let size = g.n_u().min(g.n_v());
    if size > limit {
        return Err(Error::InstanceTooLarge { size, limit });
    }
    Ok(())
}

/// Largest `k` such that `g` contains `K_{k,k}`, stopping early once
/// `stop_at` is reached.
fn max_size(g: &BipartiteGraph, stop_at: usize, start_best: usize) -> usize {
    let enumerate_u = g.n_u() <= g.n_v();
    let (count, other) = if enumerate_u {
        (g.n_u(), g.n_v())
    } else {
        (g.n_v(), g.n_u())
    };
    let rows: Vec<&FixedBitSet> = (0..count)
        .map(|x| if enumerate_u { g.u_neighbors(x) } else { g.v_neighbors(x) })
        .collect();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&x| (std::cmp::Reverse(rows[x].count_ones(..)), x));
    let mut search = Search {
        order,
        rows,
        best: start_best,
        stop_at,
    };
    let mut all = FixedBitSet::with_capacity(other);
    all.insert_range(..);
    search.dfs(0, 0, &all);
    search.best
}

/// Lexicographically smallest sorted left set of size `k` with at least `k`
/// common neighbours.
fn lex_first(g: &BipartiteGraph, k: usize) -> Option<Biclique> {
    fn go(g: &BipartiteGraph, k: usize, start: usize, chosen: &mut Vec<usize>, common: &FixedBitSet) -> Option<Vec<usize>> {
        if chosen.len() == k {
            return Some(common.ones().take(k).collect());
        }
        let need = k - chosen.len();
        for i in start..g.n_u() {
            if g.n_u() - i < need {
                break;
            }
            let mut next = common.clone();
            next.intersect_with(g.u_neighbors(i));
            if next.count_ones(..) >= k {
                chosen.push(i);
                if let Some(right) = go(g, k, i + 1, chosen, &next) {
                    return Some(right);
                }
                chosen.pop();
            }
        }
        None
    }
    let mut all = FixedBitSet::with_capacity(g.n_v());
    all.insert_range(..);
    let mut chosen = Vec::with_capacity(k);
    let right = go(g, k, 0, &mut chosen, &all)?;
    Biclique::certify(g, chosen, right)
}

/// Maximum balanced biclique. Ties are broken by the lexicographically
/// smallest sorted left set, then the smallest right indices.
pub fn exact_mbb(g: &BipartiteGraph, size_limit: Option<usize>) -> Result<Biclique> {
    check_limit(g, size_limit)?;
    let k = max_size(g, usize::MAX, 0);
    if k == 0 {
        return Ok(Biclique::empty());
    }
    Ok(lex_first(g, k).expect("a biclique of the optimal size exists"))
}

/// Whether `g` contains `K_{r,r}`.
pub fn contains_biclique(g: &BipartiteGraph, r: usize, size_limit: Option<usize>) -> Result<bool> {
    check_limit(g, size_limit)?;
    if r == 0 {
        return Ok(true);
    }
    Ok(max_size(g, r, r - 1) >= r)
}

//! Low-rank Levenberg-Marquardt refinement of a near-feasible iterate.
//!
//! Projection methods crawl when the feasible set touches the PSD boundary
//! tangentially, which is exactly what happens at the largest feasible `k`
//! (the solution there is typically low rank). Writing `X = V V^T` with the
//! few dominant eigen-directions of the current iterate turns the remaining
//! problem into a zero-residual nonlinear least-squares problem in `V`, on
//! which Gauss-Newton converges fast. The result is PSD by construction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::problem::{Relation, SdpProblem};

/// Eigenvalues below this fraction of the largest are dropped from `V`.
const RANK_CUTOFF: f64 = 1e-3;

pub(crate) struct PolishOutcome {
    pub matrix: DMatrix<f64>,
    pub max_violation: f64,
}

fn residuals(problem: &SdpProblem, x: &DMatrix<f64>) -> Vec<f64> {
    problem
        .constraints
        .iter()
        .map(|c| {
            let s = c.residual(x);
            match c.relation {
                Relation::Eq => s,
                Relation::Ge => s.min(0.0),
            }
        })
        .collect()
}

fn cost(res: &[f64]) -> f64 {
    res.iter().map(|s| s * s).sum::<f64>()
}

fn max_abs(res: &[f64]) -> f64 {
    res.iter().fold(0.0f64, |m, s| m.max(s.abs()))
}

/// Refines `x` restricted to its `max_rank` dominant eigen-directions.
pub(crate) fn polish(problem: &SdpProblem, x: &DMatrix<f64>, max_rank: usize, max_steps: usize, target: f64) -> Option<PolishOutcome> {
    let n = x.nrows();
    let eig = SymmetricEigen::new(x.clone());
    let top = eig.eigenvalues.max();
    if top <= 0.0 {
        return None;
    }
    let mut cols: Vec<usize> = (0..n).filter(|&c| eig.eigenvalues[c] > RANK_CUTOFF * top).collect();
    cols.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    cols.truncate(max_rank);
    let r = cols.len();
    let mut v = DMatrix::from_fn(n, r, |i, c| eig.eigenvectors[(i, cols[c])] * eig.eigenvalues[cols[c]].sqrt());

    let mut xm = &v * v.transpose();
    let mut res = residuals(problem, &xm);
    let mut f = cost(&res);
    let mut mu = 1e-6;
    let unknowns = n * r;
    let mut grad_scratch = DMatrix::<f64>::zeros(n, r);
    let mut touched: Vec<usize> = Vec::new();
    let mut mark = vec![false; n];
    let mut nz: Vec<(usize, f64)> = Vec::new();

    let mut checkpoint = f;
    for step in 0..max_steps {
        if max_abs(&res) <= target {
            break;
        }
        if step > 0 && step % 10 == 0 {
            // Sublinear progress means the rank or active set is wrong.
            if f > 0.5 * checkpoint {
                break;
            }
            checkpoint = f;
        }
        let mut jtj = DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut jts = DVector::<f64>::zeros(unknowns);
        for (c, &s) in problem.constraints.iter().zip(&res) {
            let active = c.relation == Relation::Eq || s < 0.0;
            if !active {
                continue;
            }
            touched.clear();
            for &(a, b, coef) in &c.terms {
                for (row, other) in [(a, b), (b, a)] {
                    if !mark[row] {
                        mark[row] = true;
                        touched.push(row);
                    }
                    for k in 0..r {
                        grad_scratch[(row, k)] += coef * v[(other, k)];
                    }
                }
            }
            nz.clear();
            for &row in &touched {
                for k in 0..r {
                    let g = grad_scratch[(row, k)];
                    if g != 0.0 {
                        nz.push((row * r + k, g));
                    }
                    grad_scratch[(row, k)] = 0.0;
                }
                mark[row] = false;
            }
            for &(p, gp) in &nz {
                jts[p] += gp * s;
                for &(q, gq) in &nz {
                    jtj[(p, q)] += gp * gq;
                }
            }
        }

        let mut improved = false;
        for _ in 0..12 {
            let mut sys = jtj.clone();
            for p in 0..unknowns {
                sys[(p, p)] += mu * (1.0 + jtj[(p, p)]);
            }
            let Some(chol) = sys.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&jts));
            let trial = &v + DMatrix::from_fn(n, r, |i, k| step[i * r + k]);
            let trial_x = &trial * trial.transpose();
            let trial_res = residuals(problem, &trial_x);
            let trial_f = cost(&trial_res);
            if trial_f < f {
                v = trial;
                xm = trial_x;
                res = trial_res;
                f = trial_f;
                mu = (mu / 5.0).max(1e-12);
                improved = true;
                break;
            }
            mu *= 8.0;
        }
        if !improved {
            break;
        }
    }
    if !f.is_finite() {
        return None;
    }
    Some(PolishOutcome {
        max_violation: max_abs(&res),
        matrix: xm,
    })
}

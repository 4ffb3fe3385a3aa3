//! Feasibility solving for the relaxations.
//!
//! The reference backend runs Dykstra's alternating projections over three
//! convex sets whose intersection is the feasible region:
//!
//! 1. the affine subspace of equality constraints (weighted least-squares
//!    projection in the Frobenius metric),
//! 2. the box given by single-entry inequalities (entrywise clamp),
//! 3. the PSD cone (eigendecomposition with negative eigenvalues clamped).
//!
//! Iterates leave the loop right after the PSD step, so a returned matrix is
//! PSD to rounding error and only its linear residuals need checking.
//! "Infeasible" always means infeasible at tolerance: either the equality
//! system alone is inconsistent, or the residual stalls above `10 eps_feas`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::gram::GramMatrix;
use super::polish::polish;
use super::problem::{Relation, SdpProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Maximum linear violation accepted as feasible.
    pub eps_feas: f64,
    /// After first reaching `eps_feas`, keep iterating toward this residual.
    pub refine_to: f64,
    /// Extra iterations spent refining before returning the best iterate.
    pub refine_iterations: usize,
    pub max_iterations: usize,
    /// Iterations over which a residual above `10 eps_feas` must improve by
    /// more than `plateau_rel_improvement`, or the problem is declared infeasible.
    pub plateau_window: usize,
    pub plateau_rel_improvement: f64,
    /// Residuals are measured every this many iterations.
    pub check_every: usize,
    pub method: ProjectionMethod,
    /// Try a low-rank Levenberg-Marquardt refinement on near-feasible iterates.
    pub low_rank_polish: bool,
    /// Residual below which polishing is attempted.
    pub polish_trigger: f64,
    /// Polishing is attempted every this many iterations, and once more
    /// before declaring a plateau.
    pub polish_every: usize,
    pub polish_max_rank: usize,
    pub polish_steps: usize,
}

/// How the three projections are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionMethod {
    /// Cyclic projections with Dykstra correction terms.
    Dykstra,
    /// Plain cyclic projections.
    Cyclic,
    /// Averaged Douglas-Rachford in the product space of the three sets.
    DouglasRachford,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_feas: 1e-6,
            refine_to: 1e-8,
            refine_iterations: 2_000,
            max_iterations: 20_000,
            plateau_window: 400,
            plateau_rel_improvement: 0.02,
            check_every: 10,
            method: ProjectionMethod::Dykstra,
            low_rank_polish: true,
            polish_trigger: 1e-1,
            polish_every: 100,
            polish_max_rank: 8,
            polish_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityStatus {
    Feasible(GramMatrix),
    InfeasibleAtTolerance,
    SolverLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityOutcome {
    pub status: FeasibilityStatus,
    pub max_violation: f64,
    pub iterations: usize,
}

impl FeasibilityOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, FeasibilityStatus::Feasible(_))
    }

    pub fn gram(&self) -> Option<&GramMatrix> {
        match &self.status {
            FeasibilityStatus::Feasible(m) => Some(m),
            _ => None,
        }
    }

    pub fn status_name(&self) -> &'static str {
        match self.status {
            FeasibilityStatus::Feasible(_) => "feasible",
            FeasibilityStatus::InfeasibleAtTolerance => "infeasible",
            FeasibilityStatus::SolverLimit => "solver-limit",
        }
    }
}

/// A feasibility backend. Implementations must return `Feasible` only for
/// matrices that pass `check_feasibility` at `cfg.eps_feas`.
pub trait FeasibilityBackend: Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, problem: &SdpProblem, cfg: &SolverConfig) -> Result<FeasibilityOutcome>;
}

/// Solves with the in-repo [`AlternatingProjections`] backend.
pub fn solve_feasibility(problem: &SdpProblem, cfg: &SolverConfig) -> Result<FeasibilityOutcome> {
    AlternatingProjections.solve(problem, cfg)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlternatingProjections;

impl FeasibilityBackend for AlternatingProjections {
    fn name(&self) -> &'static str {
        "dykstra-alternating-projections"
    }

    fn solve(&self, problem: &SdpProblem, cfg: &SolverConfig) -> Result<FeasibilityOutcome> {
        self.solve_from(problem, cfg, None)
    }
}

impl AlternatingProjections {
    /// Like [`FeasibilityBackend::solve`] but starting from `start` instead of
    /// the default `e e^T` point.
    pub fn solve_from(&self, problem: &SdpProblem, cfg: &SolverConfig, start: Option<&GramMatrix>) -> Result<FeasibilityOutcome> {
        let dim = problem.dim();
        let affine = AffineProjector::new(problem)?;
        let bounds = BoxProjector::new(problem)?;

        // The equality system alone has no solution: nothing to iterate on.
        if affine.inconsistency > 10.0 * cfg.eps_feas {
            return Ok(FeasibilityOutcome {
                status: FeasibilityStatus::InfeasibleAtTolerance,
                max_violation: affine.inconsistency,
                iterations: 0,
            });
        }

        let mut x = match start {
            Some(m) if m.dim() == dim => m.matrix().clone(),
            Some(m) => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.dim(),
                })
            }
            None => {
                let mut x = DMatrix::zeros(dim, dim);
                x[(0, 0)] = 1.0;
                x
            }
        };
        let mut p_box = DMatrix::zeros(dim, dim);
        let mut p_psd = DMatrix::zeros(dim, dim);
        let mut history: Vec<(usize, f64)> = Vec::new();
        let mut best: Option<(f64, DMatrix<f64>)> = None;
        let mut first_feasible: Option<usize> = None;
        let mut dr: Option<[DMatrix<f64>; 3]> = None;
        let check_every = cfg.check_every.max(1);

        for it in 1..=cfg.max_iterations {
            match cfg.method {
                ProjectionMethod::Dykstra => {
                    // Affine sets need no Dykstra correction.
                    let mut y = x;
                    affine.project(&mut y);
                    y += &p_box;
                    let mut z = y.clone();
                    bounds.project(&mut z);
                    p_box = y - &z;
                    z += &p_psd;
                    let next = project_psd(&z);
                    p_psd = z - &next;
                    x = next;
                }
                ProjectionMethod::Cyclic => {
                    let mut y = x;
                    affine.project(&mut y);
                    bounds.project(&mut y);
                    x = project_psd(&y);
                }
                ProjectionMethod::DouglasRachford => {
                    let zs = dr.get_or_insert_with(|| [x.clone(), x.clone(), x.clone()]);
                    let mean = (&zs[0] + &zs[1] + &zs[2]) / 3.0;
                    let reflect = |z: &DMatrix<f64>| &mean * 2.0 - z;
                    let mut a = reflect(&zs[0]);
                    affine.project(&mut a);
                    let mut b = reflect(&zs[1]);
                    bounds.project(&mut b);
                    let c = project_psd(&reflect(&zs[2]));
                    zs[0] += a - &mean;
                    zs[1] += b - &mean;
                    zs[2] += c - &mean;
                    let shadow = (&zs[0] + &zs[1] + &zs[2]) / 3.0;
                    x = project_psd(&shadow);
                }
            }

            if it % check_every != 0 && it != cfg.max_iterations {
                continue;
            }
            let viol = max_linear_violation(problem, &x);
            if !viol.is_finite() {
                return Ok(FeasibilityOutcome {
                    status: FeasibilityStatus::SolverLimit,
                    max_violation: f64::INFINITY,
                    iterations: it,
                });
            }
            if best.as_ref().is_none_or(|(b, _)| viol < *b) {
                best = Some((viol, x.clone()));
            }
            let stalled = first_feasible.is_none()
                && viol > 10.0 * cfg.eps_feas
                && it >= cfg.plateau_window
                && history
                    .iter()
                    .rev()
                    .find(|(i, _)| *i + cfg.plateau_window <= it)
                    .is_some_and(|&(_, old)| viol > (1.0 - cfg.plateau_rel_improvement) * old);
            let polish_due = it % cfg.polish_every.max(1) == 0 || stalled;
            if cfg.low_rank_polish && polish_due && viol <= cfg.polish_trigger && viol > cfg.refine_to {
                // Cheap low ranks first; most boundary solutions need very few.
                for rank in polish_ranks(cfg.polish_max_rank) {
                    let Some(p) = polish(problem, &x, rank, cfg.polish_steps, 0.1 * cfg.refine_to) else {
                        continue;
                    };
                    if p.max_violation <= cfg.refine_to {
                        return Ok(FeasibilityOutcome {
                            status: FeasibilityStatus::Feasible(GramMatrix::from_symmetric(p.matrix)),
                            max_violation: p.max_violation,
                            iterations: it,
                        });
                    }
                    if best.as_ref().is_none_or(|(b, _)| p.max_violation < *b) {
                        best = Some((p.max_violation, p.matrix));
                    }
                }
            }
            let best_viol = best.as_ref().map_or(f64::INFINITY, |(b, _)| *b);
            if best_viol <= cfg.eps_feas {
                let first = *first_feasible.get_or_insert(it);
                if best_viol <= cfg.refine_to || it >= first + cfg.refine_iterations {
                    let (v, m) = best.take().expect("best is set");
                    return Ok(FeasibilityOutcome {
                        status: FeasibilityStatus::Feasible(GramMatrix::from_symmetric(m)),
                        max_violation: v,
                        iterations: it,
                    });
                }
            } else if stalled {
                return Ok(FeasibilityOutcome {
                    status: FeasibilityStatus::InfeasibleAtTolerance,
                    max_violation: viol,
                    iterations: it,
                });
            }
            history.push((it, viol));
        }

        Ok(match best {
            Some((v, m)) if v <= cfg.eps_feas => FeasibilityOutcome {
                status: FeasibilityStatus::Feasible(GramMatrix::from_symmetric(m)),
                max_violation: v,
                iterations: cfg.max_iterations,
            },
            best => FeasibilityOutcome {
                status: FeasibilityStatus::SolverLimit,
                max_violation: best.map_or(f64::INFINITY, |(v, _)| v),
                iterations: cfg.max_iterations,
            },
        })
    }
}

fn polish_ranks(max_rank: usize) -> Vec<usize> {
    let mut ranks: Vec<usize> = std::iter::successors(Some(2), |r| Some(r * 2))
        .take_while(|&r| r < max_rank)
        .collect();
    if max_rank > 0 {
        ranks.push(max_rank);
    }
    ranks
}

fn max_linear_violation(problem: &SdpProblem, m: &DMatrix<f64>) -> f64 {
    problem
        .constraints
        .iter()
        .map(|c| c.violation(c.residual(m)))
        .fold(0.0, f64::max)
}

pub(crate) fn project_psd(x: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(x.clone());
    let n = x.nrows();
    let kept: Vec<usize> = (0..n).filter(|&c| eig.eigenvalues[c] > 0.0).collect();
    if kept.is_empty() {
        return DMatrix::zeros(n, n);
    }
    let q = DMatrix::from_fn(n, kept.len(), |r, c| {
        eig.eigenvectors[(r, kept[c])] * eig.eigenvalues[kept[c]].sqrt()
    });
    &q * q.transpose()
}

/// Projection onto `{X symmetric : equality constraints hold}` in the
/// Frobenius metric. Single-entry equalities fix their entry outright; the
/// rest form a small system `A x = b` over the remaining entries, solved
/// through the pseudo-inverse of `A W^-1 A^T` with `W` the Frobenius weights
/// (1 on the diagonal, 2 off it).
struct AffineProjector {
    fixed: Vec<(usize, usize, f64)>,
    vars: Vec<(usize, usize)>,
    inv_weight: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    gram_pinv: DMatrix<f64>,
    /// Residual of the least-squares solution; positive iff `A x = b` has
    /// no exact solution.
    inconsistency: f64,
}

impl AffineProjector {
    fn new(problem: &SdpProblem) -> Result<Self> {
        let dim = problem.dim();
        let mut fixed_at: HashMap<(usize, usize), f64> = HashMap::new();
        let mut inconsistency = 0.0f64;

        for c in problem.constraints.iter().filter(|c| c.relation == Relation::Eq) {
            check_terms(c.terms.iter().map(|t| (t.0, t.1)), dim)?;
            if let [(r, col, a)] = c.terms[..] {
                if a == 0.0 {
                    inconsistency = inconsistency.max(c.rhs.abs());
                    continue;
                }
                let value = c.rhs / a;
                if let Some(prev) = fixed_at.insert((r, col), value) {
                    inconsistency = inconsistency.max((prev - value).abs());
                }
            }
        }

        let mut var_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut vars = Vec::new();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for c in problem.constraints.iter().filter(|c| c.relation == Relation::Eq && c.terms.len() > 1) {
            let mut b = c.rhs;
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(c.terms.len());
            for &(r, col, a) in &c.terms {
                if let Some(v) = fixed_at.get(&(r, col)) {
                    b -= a * v;
                    continue;
                }
                let id = *var_of.entry((r, col)).or_insert_with(|| {
                    vars.push((r, col));
                    vars.len() - 1
                });
                match row.iter_mut().find(|(v, _)| *v == id) {
                    Some(slot) => slot.1 += a,
                    None => row.push((id, a)),
                }
            }
            row.retain(|&(_, a)| a != 0.0);
            if row.is_empty() {
                inconsistency = inconsistency.max(b.abs());
            } else {
                rows.push(row);
                rhs.push(b);
            }
        }

        let inv_weight: Vec<f64> = vars.iter().map(|&(r, c)| if r == c { 1.0 } else { 0.5 }).collect();
        let m = rows.len();
        let mut by_var: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vars.len()];
        for (a, row) in rows.iter().enumerate() {
            for &(v, coef) in row {
                by_var[v].push((a, coef));
            }
        }
        let mut g = DMatrix::<f64>::zeros(m, m);
        for (v, entries) in by_var.iter().enumerate() {
            for &(a, ca) in entries {
                for &(b, cb) in entries {
                    g[(a, b)] += ca * cb * inv_weight[v];
                }
            }
        }
        let gram_pinv = pseudo_inverse(g);

        let fixed = fixed_at.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        let mut proj = Self {
            fixed,
            vars,
            inv_weight,
            rows,
            rhs,
            gram_pinv,
            inconsistency,
        };
        // Minimum-norm solution of A x = b; if it misses, the system is inconsistent.
        let mut x = vec![0.0; proj.vars.len()];
        proj.correct(&mut x);
        let scale = 1.0 + proj.rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        let miss = proj
            .rows
            .iter()
            .zip(&proj.rhs)
            .map(|(row, b)| (row.iter().map(|&(v, a)| a * x[v]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        if miss > 1e-9 * scale {
            proj.inconsistency = proj.inconsistency.max(miss);
        }
        Ok(proj)
    }

    /// `x <- x - W^-1 A^T (A W^-1 A^T)^+ (A x - b)`.
    fn correct(&self, x: &mut [f64]) {
        if self.rows.is_empty() {
            return;
        }
        let residual = nalgebra::DVector::from_iterator(
            self.rows.len(),
            self.rows
                .iter()
                .zip(&self.rhs)
                .map(|(row, b)| row.iter().map(|&(v, a)| a * x[v]).sum::<f64>() - b),
        );
        let lambda = &self.gram_pinv * residual;
        for (a, row) in self.rows.iter().enumerate() {
            let l = lambda[a];
            for &(v, coef) in row {
                x[v] -= self.inv_weight[v] * coef * l;
            }
        }
    }

    fn project(&self, m: &mut DMatrix<f64>) {
        let mut x: Vec<f64> = self.vars.iter().map(|&(r, c)| m[(r, c)]).collect();
        self.correct(&mut x);
        for (&(r, c), &v) in self.vars.iter().zip(&x) {
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
        for &(r, c, v) in &self.fixed {
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

fn pseudo_inverse(g: DMatrix<f64>) -> DMatrix<f64> {
    let m = g.nrows();
    if m == 0 {
        return g;
    }
    let eig = SymmetricEigen::new(g);
    let max = eig.eigenvalues.amax();
    let cutoff = max * 1e-12 * m as f64;
    let inv = eig.eigenvalues.map(|l| if l > cutoff { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

fn check_terms(terms: impl Iterator<Item = (usize, usize)>, dim: usize) -> Result<()> {
    for (r, c) in terms {
        if r > c || c >= dim {
            return Err(Error::MalformedProblem(format!(
                "term ({r}, {c}) not on the upper triangle of a {dim} x {dim} matrix"
            )));
        }
    }
    Ok(())
}

/// Entrywise bounds from single-entry inequality constraints.
struct BoxProjector {
    bounds: Vec<(usize, usize, f64, f64)>,
}

impl BoxProjector {
    fn new(problem: &SdpProblem) -> Result<Self> {
        let dim = problem.dim();
        let mut merged: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
        for c in problem.constraints.iter().filter(|c| c.relation == Relation::Ge) {
            check_terms(c.terms.iter().map(|t| (t.0, t.1)), dim)?;
            let [(r, col, a)] = c.terms[..] else {
                return Err(Error::MalformedProblem(
                    "the alternating-projection backend supports only single-entry inequalities".into(),
                ));
            };
            if a == 0.0 {
                return Err(Error::MalformedProblem("inequality with zero coefficient".into()));
            }
            let slot = merged.entry((r, col)).or_insert((f64::NEG_INFINITY, f64::INFINITY));
            if a > 0.0 {
                slot.0 = slot.0.max(c.rhs / a);
            } else {
                slot.1 = slot.1.min(c.rhs / a);
            }
        }
        let mut bounds: Vec<_> = merged.into_iter().map(|((r, c), (lo, hi))| (r, c, lo, hi)).collect();
        bounds.sort_by_key(|b| (b.0, b.1));
        Ok(Self { bounds })
    }

    fn project(&self, m: &mut DMatrix<f64>) {
        for &(r, c, lo, hi) in &self.bounds {
            let v = m[(r, c)].max(lo).min(hi);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, empty, planted_instance};
    use crate::sdp::{build_strong_relaxation, build_weak_relaxation, check_feasibility, LinearConstraint};

    #[test]
    fn complete_graph_is_feasible() {
        let g = complete(4, 4).unwrap();
        let p = build_strong_relaxation(&g, 4.0).unwrap();
        let cfg = SolverConfig::default();
        let out = solve_feasibility(&p, &cfg).unwrap();
        assert!(out.is_feasible(), "{} {}", out.status_name(), out.max_violation);
        assert!(check_feasibility(&p, out.gram().unwrap(), cfg.eps_feas).unwrap().passed);
    }

    #[test]
    fn empty_graph_is_infeasible() {
        for n in [2, 4] {
            let g = empty(n, n).unwrap();
            let p = build_strong_relaxation(&g, 1.0).unwrap();
            let out = solve_feasibility(&p, &SolverConfig::default()).unwrap();
            assert_eq!(out.status, FeasibilityStatus::InfeasibleAtTolerance);
        }
    }

    #[test]
    fn planted_instance_is_feasible_at_planted_k() {
        let (g, _) = planted_instance(12, 4, 0.3, 2).unwrap();
        let p = build_strong_relaxation(&g, 4.0).unwrap();
        let cfg = SolverConfig::default();
        let out = solve_feasibility(&p, &cfg).unwrap();
        assert!(out.is_feasible(), "{} {}", out.status_name(), out.max_violation);
        let rep = check_feasibility(&p, out.gram().unwrap(), cfg.eps_feas).unwrap();
        assert!(rep.passed, "{}", rep.max_violation);
    }

    #[test]
    fn weak_relaxation_of_empty_graph_is_feasible_at_half_n() {
        let g = empty(4, 4).unwrap();
        let p = build_weak_relaxation(&g, 2.0).unwrap();
        let out = solve_feasibility(&p, &SolverConfig::default()).unwrap();
        assert!(out.is_feasible(), "{} {}", out.status_name(), out.max_violation);
    }

    #[test]
    fn iteration_cap_yields_solver_limit() {
        let (g, _) = planted_instance(10, 3, 0.3, 1).unwrap();
        let p = build_strong_relaxation(&g, 3.0).unwrap();
        let cfg = SolverConfig {
            max_iterations: 3,
            ..SolverConfig::default()
        };
        let out = solve_feasibility(&p, &cfg).unwrap();
        assert_eq!(out.status, FeasibilityStatus::SolverLimit);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn multi_term_inequality_is_rejected() {
        let mut p = build_weak_relaxation(&complete(1, 1).unwrap(), 1.0).unwrap();
        p.constraints.push(LinearConstraint {
            terms: vec![(0, 1, 1.0), (0, 2, 1.0)],
            relation: Relation::Ge,
            rhs: 0.0,
            kind: crate::sdp::ConstraintKind::NonNeg,
        });
        assert!(matches!(solve_feasibility(&p, &SolverConfig::default()), Err(Error::MalformedProblem(_))));
    }

    #[test]
    fn psd_projection_clamps() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = project_psd(&x);
        let eig = SymmetricEigen::new(p.clone()).eigenvalues;
        assert!(eig.min() > -1e-12);
        assert!((p[(0, 0)] - 1.5).abs() < 1e-12 && (p[(0, 1)] - 1.5).abs() < 1e-12);
    }
}

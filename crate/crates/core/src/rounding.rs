//! Gaussian threshold rounding of a vector solution.
//!
//! Given vectors `u_x` with masses `c_x = <u_x, e>` for a candidate `k`
//! (and `t = n / k`), one trial:
//!
//! 1. keeps the heavy vertices `A = {i in U : c_i >= 1/(8t)}` and `B` likewise,
//! 2. shifts `u'_x = u_x - alpha c_x e` and normalises,
//! 3. draws one standard Gaussian `g` and keeps `x` iff `<g, u'_x / |u'_x|> >= tau`,
//! 4. extracts a balanced biclique from the surviving subgraph.
//!
//! Shifting makes every non-edge pair negatively correlated (at most
//! `-1/(16t)`) while pairs with `<u_i, u_j> > c_i c_j / 2` stay non-negative,
//! which is what separates edges from non-edges under thresholding.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{greedy_extract, lemma_precondition, potential};
use crate::gaussian::{neg_corr_upper, pos_corr_lower};
use crate::graph::{Biclique, BipartiteGraph};
use crate::rng;
use crate::sdp::{Layout, VectorSolution};

/// `1 - 1/sqrt 2`: with this shift `<u'_i, u'_j> = <u_i, u_j> - c_i c_j / 2`.
pub const DEFAULT_ALPHA: f64 = 1.0 - 1.0 / SQRT_2;
/// Smallest threshold used when `sqrt(0.1 ln n)` would be below it.
pub const TAU_FLOOR: f64 = 0.5;
pub const MAX_DEFAULT_TRIALS: u64 = 10_000;
/// Shifted vectors shorter than this cannot be normalised.
pub const DEGENERATE_NORM: f64 = 1e-12;
/// Constant of the asymptotic guarantee; reported, never used for decisions.
pub const ANALYSIS_D: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingParams {
    /// `n / k`.
    pub t: f64,
    pub alpha: f64,
    pub tau: f64,
    /// Set when the default `tau` was raised to [`TAU_FLOOR`].
    pub tau_clamped: bool,
    pub trials: u64,
    pub heavy_threshold: f64,
    pub seed: u64,
}

impl RoundingParams {
    /// Defaults for a graph with `n` vertices per side and candidate `k`:
    /// `tau = sqrt(0.1 ln n)` (natural log) floored at 0.5, `min(n^3, 10^4)`
    /// trials, heavy threshold `1/(8t)`.
    pub fn new(n: usize, k: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::NonPositiveK(k));
        }
        let t = n as f64 / k;
        let raw_tau = (0.1 * (n as f64).ln()).sqrt();
        let tau_clamped = !(raw_tau >= TAU_FLOOR);
        let n3 = (n as u64).saturating_pow(3);
        Ok(Self {
            t,
            alpha: DEFAULT_ALPHA,
            tau: if tau_clamped { TAU_FLOOR } else { raw_tau },
            tau_clamped,
            trials: n3.min(MAX_DEFAULT_TRIALS),
            heavy_threshold: 1.0 / (8.0 * t),
            seed,
        })
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self.tau_clamped = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(format!("rounding parameters: {m}")));
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad("t must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !self.tau.is_finite() {
            return bad("tau must be finite");
        }
        if self.trials == 0 {
            return bad("at least one trial is required");
        }
        Ok(())
    }

    /// `max(1, floor(compute_r(t, tau)))`.
    pub fn r_eff(&self) -> usize {
        let r = compute_r(self.t, self.tau);
        if r >= 1.0 {
            r.floor() as usize
        } else {
            1
        }
    }
}

/// `exp(tau^2 / (16 t)) / (64 sqrt(pi) tau t^2)`.
pub fn compute_r(t: f64, tau: f64) -> f64 {
    (tau * tau / (16.0 * t)).exp() / (64.0 * PI.sqrt() * tau * t * t)
}

/// Heavy vertices `A` (indices into `U`) and `B` (into `V`): `c >= threshold`,
/// boundary inclusive.
pub fn heavy_sets(sol: &VectorSolution, layout: Layout, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let a = (0..layout.n_u).filter(|&i| sol.c(layout.u(i)) >= threshold).collect();
    let b = (0..layout.n_v).filter(|&j| sol.c(layout.v(j)) >= threshold).collect();
    (a, b)
}

/// Normalised shifted vectors for a set of members, one row each.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedVectors {
    /// Gram-matrix indices of the members, in row order.
    pub members: Vec<usize>,
    pub unit: DMatrix<f64>,
    /// `|u'_x|^2` before normalisation.
    pub norms_sq: Vec<f64>,
    /// Largest deviation from `<u'_x, u'_y> = <u_x, u_y> - c_x c_y / 2`.
    pub inner_identity_error: f64,
    /// Largest deviation from `|u'_x|^2 = c_x (1 - c_x / 2)`.
    pub norm_identity_error: f64,
}

impl ShiftedVectors {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Correlation `<u'_x, u'_y> / (|u'_x| |u'_y|)` between rows `a` and `b`.
    pub fn correlation(&self, a: usize, b: usize) -> f64 {
        self.unit.row(a).dot(&self.unit.row(b))
    }
}

/// Shifts `u'_x = u_x - alpha c_x e` for every member (Gram-matrix indices)
/// and normalises. The two identities that hold for `alpha = 1 - 1/sqrt 2`
/// are measured and reported, not enforced, because the norm identity only
/// holds as exactly as `|u_x|^2 = c_x` does in the input.
pub fn shift_vectors(sol: &VectorSolution, members: &[usize], alpha: f64) -> Result<ShiftedVectors> {
    let d = sol.d();
    let e = sol.e();
    let mut shifted = DMatrix::zeros(members.len(), d);
    let mut norms_sq = Vec::with_capacity(members.len());
    for (row, &x) in members.iter().enumerate() {
        let u = sol.vector(x);
        let v = &u - &e * (alpha * sol.c(x));
        let nsq = v.norm_squared();
        if nsq.sqrt() < DEGENERATE_NORM {
            return Err(Error::DegenerateVector(x));
        }
        shifted.set_row(row, &v.transpose());
        norms_sq.push(nsq);
    }

    let gram = &shifted * shifted.transpose();
    let mut inner_identity_error = 0.0f64;
    let mut norm_identity_error = 0.0f64;
    for (a, &x) in members.iter().enumerate() {
        let cx = sol.c(x);
        norm_identity_error = norm_identity_error.max((norms_sq[a] - cx * (1.0 - 0.5 * cx)).abs());
        for (b, &y) in members.iter().enumerate() {
            let expect = sol.inner(x, y) - 0.5 * cx * sol.c(y);
            inner_identity_error = inner_identity_error.max((gram[(a, b)] - expect).abs());
        }
    }

    let mut unit = shifted;
    for (row, nsq) in norms_sq.iter().enumerate() {
        let inv = 1.0 / nsq.sqrt();
        unit.row_mut(row).scale_mut(inv);
    }
    Ok(ShiftedVectors {
        members: members.to_vec(),
        unit,
        norms_sq,
        inner_identity_error,
        norm_identity_error,
    })
}

/// Gram-matrix indices `x` with `<g, unit_x> >= tau`, for one Gaussian `g`
/// drawn from `rng`.
pub fn gaussian_threshold<R: rand::Rng + ?Sized>(vectors: &ShiftedVectors, tau: f64, rng: &mut R) -> Vec<usize> {
    let g = DVector::from_fn(vectors.unit.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    threshold_with(vectors, tau, &g)
}

/// Same test with an explicit `g`.
pub fn threshold_with(vectors: &ShiftedVectors, tau: f64, g: &DVector<f64>) -> Vec<usize> {
    let x = &vectors.unit * g;
    vectors
        .members
        .iter()
        .zip(x.iter())
        .filter(|(_, &xi)| xi >= tau)
        .map(|(&m, _)| m)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    /// Surviving vertices of `A` (indices into `U`) and of `B` (into `V`).
    pub survivors_a: Vec<usize>,
    pub survivors_b: Vec<usize>,
    /// Edges and non-edges among survivors; `f + q = |A'| |B'|`.
    pub f: usize,
    pub q: usize,
    /// The `r` the score is taken at (`r_eff`).
    pub r: usize,
    /// `F - 2rQ`.
    pub w: i64,
    /// Whether `F - 2rQ >= 2nr`.
    pub success_event: bool,
    /// Largest biclique extracted, verified against the input graph.
    pub extracted: Option<Biclique>,
}

/// Shifted heavy vectors, computed once and reused by every trial.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub layout: Layout,
    pub heavy_a: Vec<usize>,
    pub heavy_b: Vec<usize>,
    /// Heavy members dropped because their shifted vector was degenerate.
    pub dropped: Vec<usize>,
    pub shifted: ShiftedVectors,
}

pub fn prepare(sol: &VectorSolution, g: &BipartiteGraph, params: &RoundingParams) -> Result<Prepared> {
    params.validate()?;
    let layout = Layout::of(g);
    if sol.len() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            got: sol.len(),
        });
    }
    let (heavy_a, heavy_b) = heavy_sets(sol, layout, params.heavy_threshold);
    let e = sol.e();
    let mut members = Vec::with_capacity(heavy_a.len() + heavy_b.len());
    let mut dropped = Vec::new();
    for x in heavy_a.iter().map(|&i| layout.u(i)).chain(heavy_b.iter().map(|&j| layout.v(j))) {
        let v = sol.vector(x) - &e * (params.alpha * sol.c(x));
        if v.norm() < DEGENERATE_NORM {
            dropped.push(x);
        } else {
            members.push(x);
        }
    }
    let shifted = shift_vectors(sol, &members, params.alpha)?;
    Ok(Prepared {
        layout,
        heavy_a,
        heavy_b,
        dropped,
        shifted,
    })
}

/// Largest `K_{r,r}` found by [`greedy_extract`] over `r = min(|S|, |T|)` down
/// to 1, in `g`'s indices.
pub fn extract_best(g: &BipartiteGraph, left: &[usize], right: &[usize]) -> Option<Biclique> {
    let h = g.induced(left, right);
    (1..=left.len().min(right.len())).rev().find_map(|r| {
        greedy_extract(&h, r, g.n()).and_then(|b| {
            let (l, rr) = b.lift(left, right);
            Biclique::certify(g, l, rr)
        })
    })
}

/// One trial with its own random stream `rng::stream(seed, trial)`.
pub fn run_trial(prep: &Prepared, g: &BipartiteGraph, params: &RoundingParams, trial: u64) -> TrialOutcome {
    let mut rng = rng::stream(params.seed, trial);
    let survivors = gaussian_threshold(&prep.shifted, params.tau, &mut rng);
    let l = prep.layout;
    let survivors_a: Vec<usize> = survivors.iter().filter(|&&x| l.u_range().contains(&x)).map(|&x| x - 1).collect();
    let survivors_b: Vec<usize> = survivors
        .iter()
        .filter(|&&x| l.v_range().contains(&x))
        .map(|&x| x - 1 - l.n_u)
        .collect();
    let (f, q) = g.induced_counts(&survivors_a, &survivors_b);
    let r = params.r_eff();
    let w = potential(f, q, r);
    let n = g.n();
    let success_event = w >= 2 * (n * r) as i64;
    debug_assert_eq!(success_event, lemma_precondition(&g.induced(&survivors_a, &survivors_b), r, n));
    let extracted = extract_best(g, &survivors_a, &survivors_b);
    TrialOutcome {
        trial,
        survivors_a,
        survivors_b,
        f,
        q,
        r,
        w,
        success_event,
        extracted,
    }
}

/// A single trial (trial index 0).
pub fn round_once(sol: &VectorSolution, g: &BipartiteGraph, params: &RoundingParams) -> Result<TrialOutcome> {
    let prep = prepare(sol, g, params)?;
    Ok(run_trial(&prep, g, params, 0))
}

/// Compact per-trial record kept by [`round_many`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub survivors_a: usize,
    pub survivors_b: usize,
    pub w: i64,
    pub success_event: bool,
    pub extracted_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingResult {
    pub best: Option<Biclique>,
    /// First trial that produced `best`.
    pub best_trial: Option<u64>,
    pub trials: Vec<TrialRecord>,
    /// Trials where `F - 2rQ >= 2nr`.
    pub success_events: u64,
    pub heavy_a: usize,
    pub heavy_b: usize,
    /// Gram-matrix indices of heavy members dropped as degenerate.
    pub dropped: Vec<usize>,
    pub r_eff: usize,
    pub tau: f64,
    pub tau_clamped: bool,
    pub inner_identity_error: f64,
    pub norm_identity_error: f64,
}

/// Runs `params.trials` independent trials in parallel and keeps the
/// largest verified biclique (earliest trial on ties). The result does not
/// depend on the number of threads.
pub fn round_many(sol: &VectorSolution, g: &BipartiteGraph, params: &RoundingParams) -> Result<RoundingResult> {
    let prep = prepare(sol, g, params)?;
    let outcomes: Vec<TrialOutcome> = (0..params.trials)
        .into_par_iter()
        .map(|trial| run_trial(&prep, g, params, trial))
        .collect();
    let mut best: Option<(u64, Biclique)> = None;
    let mut trials = Vec::with_capacity(outcomes.len());
    let mut success_events = 0;
    for o in outcomes {
        success_events += o.success_event as u64;
        let size = o.extracted.as_ref().map_or(0, Biclique::size);
        trials.push(TrialRecord {
            survivors_a: o.survivors_a.len(),
            survivors_b: o.survivors_b.len(),
            w: o.w,
            success_event: o.success_event,
            extracted_size: size,
        });
        if let Some(b) = o.extracted {
            if best.as_ref().is_none_or(|(_, cur)| b.size() > cur.size()) {
                best = Some((o.trial, b));
            }
        }
    }
    Ok(RoundingResult {
        best_trial: best.as_ref().map(|(t, _)| *t),
        best: best.map(|(_, b)| b),
        trials,
        success_events,
        heavy_a: prep.heavy_a.len(),
        heavy_b: prep.heavy_b.len(),
        dropped: prep.dropped,
        r_eff: params.r_eff(),
        tau: params.tau,
        tau_clamped: params.tau_clamped,
        inner_identity_error: prep.shifted.inner_identity_error,
        norm_identity_error: prep.shifted.norm_identity_error,
    })
}

/// Quantities from the analysis of one solution, with the inequalities the
/// analysis derives evaluated on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub k: f64,
    pub t: f64,
    pub a_size: usize,
    pub b_size: usize,
    /// `sum_{(i,j) in A x B} <u_i, u_j>`.
    pub m_ab: f64,
    /// `|{(i,j) in A x B : <u_i, u_j> > c_i c_j / 2}|`.
    pub e_plus: usize,
    /// Pairs of `E+` that are not edges; zero on feasible input.
    pub e_plus_non_edges: usize,
    /// Non-edge pairs inside `A x B`.
    pub non_edges_ab: usize,
    /// Largest normalised shifted correlation over non-edge pairs in `A x B`.
    pub max_non_edge_correlation: Option<f64>,
    /// Smallest normalised shifted correlation over `E+`.
    pub min_e_plus_correlation: Option<f64>,
    pub tau: f64,
    pub tau_clamped: bool,
    /// `r` from the analysis formula, and the integer used by the trials.
    pub r: f64,
    pub r_eff: usize,
    /// `|E+| phi(tau)^2 / (4 tau^2)`.
    pub expected_f_lower: f64,
    /// Non-edges in `A x B` times `(sqrt(pi)/tau) phi(tau)^2 exp(-tau^2/(16t))`.
    pub expected_q_upper: f64,
    /// The bivariate bounds are proven only for `tau >= 2`.
    pub bounds_proven: bool,
    pub analysis_d: f64,
    /// `n^{1/(D t)}`; documented only.
    pub guarantee_size: f64,
    pub m_ab_bound_holds: bool,
    pub e_plus_bound_holds: bool,
    pub e_plus_subset_of_edges: bool,
}

/// Evaluates the analysis quantities for `sol` on `g` with `k = n / t`.
pub fn diagnostics(sol: &VectorSolution, g: &BipartiteGraph, params: &RoundingParams) -> Result<Diagnostics> {
    let layout = Layout::of(g);
    if sol.len() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            got: sol.len(),
        });
    }
    let t = params.t;
    let n = g.n() as f64;
    let k = n / t;
    let (a, b) = heavy_sets(sol, layout, params.heavy_threshold);
    let members: Vec<usize> = a.iter().map(|&i| layout.u(i)).chain(b.iter().map(|&j| layout.v(j))).collect();
    let shifted = shift_vectors(sol, &members, params.alpha).ok();

    let mut m_ab = 0.0;
    let mut e_plus = 0;
    let mut e_plus_non_edges = 0;
    let mut non_edges_ab = 0;
    let mut max_non_edge_correlation: Option<f64> = None;
    let mut min_e_plus_correlation: Option<f64> = None;
    for (ra, &i) in a.iter().enumerate() {
        let (x, cx) = (layout.u(i), sol.c(layout.u(i)));
        for (rb, &j) in b.iter().enumerate() {
            let y = layout.v(j);
            let ip = sol.inner(x, y);
            m_ab += ip;
            let corr = shifted.as_ref().map(|s| s.correlation(ra, a.len() + rb));
            let positive = ip > 0.5 * cx * sol.c(y);
            if positive {
                e_plus += 1;
                if !g.adj(i, j) {
                    e_plus_non_edges += 1;
                }
                if let Some(c) = corr {
                    min_e_plus_correlation = Some(min_e_plus_correlation.map_or(c, |m| m.min(c)));
                }
            }
            if !g.adj(i, j) {
                non_edges_ab += 1;
                if let Some(c) = corr {
                    max_non_edge_correlation = Some(max_non_edge_correlation.map_or(c, |m| m.max(c)));
                }
            }
        }
    }

    let tau = params.tau;
    let rho = -1.0 / (16.0 * t);
    Ok(Diagnostics {
        k,
        t,
        a_size: a.len(),
        b_size: b.len(),
        m_ab,
        e_plus,
        e_plus_non_edges,
        non_edges_ab,
        max_non_edge_correlation,
        min_e_plus_correlation,
        tau,
        tau_clamped: params.tau_clamped,
        r: compute_r(t, tau),
        r_eff: params.r_eff(),
        expected_f_lower: e_plus as f64 * pos_corr_lower(tau),
        expected_q_upper: non_edges_ab as f64 * neg_corr_upper(tau, rho),
        bounds_proven: tau >= 2.0,
        analysis_d: ANALYSIS_D,
        guarantee_size: n.powf(1.0 / (ANALYSIS_D * t)),
        m_ab_bound_holds: m_ab >= 0.75 * k * k,
        e_plus_bound_holds: e_plus as f64 >= 0.25 * k * k,
        e_plus_subset_of_edges: e_plus_non_edges == 0,
    })
}

//! End-to-end approximation: search for the largest `k` at which the strong
//! relaxation is feasible, round that solution, run a greedy baseline, and
//! return the larger verified biclique.

mod experiment;

pub use experiment::{
    aggregate_reports, load_experiment, run_experiment, ExperimentSpec, InstanceSpec, MethodName, CSV_HEADER,
};

use std::collections::BTreeMap;
use std::time::Instant;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{Biclique, BipartiteGraph};
use crate::rng::RNG_ALGORITHM;
use crate::rounding::{diagnostics, round_many, Diagnostics, RoundingParams, RoundingResult};
use crate::sdp::{build_strong_relaxation, gram_to_vectors, solve_feasibility, SolverConfig, EPS_PSD};

/// How the candidate `k` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KSearch {
    /// Solve at this `k` only.
    Fixed(usize),
    /// Probe `k_hi, k_hi - 1, k_hi - 3, k_hi - 7, ...` down to the first
    /// feasible value, then bisect between it and the last infeasible probe.
    Descending,
    /// Plain bisection on `[1, k_hi]`, which presumes feasibility is monotone.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub k_search: KSearch,
    pub solver: SolverConfig,
    /// Overrides the default `min(n^3, 10^4)`.
    pub trials: Option<u64>,
    /// Overrides the default `sqrt(0.1 ln n)`.
    pub tau: Option<f64>,
    pub seed: u64,
    pub baseline: bool,
    /// Wall-clock times make reports differ between runs, so they are opt-in.
    pub record_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_search: KSearch::Descending,
            solver: SolverConfig::default(),
            trials: None,
            tau: None,
            seed: 0,
            baseline: true,
            record_timings: false,
        }
    }
}

/// Which routine produced a biclique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SdpRounding,
    Baseline,
    Exact,
    None,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SdpRounding => "sdp-rounding",
            Method::Baseline => "baseline",
            Method::Exact => "exact",
            Method::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KProbe {
    pub k: usize,
    /// `feasible`, `infeasible` or `solver-limit`.
    pub status: String,
    pub max_violation: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<f64>,
}

impl KProbe {
    pub fn feasible(&self) -> bool {
        self.status == "feasible"
    }
}

/// Counts from [`RoundingResult`] without the per-trial list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingSummary {
    pub k: usize,
    pub trials: u64,
    pub tau: f64,
    pub tau_clamped: bool,
    pub r_eff: usize,
    pub heavy_a: usize,
    pub heavy_b: usize,
    pub dropped: Vec<usize>,
    pub success_events: u64,
    pub best_size: usize,
    pub best_trial: Option<u64>,
    /// Number of trials by size of the extracted biclique (0 = none).
    pub size_histogram: BTreeMap<usize, u64>,
    pub inner_identity_error: f64,
    pub norm_identity_error: f64,
}

impl RoundingSummary {
    pub fn from_result(k: usize, r: &RoundingResult) -> Self {
        let mut size_histogram = BTreeMap::new();
        for t in &r.trials {
            *size_histogram.entry(t.extracted_size).or_insert(0) += 1;
        }
        Self {
            k,
            trials: r.trials.len() as u64,
            tau: r.tau,
            tau_clamped: r.tau_clamped,
            r_eff: r.r_eff,
            heavy_a: r.heavy_a,
            heavy_b: r.heavy_b,
            dropped: r.dropped.clone(),
            success_events: r.success_events,
            best_size: r.best.as_ref().map_or(0, Biclique::size),
            best_trial: r.best_trial,
            size_histogram,
            inner_identity_error: r.inner_identity_error,
            norm_identity_error: r.norm_identity_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub name: String,
    pub n_u: usize,
    pub n_v: usize,
    pub edges: usize,
    pub planted_k: Option<usize>,
    pub seed: Option<u64>,
}

impl InstanceInfo {
    pub fn of(name: &str, g: &BipartiteGraph) -> Self {
        Self {
            name: name.to_string(),
            n_u: g.n_u(),
            n_v: g.n_v(),
            edges: g.edge_count(),
            planted_k: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub k_search_ms: f64,
    pub rounding_ms: f64,
    pub baseline_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: InstanceInfo,
    pub config: PipelineConfig,
    pub rng: String,
    pub probes: Vec<KProbe>,
    /// Largest feasible `k` found by the search.
    pub k_star: Option<usize>,
    /// Probes that contradict monotone feasibility: an infeasible `k` below
    /// a feasible one.
    pub anomalies: Vec<String>,
    pub rounding: Option<RoundingSummary>,
    pub diagnostics: Option<Diagnostics>,
    pub rounding_biclique: Option<Biclique>,
    pub baseline_biclique: Option<Biclique>,
    pub best: Biclique,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    /// Re-checks every biclique the report carries against `g`.
    pub fn verify(&self, g: &BipartiteGraph) -> bool {
        let opt_ok = |b: &Option<Biclique>| b.as_ref().is_none_or(|b| b.verify(g));
        (self.best.is_empty() || self.best.verify(g))
            && opt_ok(&self.rounding_biclique)
            && opt_ok(&self.baseline_biclique)
    }
}

/// Greedy balanced biclique. Starting from the whole right side as the
/// candidate neighbourhood `N`, repeatedly add the unpicked left vertex with
/// the most neighbours in `N` (lowest index on ties) and shrink `N`, while
/// `min(|picked|, |N|)` does not decrease. The best prefix is returned.
pub fn greedy_baseline(g: &BipartiteGraph) -> Biclique {
    let mut common = FixedBitSet::with_capacity(g.n_v());
    common.insert_range(..);
    let mut picked: Vec<usize> = Vec::new();
    let mut used = vec![false; g.n_u()];
    let mut best = Biclique::empty();
    loop {
        let current = picked.len().min(common.count_ones(..));
        let choice = (0..g.n_u())
            .filter(|&i| !used[i])
            .map(|i| (g.u_neighbors(i).intersection_count(&common), i))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let Some((deg, i)) = choice else { break };
        let next = (picked.len() + 1).min(deg);
        if next < current {
            break;
        }
        used[i] = true;
        picked.push(i);
        common.intersect_with(g.u_neighbors(i));
        if next > best.size() {
            let right: Vec<usize> = common.ones().take(next).collect();
            let left = picked[..next].to_vec();
            if let Some(b) = Biclique::certify(g, left, right) {
                best = b;
            }
        }
    }
    best
}

fn probe(g: &BipartiteGraph, k: usize, cfg: &PipelineConfig) -> Result<(KProbe, Option<crate::sdp::GramMatrix>)> {
    let start = Instant::now();
    let problem = build_strong_relaxation(g, k as f64)?;
    let out = solve_feasibility(&problem, &cfg.solver)?;
    let probe = KProbe {
        k,
        status: out.status_name().to_string(),
        max_violation: out.max_violation,
        iterations: out.iterations,
        millis: cfg.record_timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    Ok((probe, out.gram().cloned()))
}

/// Runs the configured search and returns the probes, the largest feasible
/// `k` and its Gram matrix.
pub fn search_k(
    g: &BipartiteGraph,
    cfg: &PipelineConfig,
) -> Result<(Vec<KProbe>, Option<(usize, crate::sdp::GramMatrix)>)> {
    let k_hi = g.n_u().min(g.n_v());
    let mut probes = Vec::new();
    let mut best: Option<(usize, crate::sdp::GramMatrix)> = None;
    let run = |k: usize, probes: &mut Vec<KProbe>| -> Result<Option<crate::sdp::GramMatrix>> {
        let (p, m) = probe(g, k, cfg)?;
        probes.push(p);
        Ok(m)
    };
    if k_hi == 0 || g.edge_count() == 0 {
        return Ok((probes, None));
    }
    match cfg.k_search {
        KSearch::Fixed(k) => {
            if k >= 1 {
                if let Some(m) = run(k, &mut probes)? {
                    best = Some((k, m));
                }
            }
        }
        KSearch::Descending => {
            let mut upper_infeasible = k_hi + 1;
            let mut step = 1;
            let mut k = k_hi;
            loop {
                if let Some(m) = run(k, &mut probes)? {
                    best = Some((k, m));
                    break;
                }
                upper_infeasible = k;
                if k == 1 {
                    break;
                }
                k = k.saturating_sub(step).max(1);
                step *= 2;
            }
            if let Some((lo, _)) = &best {
                let (mut lo, mut hi) = (*lo, upper_infeasible);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    match run(mid, &mut probes)? {
                        Some(m) => {
                            lo = mid;
                            best = Some((mid, m));
                        }
                        None => hi = mid,
                    }
                }
            }
        }
        KSearch::Binary => {
            let (mut lo, mut hi) = (0, k_hi + 1);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                match run(mid, &mut probes)? {
                    Some(m) => {
                        lo = mid;
                        best = Some((mid, m));
                    }
                    None => hi = mid,
                }
            }
        }
    }
    Ok((probes, best))
}

/// Pairs `(infeasible k, feasible k')` with `k < k'` among the probes.
pub fn monotonicity_anomalies(probes: &[KProbe]) -> Vec<String> {
    let mut out = Vec::new();
    for a in probes.iter().filter(|p| !p.feasible()) {
        for b in probes.iter().filter(|p| p.feasible() && p.k > a.k) {
            out.push(format!("k={} {} but k={} feasible", a.k, a.status, b.k));
        }
    }
    out
}

/// The full pipeline. The returned biclique is always verified against `g`;
/// it has at least one edge whenever `g` does.
pub fn approximate_mbb(g: &BipartiteGraph, cfg: &PipelineConfig) -> Result<(Biclique, RunReport)> {
    approximate_mbb_named(g, cfg, InstanceInfo::of("graph", g))
}

pub fn approximate_mbb_named(
    g: &BipartiteGraph,
    cfg: &PipelineConfig,
    instance: InstanceInfo,
) -> Result<(Biclique, RunReport)> {
    let total = Instant::now();
    let (probes, found) = search_k(g, cfg)?;
    let k_search_ms = total.elapsed().as_secs_f64() * 1e3;
    let anomalies = monotonicity_anomalies(&probes);
    let k_star = found.as_ref().map(|(k, _)| *k);

    let t_round = Instant::now();
    let mut rounding = None;
    let mut diag = None;
    let mut rounding_biclique = None;
    if let Some((k, m)) = &found {
        let sol = gram_to_vectors(m, EPS_PSD)?;
        let mut params = RoundingParams::new(g.n(), *k as f64, cfg.seed)?;
        if let Some(t) = cfg.trials {
            params = params.with_trials(t);
        }
        if let Some(tau) = cfg.tau {
            params = params.with_tau(tau);
        }
        let result = round_many(&sol, g, &params)?;
        rounding = Some(RoundingSummary::from_result(*k, &result));
        diag = Some(diagnostics(&sol, g, &params)?);
        rounding_biclique = result.best.filter(|b| b.verify(g));
    }
    let rounding_ms = t_round.elapsed().as_secs_f64() * 1e3;

    let t_base = Instant::now();
    let baseline_biclique = cfg.baseline.then(|| greedy_baseline(g)).filter(|b| b.verify(g));
    let baseline_ms = t_base.elapsed().as_secs_f64() * 1e3;

    let size = |b: &Option<Biclique>| b.as_ref().map_or(0, Biclique::size);
    let (best, method) = if size(&rounding_biclique) > 0 && size(&rounding_biclique) >= size(&baseline_biclique) {
        (rounding_biclique.clone().unwrap(), Method::SdpRounding)
    } else if size(&baseline_biclique) > 0 {
        (baseline_biclique.clone().unwrap(), Method::Baseline)
    } else if let Some(&(i, j)) = g.edges().first() {
        (Biclique::certify(g, vec![i], vec![j]).expect("an edge is a K_{1,1}"), Method::Baseline)
    } else {
        (Biclique::empty(), Method::None)
    };

    let timings = cfg.record_timings.then(|| Timings {
        k_search_ms,
        rounding_ms,
        baseline_ms,
        total_ms: total.elapsed().as_secs_f64() * 1e3,
    });
    let report = RunReport {
        instance,
        config: cfg.clone(),
        rng: RNG_ALGORITHM.to_string(),
        probes,
        k_star,
        anomalies,
        rounding,
        diagnostics: diag,
        rounding_biclique,
        baseline_biclique,
        best: best.clone(),
        method,
        timings,
    };
    Ok((best, report))
}

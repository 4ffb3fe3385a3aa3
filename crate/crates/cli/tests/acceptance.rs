//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::index::sample;
use rand::Rng;

use mbb::exact::exact_mbb;
use mbb::extraction::{density_clean, greedy_extract, lemma_precondition};
use mbb::gaussian::{joint_tail_monte_carlo, bivariate_tail_lower, bivariate_tail_upper, std_normal_tail, univariate_tail_bounds};
use mbb::graph::{complete, empty, planted_instance, random_bipartite, BipartiteGraph};
use mbb::pipeline::{approximate_mbb, greedy_baseline, PipelineConfig};
use mbb::rounding::{diagnostics, heavy_sets, shift_vectors, RoundingParams, DEFAULT_ALPHA};
use mbb::sdp::{
    build_strong_relaxation, build_weak_relaxation, check_feasibility, gram_to_vectors, indicator_gram,
    solve_feasibility, weak_gap_solution, FeasibilityStatus, GramMatrix, Layout, SolverConfig, EPS_PSD,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    ensure(start.elapsed() <= limit, || format!("took {:.1?}, limit {limit:?}", start.elapsed()))
}

fn integrality_gap() -> Outcome {
    let start = Instant::now();
    for n in [4usize, 8, 16] {
        let g = empty(n, n).map_err(|e| e.to_string())?;
        let weak = build_weak_relaxation(&g, n as f64 / 2.0).map_err(|e| e.to_string())?;
        let rep = check_feasibility(&weak, &weak_gap_solution(n), 1e-9).map_err(|e| e.to_string())?;
        ensure(rep.passed && rep.max_violation <= 1e-9, || format!("n={n}: weak gap solution rejected: {}", rep.max_violation))?;
        let strong = build_strong_relaxation(&g, 1.0).map_err(|e| e.to_string())?;
        let out = solve_feasibility(&strong, &SolverConfig::default()).map_err(|e| e.to_string())?;
        ensure(out.status == FeasibilityStatus::InfeasibleAtTolerance, || {
            format!("n={n}: strong relaxation at k=1 returned {}", out.status_name())
        })?;
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("weak accepts gap solution, strong infeasible, n in {{4, 8, 16}} ({:.2?})", start.elapsed()))
}

/// Planted instances and their solver output for criteria 2, 5 and 6.
struct Solved {
    n: usize,
    k: usize,
    p: f64,
    graph: BipartiteGraph,
    gram: GramMatrix,
}

fn solved_instances() -> Result<(Vec<Solved>, String), String> {
    let start = Instant::now();
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    for n in [8usize, 16, 32] {
        let k = n / 4;
        for p in [0.0, 0.2] {
            let (g, sol) = planted_instance(n, k, p, 1).map_err(|e| e.to_string())?;
            let problem = build_strong_relaxation(&g, k as f64).map_err(|e| e.to_string())?;
            let ind = indicator_gram(Layout::of(&g), &sol.biclique);
            let rep = check_feasibility(&problem, &ind, 0.0).map_err(|e| e.to_string())?;
            ensure(rep.max_violation == 0.0, || format!("n={n} p={p}: indicator violation {}", rep.max_violation))?;
            let res = solve_feasibility(&problem, &SolverConfig::default()).map_err(|e| e.to_string())?;
            let gram = res
                .gram()
                .cloned()
                .ok_or_else(|| format!("n={n} p={p}: solver returned {}", res.status_name()))?;
            let check = check_feasibility(&problem, &gram, 1e-6).map_err(|e| e.to_string())?;
            ensure(check.passed, || format!("n={n} p={p}: independent check failed: {}", check.max_violation))?;
            worst = worst.max(check.max_violation);
            out.push(Solved { n, k, p, graph: g, gram });
        }
    }
    within(Duration::from_secs(120), start)?;
    let msg = format!("6 instances, indicator exact, solver worst violation {worst:.2e} ({:.2?})", start.elapsed());
    Ok((out, msg))
}

fn dense_graph(n_u: usize, n_v: usize, q: usize, clustered: bool, seed: u64) -> BipartiteGraph {
    let mut rng = mbb::rng::seeded(seed);
    let total = n_u * n_v;
    let holes: Vec<usize> = if clustered {
        let rows = rng.random_range(1..=n_u.min(3));
        let pool = rows * n_v;
        let offset = rng.random_range(0..n_u - rows + 1) * n_v;
        sample(&mut rng, pool, q.min(pool)).into_iter().map(|x| x + offset).collect()
    } else {
        sample(&mut rng, total, q).into_vec()
    };
    let mut present = vec![true; total];
    holes.into_iter().for_each(|x| present[x] = false);
    BipartiteGraph::new(n_u, n_v, (0..total).filter(|&x| present[x]).map(|x| (x / n_v, x % n_v))).unwrap()
}

fn lemma_soundness() -> Outcome {
    let start = Instant::now();
    let cases = 600;
    let strategy = (1usize..=8)
        .prop_flat_map(|r| (Just(r), 2 * r..=64usize, 2 * r..=64usize))
        .prop_flat_map(|(r, n_u, n_v)| {
            let n = n_u.max(n_v);
            let q_max = (n_u * n_v - 2 * n * r) / (2 * r + 1);
            (Just((r, n_u, n_v)), 0..=q_max, any::<bool>(), any::<u64>())
        });
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let checked = std::cell::Cell::new(0u32);
    runner
        .run(&strategy, |((r, n_u, n_v), q, clustered, seed)| {
            let g = dense_graph(n_u, n_v, q, clustered, seed);
            let n = n_u.max(n_v);
            prop_assert!(lemma_precondition(&g, r, n));
            let (_, trace) = density_clean(&g, r);
            prop_assert!(trace.is_monotone(), "W decreased");
            let b = greedy_extract(&g, r, n);
            prop_assert!(b.as_ref().is_some_and(|b| b.size() == r && b.verify(&g)), "no verified K_{{r,r}}");
            checked.set(checked.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let checked = checked.get();
    ensure(checked >= 500, || format!("only {checked} cases ran"))?;
    within(Duration::from_secs(60), start)?;
    Ok(format!("{checked} instances with F - 2rQ >= 2nr, all extracted and verified ({:.2?})", start.elapsed()))
}

fn tail_bounds() -> Outcome {
    let start = Instant::now();
    // Frozen 40-digit values of Pr[Z >= tau].
    let oracle = [
        (2.0, 0.022750131948179207),
        (2.5, 0.006209665325776135),
        (3.0, 0.0013498980316300945),
        (3.5, 0.00023262907903552504),
    ];
    for (tau, want) in oracle {
        let tail = std_normal_tail(tau);
        ensure(((tail - want) / want).abs() < 1e-12, || format!("tail({tau}) = {tail}, oracle {want}"))?;
        let b = univariate_tail_bounds(tau).map_err(|e| e.to_string())?;
        ensure(b.strictly_contains(want), || format!("tau={tau}: {b:?} does not strictly contain {want}"))?;
    }
    let tau = 2.0;
    let samples = 10_000_000;
    let lower = bivariate_tail_lower(tau).map_err(|e| e.to_string())?;
    for (i, rho) in [0.0, 0.3, 0.8].into_iter().enumerate() {
        let est = joint_tail_monte_carlo(tau, rho, samples, &mut mbb::rng::stream(2024, i as u64));
        ensure(est.estimate + 3.0 * est.std_error >= lower, || {
            format!("rho={rho}: estimate {:.3e} (se {:.1e}) below lower bound {lower:.3e}", est.estimate, est.std_error)
        })?;
    }
    for (i, rho) in [-0.1, -0.5, -0.9].into_iter().enumerate() {
        let upper = bivariate_tail_upper(tau, rho).map_err(|e| e.to_string())?;
        let est = joint_tail_monte_carlo(tau, rho, samples, &mut mbb::rng::stream(2024, 10 + i as u64));
        ensure(est.estimate - 3.0 * est.std_error <= upper, || {
            format!("rho={rho}: estimate {:.3e} (se {:.1e}) above upper bound {upper:.3e}", est.estimate, est.std_error)
        })?;
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("strict univariate brackets; 6 x 10^7 correlated pairs consistent ({:.2?})", start.elapsed()))
}

fn shift_identities(solved: &[Solved]) -> Outcome {
    let mut worst_inner: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut worst_corr = f64::NEG_INFINITY;
    let mut pairs = 0;
    for s in solved {
        let sol = gram_to_vectors(&s.gram, EPS_PSD).map_err(|e| e.to_string())?;
        let layout = Layout::of(&s.graph);
        let t = s.n as f64 / s.k as f64;
        let (a, b) = heavy_sets(&sol, layout, 1.0 / (8.0 * t));
        let members: Vec<usize> = a.iter().map(|&i| layout.u(i)).chain(b.iter().map(|&j| layout.v(j))).collect();
        let sh = shift_vectors(&sol, &members, DEFAULT_ALPHA).map_err(|e| e.to_string())?;
        worst_inner = worst_inner.max(sh.inner_identity_error);
        worst_norm = worst_norm.max(sh.norm_identity_error);
        // Identities against the Gram matrix entries themselves.
        let m = s.gram.matrix();
        for (x, &gx) in members.iter().enumerate() {
            let cx = m[(0, gx)];
            worst_norm = worst_norm.max((sh.norms_sq[x] - cx * (1.0 - 0.5 * cx)).abs());
            for (y, &gy) in members.iter().enumerate() {
                let ip = sh.correlation(x, y) * (sh.norms_sq[x] * sh.norms_sq[y]).sqrt();
                worst_inner = worst_inner.max((ip - (m[(gx, gy)] - 0.5 * cx * m[(0, gy)])).abs());
            }
        }
        for (ra, &i) in a.iter().enumerate() {
            for (rb, &j) in b.iter().enumerate() {
                if !s.graph.adj(i, j) {
                    pairs += 1;
                    let c = sh.correlation(ra, a.len() + rb);
                    worst_corr = worst_corr.max(c + 1.0 / (16.0 * t));
                    ensure(c <= -1.0 / (16.0 * t) + 1e-5, || {
                        format!("n={} p={}: non-edge ({i},{j}) correlation {c} above -1/(16t)", s.n, s.p)
                    })?;
                }
            }
        }
    }
    ensure(worst_inner <= 1e-7, || format!("inner-product identity off by {worst_inner:.2e}"))?;
    ensure(worst_norm <= 1e-7, || format!("norm identity off by {worst_norm:.2e}"))?;
    let slack = if pairs > 0 { format!("{worst_corr:.2e}") } else { "n/a".into() };
    Ok(format!(
        "identity errors {worst_inner:.1e} / {worst_norm:.1e}; {pairs} heavy non-edge pairs, max excess over -1/(16t) {slack}"
    ))
}

fn proof_inequalities(solved: &[Solved]) -> Outcome {
    let mut lines = Vec::new();
    for s in solved {
        let sol = gram_to_vectors(&s.gram, EPS_PSD).map_err(|e| e.to_string())?;
        let params = RoundingParams::new(s.n, s.k as f64, 0).map_err(|e| e.to_string())?;
        let d = diagnostics(&sol, &s.graph, &params).map_err(|e| e.to_string())?;
        let k2 = (s.k * s.k) as f64;
        let slack = (s.n * s.n) as f64 * 1e-5;
        ensure(d.m_ab >= 0.75 * k2 - slack, || format!("n={} p={}: M(A,B) = {} < 0.75 k^2", s.n, s.p, d.m_ab))?;
        ensure(d.e_plus as f64 >= 0.25 * k2 - slack, || format!("n={} p={}: |E+| = {} < k^2/4", s.n, s.p, d.e_plus))?;
        ensure(d.e_plus_non_edges == 0, || format!("n={} p={}: {} E+ pairs are non-edges", s.n, s.p, d.e_plus_non_edges))?;
        lines.push(format!("{:.1}/{}", d.m_ab / k2, d.e_plus));
    }
    Ok(format!("M(A,B)/k^2 and |E+| per instance: {}; E+ inside E", lines.join(", ")))
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let mut successes = 0;
    let mut sizes = Vec::new();
    for seed in 0..10u64 {
        let (g, _) = planted_instance(64, 16, 0.1, seed).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig {
            seed,
            ..PipelineConfig::default()
        };
        let (b, _) = approximate_mbb(&g, &cfg).map_err(|e| e.to_string())?;
        ensure(b.verify(&g), || format!("seed {seed}: unverified output"))?;
        let base = greedy_baseline(&g);
        ensure(b.size() >= base.size(), || format!("seed {seed}: pipeline {} < baseline {}", b.size(), base.size()))?;
        if b.size() >= 2 {
            successes += 1;
        }
        sizes.push(b.size());
    }
    ensure(successes >= 8, || format!("only {successes}/10 seeds reached size 2"))?;
    within(Duration::from_secs(600), start)?;
    Ok(format!("{successes}/10 seeds with size >= 2, sizes {sizes:?} ({:.1?})", start.elapsed()))
}

fn oracle_sandwich() -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig::default();
    let mut instances: Vec<(String, BipartiteGraph, bool)> = Vec::new();
    for seed in 0..100u64 {
        let mut rng = mbb::rng::seeded(seed);
        let n_u = rng.random_range(2..=12);
        let n_v = rng.random_range(2..=12);
        let p = [0.2, 0.4, 0.6, 0.8][seed as usize % 4];
        let g = if seed % 2 == 0 {
            random_bipartite(n_u, n_v, p, seed).map_err(|e| e.to_string())?
        } else {
            let n = n_u.max(4);
            let k = rng.random_range(1..=n / 2);
            planted_instance(n, k, p * 0.5, seed).map_err(|e| e.to_string())?.0
        };
        instances.push((format!("random seed {seed}"), g, false));
    }
    for n in [1usize, 3, 5, 8, 12] {
        instances.push((format!("complete {n}x{n}"), complete(n, n).unwrap(), true));
        instances.push((format!("complete {n}x{}", n + 2), complete(n, (n + 2).min(12)).unwrap(), true));
    }
    for (n, k) in [(6, 2), (8, 3), (10, 4), (12, 5), (12, 6)] {
        instances.push((format!("planted p=0 n={n} k={k}"), planted_instance(n, k, 0.0, 3).unwrap().0, true));
    }
    let count = instances.len();
    for (name, g, tight) in instances {
        let exact = exact_mbb(&g, None).map_err(|e| e.to_string())?.size();
        let (pipe, _) = approximate_mbb(&g, &cfg).map_err(|e| e.to_string())?;
        let base = greedy_baseline(&g);
        for (method, b) in [("pipeline", &pipe), ("baseline", &base)] {
            ensure(b.is_empty() || b.verify(&g), || format!("{name}: {method} output unverified"))?;
            ensure(b.size() <= exact, || format!("{name}: {method} {} > exact {exact}", b.size()))?;
            if tight {
                ensure(b.size() == exact, || format!("{name}: {method} {} != exact {exact}", b.size()))?;
            }
        }
        ensure(pipe.size() >= base.size(), || format!("{name}: pipeline below baseline"))?;
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{count} instances, every method <= exact, tight on complete and p=0 planted ({:.1?})", start.elapsed()))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mbb"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    std::fs::write(
        dir.join("spec.json"),
        r#"{"instances": [{"kind": "planted", "n": 10, "k": 3, "p": 0.2, "seeds": [1, 2]},
                          {"kind": "random", "n_u": 8, "n_v": 9, "p": 0.5, "seeds": [4]}],
            "methods": ["pipeline", "baseline", "exact"], "exact": true,
            "pipeline": {"trials": 300}}"#,
    )
    .map_err(|e| e.to_string())?;
    let commands: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("generate", vec!["generate", "--n", "12", "--k", "3", "--p", "0.3", "--seed", "5", "-o", "g.txt"], vec!["g.txt"]),
        ("exact", vec!["exact", "g.txt"], vec![]),
        ("solve-sdp", vec!["solve-sdp", "g.txt", "--k", "3", "-o", "m.txt"], vec!["m.txt"]),
        ("round", vec!["round", "g.txt", "m.txt", "--k", "3", "--seed", "9", "--trials", "500"], vec![]),
        ("extract", vec!["extract", "g.txt", "--r", "1"], vec![]),
        ("pipeline", vec!["pipeline", "g.txt", "--seed", "9", "--trials", "500", "-o", "report.json"], vec!["report.json"]),
        ("bench", vec!["bench", "spec.json", "-o", "out", "--seed", "9"], vec!["out/aggregate.csv", "out/runs/000-planted-n10-k3-p0.2-s1.json"]),
    ];
    for (name, args, files) in &commands {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let (code, stdout) = run_cli(args, dir)?;
            ensure(code == 0, || format!("{name} exited with {code}"))?;
            let mut bytes = stdout;
            for f in files {
                bytes.extend(std::fs::read(dir.join(f)).map_err(|e| format!("{name}: {f}: {e}"))?);
            }
            runs.push(bytes);
        }
        ensure(runs[0] == runs[1], || format!("{name}: output differs between runs"))?;
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![(1, "integrality gap", integrality_gap())];
    let solved = solved_instances();
    match &solved {
        Ok((solved, msg)) => {
            results.push((2, "integral certificates and solver", Ok(msg.clone())));
            results.push((5, "shift identities", shift_identities(solved)));
            results.push((6, "proof inequalities", proof_inequalities(solved)));
        }
        Err(e) => {
            results.push((2, "integral certificates and solver", Err(e.clone())));
            results.push((5, "shift identities", Err(format!("no solved instances: {e}"))));
            results.push((6, "proof inequalities", Err(format!("no solved instances: {e}"))));
        }
    }
    results.push((3, "extraction soundness", lemma_soundness()));
    results.push((4, "tail bounds", tail_bounds()));
    results.push((7, "end-to-end rounding", end_to_end()));
    results.push((8, "oracle sandwich", oracle_sandwich()));
    results.push((9, "determinism", determinism()));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, title, r) in results {
        match r {
            Ok(detail) => println!("criterion {n} PASS  {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL  {title}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mbb::exact::{exact_mbb, DEFAULT_SIZE_LIMIT};
use mbb::extraction::{best_extractable_r, greedy_extract, lemma_precondition};
use mbb::graph::{
    complete, empty, parse_graph, planted_instance, random_bipartite, serialize_graph_with_comments, Biclique,
    BipartiteGraph,
};
use mbb::pipeline::{approximate_mbb_named, load_experiment, run_experiment, InstanceInfo, KSearch, PipelineConfig};
use mbb::rng::RNG_ALGORITHM;
use mbb::rounding::{diagnostics, round_many, RoundingParams};
use mbb::sdp::{
    build_strong_relaxation, build_weak_relaxation, check_feasibility, gram_to_vectors, solve_feasibility,
    GramMatrix, SolverConfig, EPS_PSD,
};

const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "mbb", version, about = "Maximum balanced biclique: SDP relaxation, rounding and baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Planted,
    Random,
    Complete,
    Empty,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance in the graph text format.
    Generate {
        #[arg(long, value_enum, default_value = "planted")]
        kind: Kind,
        /// Vertices per side (planted).
        #[arg(long)]
        n: Option<usize>,
        /// Planted biclique size.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n_u: Option<usize>,
        #[arg(long)]
        n_v: Option<usize>,
        /// Background edge probability.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact maximum balanced biclique (exponential; guarded by --limit).
    Exact {
        graph: PathBuf,
        /// Largest smaller-side size the solver accepts.
        #[arg(long, default_value_t = DEFAULT_SIZE_LIMIT)]
        limit: usize,
    },
    /// Solve the relaxation at k; exit code 2 when infeasible.
    SolveSdp {
        graph: PathBuf,
        #[arg(long)]
        k: f64,
        /// Use the relaxation without degree constraints.
        #[arg(long)]
        weak: bool,
        /// Where to write the Gram matrix when feasible.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Round a Gram matrix into a biclique.
    Round {
        graph: PathBuf,
        gram: PathBuf,
        /// The k the Gram matrix was solved for.
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Density cleaning plus construction of a K_{r,r}.
    Extract {
        graph: PathBuf,
        #[arg(long)]
        r: usize,
        /// Host per-side bound; defaults to the graph's larger side.
        #[arg(long)]
        n: Option<usize>,
    },
    /// k-search, rounding and baseline; prints the run report.
    Pipeline {
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        tau: Option<f64>,
        /// Solve at this k only instead of searching.
        #[arg(long)]
        fixed_k: Option<usize>,
        /// Plain bisection instead of the descending scan.
        #[arg(long, conflicts_with = "fixed_k")]
        binary: bool,
        #[arg(long)]
        no_baseline: bool,
        /// Include wall-clock timings (output then differs between runs).
        #[arg(long)]
        timings: bool,
        /// Write the report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run an experiment spec; writes per-run JSON and aggregate.csv.
    Bench {
        spec: PathBuf,
        #[arg(short, long, default_value = "bench-out")]
        output: PathBuf,
        /// Overrides the seed of instances without their own seeds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        timings: bool,
    },
}

fn read_graph(path: &Path) -> Result<BipartiteGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_graph(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct BicliqueOut<'a> {
    size: usize,
    left: &'a [usize],
    right: &'a [usize],
}

impl<'a> From<&'a Biclique> for BicliqueOut<'a> {
    fn from(b: &'a Biclique) -> Self {
        Self {
            size: b.size(),
            left: b.left(),
            right: b.right(),
        }
    }
}

fn generate(kind: Kind, n: Option<usize>, k: Option<usize>, sides: (Option<usize>, Option<usize>), p: f64, seed: u64) -> Result<String> {
    let need = |v: Option<usize>, name: &str| v.with_context(|| format!("--{name} is required for this kind"));
    let side = |v: Option<usize>, name: &str| v.or(n).with_context(|| format!("--{name} or --n is required"));
    let mut comments = vec![format!("rng {RNG_ALGORITHM} seed {seed}")];
    let g = match kind {
        Kind::Planted => {
            let (g, sol) = planted_instance(need(n, "n")?, need(k, "k")?, p, seed)?;
            comments.push(format!("planted k={} p={p}", sol.biclique.size()));
            comments.push(format!("planted left {:?}", sol.biclique.left()));
            comments.push(format!("planted right {:?}", sol.biclique.right()));
            g
        }
        Kind::Random => {
            comments.push(format!("random p={p}"));
            random_bipartite(side(sides.0, "n-u")?, side(sides.1, "n-v")?, p, seed)?
        }
        Kind::Complete => complete(side(sides.0, "n-u")?, side(sides.1, "n-v")?)?,
        Kind::Empty => empty(side(sides.0, "n-u")?, side(sides.1, "n-v")?)?,
    };
    Ok(serialize_graph_with_comments(&g, &comments))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Generate {
            kind,
            n,
            k,
            n_u,
            n_v,
            p,
            seed,
            output,
        } => {
            let text = generate(kind, n, k, (n_u, n_v), p, seed)?;
            emit(output.as_deref(), &text)?;
        }
        Command::Exact { graph, limit } => {
            let g = read_graph(&graph)?;
            let b = exact_mbb(&g, Some(limit))?;
            emit(None, &json(&BicliqueOut::from(&b))?)?;
        }
        Command::SolveSdp {
            graph,
            k,
            weak,
            output,
            max_iterations,
        } => {
            let g = read_graph(&graph)?;
            let problem = if weak {
                build_weak_relaxation(&g, k)?
            } else {
                build_strong_relaxation(&g, k)?
            };
            let mut cfg = SolverConfig::default();
            if let Some(m) = max_iterations {
                cfg.max_iterations = m;
            }
            let out = solve_feasibility(&problem, &cfg)?;
            #[derive(Serialize)]
            struct SolveOut<'a> {
                relaxation: String,
                status: &'a str,
                max_violation: f64,
                iterations: usize,
                min_eigenvalue: Option<f64>,
            }
            let min_eigenvalue = match out.gram() {
                Some(m) => Some(check_feasibility(&problem, m, cfg.eps_feas)?.min_eigenvalue),
                None => None,
            };
            let summary = SolveOut {
                relaxation: problem.label(),
                status: out.status_name(),
                max_violation: out.max_violation,
                iterations: out.iterations,
                min_eigenvalue,
            };
            match out.gram() {
                Some(m) => {
                    if let Some(path) = &output {
                        emit(Some(path), &m.to_text())?;
                    }
                    emit(None, &json(&summary)?)?;
                }
                None => {
                    emit(None, &json(&summary)?)?;
                    eprintln!("INFEASIBLE");
                    return Ok(EXIT_INFEASIBLE);
                }
            }
        }
        Command::Round {
            graph,
            gram,
            k,
            seed,
            trials,
            tau,
        } => {
            let g = read_graph(&graph)?;
            let text = fs::read_to_string(&gram).with_context(|| format!("reading {}", gram.display()))?;
            let m = GramMatrix::from_text(&text)?;
            let sol = gram_to_vectors(&m, EPS_PSD)?;
            let mut params = RoundingParams::new(g.n(), k, seed)?;
            if let Some(t) = trials {
                params = params.with_trials(t);
            }
            if let Some(t) = tau {
                params = params.with_tau(t);
            }
            let result = round_many(&sol, &g, &params)?;
            let diag = diagnostics(&sol, &g, &params)?;
            #[derive(Serialize)]
            struct RoundOut<'a> {
                rng: &'a str,
                params: &'a RoundingParams,
                summary: mbb::pipeline::RoundingSummary,
                diagnostics: mbb::rounding::Diagnostics,
                best: Option<BicliqueOut<'a>>,
            }
            let out = RoundOut {
                rng: RNG_ALGORITHM,
                params: &params,
                summary: mbb::pipeline::RoundingSummary::from_result(k.round() as usize, &result),
                diagnostics: diag,
                best: result.best.as_ref().map(BicliqueOut::from),
            };
            emit(None, &json(&out)?)?;
        }
        Command::Extract { graph, r, n } => {
            let g = read_graph(&graph)?;
            let n = n.unwrap_or(g.n());
            match greedy_extract(&g, r, n) {
                Some(b) => {
                    #[derive(Serialize)]
                    struct ExtractOut<'a> {
                        precondition_holds: bool,
                        best_extractable_r: usize,
                        biclique: BicliqueOut<'a>,
                    }
                    let out = ExtractOut {
                        precondition_holds: lemma_precondition(&g, r, n),
                        best_extractable_r: best_extractable_r(&g, n),
                        biclique: (&b).into(),
                    };
                    emit(None, &json(&out)?)?;
                }
                None => emit(None, "none\n")?,
            }
        }
        Command::Pipeline {
            graph,
            seed,
            trials,
            tau,
            fixed_k,
            binary,
            no_baseline,
            timings,
            output,
        } => {
            let g = read_graph(&graph)?;
            let cfg = PipelineConfig {
                k_search: match (fixed_k, binary) {
                    (Some(k), _) => KSearch::Fixed(k),
                    (None, true) => KSearch::Binary,
                    (None, false) => KSearch::Descending,
                },
                trials,
                tau,
                seed,
                baseline: !no_baseline,
                record_timings: timings,
                ..PipelineConfig::default()
            };
            let name = graph.file_name().map_or("graph".into(), |s| s.to_string_lossy().into_owned());
            let mut info = InstanceInfo::of(&name, &g);
            info.seed = Some(seed);
            let (best, report) = approximate_mbb_named(&g, &cfg, info)?;
            if !best.is_empty() && !best.verify(&g) {
                bail!("internal error: unverified biclique");
            }
            emit(output.as_deref(), &json(&report)?)?;
            if output.is_some() {
                emit(None, &json(&BicliqueOut::from(&best))?)?;
            }
        }
        Command::Bench {
            spec,
            output,
            seed,
            timings,
        } => {
            let mut s = load_experiment(&spec)?;
            if let Some(seed) = seed {
                s.pipeline.seed = seed;
            }
            s.pipeline.record_timings |= timings;
            let summary = run_experiment(&s, &output)?;
            println!(
                "{} runs, {} failures, aggregate written to {}",
                summary.runs,
                summary.failures,
                summary.csv.display()
            );
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Batch runs described by a JSON spec: one JSON record per run and an
//! aggregate CSV, which is rebuilt from the records after re-verifying every
//! biclique against its regenerated instance.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{approximate_mbb_named, greedy_baseline, InstanceInfo, PipelineConfig, RunReport};
use crate::error::{Error, Result};
use crate::exact::exact_mbb;
use crate::graph::{complete, empty, parse_graph, planted_instance, random_bipartite, Biclique, BipartiteGraph};

pub const CSV_HEADER: [&str; 7] = ["instance", "n", "planted_k", "found_size", "exact_size", "method", "time"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    Planted {
        #[serde(default)]
        name: Option<String>,
        n: usize,
        k: usize,
        p: f64,
        seeds: Vec<u64>,
    },
    Random {
        #[serde(default)]
        name: Option<String>,
        n_u: usize,
        n_v: usize,
        p: f64,
        seeds: Vec<u64>,
    },
    Complete {
        #[serde(default)]
        name: Option<String>,
        n_u: usize,
        n_v: usize,
    },
    Empty {
        #[serde(default)]
        name: Option<String>,
        n_u: usize,
        n_v: usize,
    },
    /// A graph file in the text format, resolved relative to the spec file.
    File {
        #[serde(default)]
        name: Option<String>,
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Pipeline,
    Baseline,
    Exact,
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::Pipeline]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    /// Compute the exact optimum for the `exact_size` column.
    #[serde(default)]
    pub exact: bool,
    /// Size guard handed to the exact solver.
    #[serde(default)]
    pub exact_limit: Option<usize>,
    /// Directory that `file` instances are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)?;
    let mut spec: ExperimentSpec =
        serde_json::from_str(&text).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
    spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(spec)
}

/// One instance of the expanded run matrix.
#[derive(Debug, Clone)]
struct Case {
    id: String,
    spec: InstanceSpec,
    seed: Option<u64>,
}

fn expand(spec: &ExperimentSpec) -> Vec<Case> {
    let mut out = Vec::new();
    for (idx, inst) in spec.instances.iter().enumerate() {
        let (label, seeds) = match inst {
            InstanceSpec::Planted { name, n, k, p, seeds } => {
                (name.clone().unwrap_or_else(|| format!("planted-n{n}-k{k}-p{p}")), Some(seeds))
            }
            InstanceSpec::Random { name, n_u, n_v, p, seeds } => {
                (name.clone().unwrap_or_else(|| format!("random-{n_u}x{n_v}-p{p}")), Some(seeds))
            }
            InstanceSpec::Complete { name, n_u, n_v } => {
                (name.clone().unwrap_or_else(|| format!("complete-{n_u}x{n_v}")), None)
            }
            InstanceSpec::Empty { name, n_u, n_v } => (name.clone().unwrap_or_else(|| format!("empty-{n_u}x{n_v}")), None),
            InstanceSpec::File { name, path } => (
                name.clone().unwrap_or_else(|| {
                    path.file_stem().map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned())
                }),
                None,
            ),
        };
        let label: String = label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
            .collect();
        match seeds {
            Some(seeds) => out.extend(seeds.iter().map(|&s| Case {
                id: format!("{idx:03}-{label}-s{s}"),
                spec: inst.clone(),
                seed: Some(s),
            })),
            None => out.push(Case {
                id: format!("{idx:03}-{label}"),
                spec: inst.clone(),
                seed: None,
            }),
        }
    }
    out
}

fn build(case: &Case, base: &Path) -> Result<(BipartiteGraph, Option<usize>)> {
    let seed = case.seed.unwrap_or(0);
    Ok(match &case.spec {
        InstanceSpec::Planted { n, k, p, .. } => (planted_instance(*n, *k, *p, seed)?.0, Some(*k)),
        InstanceSpec::Random { n_u, n_v, p, .. } => (random_bipartite(*n_u, *n_v, *p, seed)?, None),
        InstanceSpec::Complete { n_u, n_v, .. } => (complete(*n_u, *n_v)?, None),
        InstanceSpec::Empty { n_u, n_v, .. } => (empty(*n_u, *n_v)?, None),
        InstanceSpec::File { path, .. } => (parse_graph(&fs::read_to_string(base.join(path))?)?, None),
    })
}

/// Output of one method on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    /// CSV label: `pipeline:<winner>`, `baseline` or `exact`.
    pub method: String,
    pub biclique: Biclique,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub instance: Option<InstanceInfo>,
    pub exact_size: Option<usize>,
    pub results: Vec<MethodResult>,
    pub pipeline: Option<RunReport>,
    /// Set when the run failed; the harness carries on with the next run.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSummary {
    pub runs: usize,
    pub failures: usize,
    pub csv: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_case(case: &Case, spec: &ExperimentSpec) -> RunRecord {
    let mut record = RunRecord {
        id: case.id.clone(),
        instance: None,
        exact_size: None,
        results: Vec::new(),
        pipeline: None,
        error: None,
    };
    if let Err(e) = run_case_inner(case, spec, &mut record) {
        record.error = Some(e.to_string());
    }
    record
}

fn run_case_inner(case: &Case, spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let (g, planted_k) = build(case, &spec.base_dir)?;
    let mut info = InstanceInfo::of(&case.id, &g);
    info.planted_k = planted_k;
    info.seed = case.seed;
    record.instance = Some(info.clone());
    let timed = spec.pipeline.record_timings;
    let ms = |t: Instant| timed.then(|| t.elapsed().as_secs_f64() * 1e3);

    if spec.exact || spec.methods.contains(&MethodName::Exact) {
        let t = Instant::now();
        let b = exact_mbb(&g, spec.exact_limit)?;
        record.exact_size = Some(b.size());
        if spec.methods.contains(&MethodName::Exact) {
            record.results.push(MethodResult {
                method: "exact".into(),
                biclique: b,
                millis: ms(t),
            });
        }
    }
    for m in &spec.methods {
        let t = Instant::now();
        match m {
            MethodName::Pipeline => {
                let mut cfg = spec.pipeline.clone();
                cfg.seed = case.seed.unwrap_or(cfg.seed);
                let (b, rep) = approximate_mbb_named(&g, &cfg, info.clone())?;
                record.results.push(MethodResult {
                    method: format!("pipeline:{}", rep.method.name()),
                    biclique: b,
                    millis: ms(t),
                });
                record.pipeline = Some(rep);
            }
            MethodName::Baseline => record.results.push(MethodResult {
                method: "baseline".into(),
                biclique: greedy_baseline(&g),
                millis: ms(t),
            }),
            MethodName::Exact => {}
        }
    }
    Ok(())
}

/// Executes every run, writing `runs/<id>.json` under `out_dir`, then
/// aggregates them into `out_dir/aggregate.csv`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentSummary> {
    let runs_dir = out_dir.join("runs");
    fs::create_dir_all(&runs_dir)?;
    let cases = expand(spec);
    for case in &cases {
        let record = run_case(case, spec);
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        write_atomic(&runs_dir.join(format!("{}.json", case.id)), text.as_bytes())?;
    }
    aggregate_reports(spec, out_dir)
}

/// Rebuilds the aggregate CSV from the run records, re-verifying every
/// biclique. A biclique that fails verification is listed with the method
/// suffixed `:unverified` and no size.
pub fn aggregate_reports(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentSummary> {
    let runs_dir = out_dir.join("runs");
    let csv_path = out_dir.join("aggregate.csv");
    let mut buf = Vec::new();
    let mut failures = 0;
    let cases = expand(spec);
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(CSV_HEADER)?;
        for case in &cases {
            let path = runs_dir.join(format!("{}.json", case.id));
            let record: RunRecord = match fs::read_to_string(&path)
                .map_err(Error::from)
                .and_then(|t| serde_json::from_str(&t).map_err(Error::from))
            {
                Ok(r) => r,
                Err(e) => {
                    failures += 1;
                    w.write_record([case.id.as_str(), "", "", "", "", &format!("error: {e}"), ""])?;
                    continue;
                }
            };
            let graph = build(case, &spec.base_dir).ok().map(|(g, _)| g);
            let n = graph.as_ref().map_or(String::new(), |g| g.n().to_string());
            let planted = record
                .instance
                .as_ref()
                .and_then(|i| i.planted_k)
                .map_or(String::new(), |k| k.to_string());
            let exact = record.exact_size.map_or(String::new(), |k| k.to_string());
            if let Some(err) = &record.error {
                failures += 1;
                w.write_record([record.id.as_str(), &n, &planted, "", &exact, &format!("error: {err}"), ""])?;
                continue;
            }
            for res in &record.results {
                let ok = graph
                    .as_ref()
                    .is_some_and(|g| res.biclique.is_empty() || res.biclique.verify(g));
                let (found, method) = if ok {
                    (res.biclique.size().to_string(), res.method.clone())
                } else {
                    failures += 1;
                    (String::new(), format!("{}:unverified", res.method))
                };
                let time = res.millis.map_or(String::new(), |t| format!("{t:.3}"));
                w.write_record([record.id.as_str(), &n, &planted, &found, &exact, &method, &time])?;
            }
        }
        w.flush()?;
    }
    write_atomic(&csv_path, &buf)?;
    Ok(ExperimentSummary {
        runs: cases.len(),
        failures,
        csv: csv_path,
    })
}

//! Deterministic execution of selected experiments and persistence of their outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use critflow::grid::io;
use critflow::report::{Verdict, CSV_HEADER};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, Result};
use crate::manifest::{CheckRecord, ExperimentRecord, RunManifest};
use crate::registry::{find, registry, Outcome, MODULES};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "CRITFLOW_WORKERS";

/// Worker count from the environment, else the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Registry ids selected by `target`: `all`, a module name or one id.
pub fn select(target: &str) -> Result<Vec<&'static str>> {
    if target == "all" {
        return Ok(registry().iter().map(|e| e.id).collect());
    }
    if MODULES.contains(&target) {
        return Ok(registry().iter().filter(|e| e.module == target).map(|e| e.id).collect());
    }
    find(target).map(|e| vec![e.id]).ok_or_else(|| CliError::UnknownId(target.to_string()))
}

/// Resolve and validate configs for `ids`; nothing is computed or written.
pub fn plan(ids: &[&str], overrides: &Overrides, seed: Option<u64>) -> Result<Vec<ExperimentConfig>> {
    let mut cfgs = ids
        .iter()
        .map(|id| {
            find(id)
                .map(ExperimentConfig::defaults)
                .ok_or_else(|| CliError::UnknownId(id.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    overrides.apply(&mut cfgs)?;
    if let Some(s) = seed {
        for c in cfgs.iter_mut() {
            c.seed = s;
        }
    }
    for c in &cfgs {
        let exp = find(&c.id).expect("planned ids are registered");
        exp.validate(&c.params)
            .map_err(|e| CliError::Config(format!("{}: {e}", c.id)))?;
    }
    Ok(cfgs)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Write to a sibling temporary file, then rename over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    write(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Every report of an outcome as one CSV.
pub fn outcome_csv(outcome: &Outcome) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in &outcome.reports {
        s.push_str(&r.csv_rows());
    }
    s
}

/// Write the outputs of one experiment under `dir`; returns the file names.
fn persist(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> Result<()> {
        write(&dir.join(&name), bytes)?;
        names.push(name);
        Ok(())
    };
    put("results.csv".into(), outcome_csv(outcome).as_bytes())?;
    let mut summary = format!("{} [{}]\n", cfg.id, outcome.verdict());
    for r in &outcome.reports {
        summary.push_str(&r.summary());
    }
    put("summary.txt".into(), summary.as_bytes())?;
    put("config.toml".into(), cfg.to_toml().as_bytes())?;
    for (name, field) in &outcome.fields {
        let mut buf = Vec::new();
        io::write_field(field, &mut buf)?;
        put(format!("{name}.cff"), &buf)?;
    }
    for (name, table) in &outcome.tables {
        put(name.clone(), table.as_bytes())?;
    }
    Ok(names)
}

fn run_one(cfg: &ExperimentConfig, out: &Path) -> ExperimentRecord {
    let exp = find(&cfg.id).expect("planned ids are registered");
    let start = Instant::now();
    let result = exp.run(&cfg.params, cfg.seed);
    let wall_seconds = start.elapsed().as_secs_f64();
    let dir = out.join(&cfg.id);
    let mut rec = ExperimentRecord {
        id: cfg.id.clone(),
        module: exp.module.to_string(),
        seed: cfg.seed,
        config: cfg.params.clone(),
        verdict: Verdict::Inconclusive.as_str().to_string(),
        checks: Vec::new(),
        wall_seconds,
        outputs: Vec::new(),
        error: None,
    };
    match result.map_err(CliError::from).and_then(|o| persist(&dir, cfg, &o).map(|n| (o, n))) {
        Ok((outcome, names)) => {
            rec.verdict = outcome.verdict().as_str().to_string();
            rec.outputs = names.into_iter().map(|n| format!("{}/{n}", cfg.id)).collect();
            for r in &outcome.reports {
                for c in &r.checks {
                    rec.checks.push(CheckRecord {
                        report: r.id.clone(),
                        name: c.name.clone(),
                        outcome: c.outcome.as_str().to_string(),
                        detail: c.detail.clone(),
                    });
                }
            }
        }
        Err(e) => {
            rec.verdict = "error".into();
            rec.error = Some(e.to_string());
        }
    }
    rec
}

/// Run `cfgs` on a pool of `workers` threads, write all outputs under `out`
/// and finish with an atomically written `manifest.json`.
pub fn run_many(cfgs: &[ExperimentConfig], out: &Path, workers: usize, seed: Option<u64>) -> Result<RunManifest> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    let mut records: Vec<ExperimentRecord> = pool.install(|| cfgs.par_iter().map(|c| run_one(c, out)).collect());
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let mut echo = String::new();
    for c in cfgs {
        echo.push_str(&c.to_toml());
    }
    write(&out.join("config.toml"), echo.as_bytes())?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        seed,
        workers,
        experiments: records,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    write_atomic(&out.join("manifest.json"), json.as_bytes())?;
    Ok(manifest)
}

/// Plan, validate and run one experiment with defaults plus `overrides`.
pub fn run_experiment(id: &str, overrides: &Overrides, out: &Path, workers: usize) -> Result<RunManifest> {
    let cfgs = plan(&[id], overrides, None)?;
    run_many(&cfgs, out, workers, overrides.seed)
}

/// Default output directory.
pub fn default_out() -> PathBuf {
    PathBuf::from("critflow-out")
}

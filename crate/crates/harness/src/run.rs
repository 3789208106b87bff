//! Experiment execution: parallel trials, fixed-order aggregation, and
//! CSV/JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rculmc_core::metrics::moment_error;
use rculmc_core::oracles::{
    prop5_initial_moments, prop5_lower_bound, prop5_second_moment_floor, second_moment_w2_lower_bound,
    RcMomentRecursion,
};
use rculmc_core::potentials::Potential;
use rculmc_core::samplers::{validate_stepsize, AdmissibilityReport, Algorithm, Chain, SamplerConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{BuiltTarget, ExperimentConfig, ExperimentKind, OracleConfig};
use crate::error::{HarnessError, Result};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "RCULMC_WORKERS";

/// Bits of the ChaCha stream index reserved for the trial index; the
/// sampler index occupies the bits above.
const TRIAL_STREAM_BITS: u32 = 32;

/// One snapshot of one sampler's cost-error curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub label: String,
    pub h: f64,
    /// Requested snapshot cost.
    pub grid_cost: u64,
    /// Cost actually spent; ULMC stops at the last multiple of `d` that fits.
    pub cost_units: u64,
    pub iterations: u64,
    pub error: f64,
    pub metric_name: String,
    pub seed: u64,
}

/// One row of the second-moment recursion experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub algorithm: String,
    pub label: String,
    pub h: f64,
    pub grid_cost: u64,
    pub cost_units: u64,
    pub iterations: u64,
    /// `E|w^m|²` from the exact recursion.
    pub error: f64,
    pub metric_name: String,
    pub seed: u64,
    /// Floor on `E|w^m|²` from the lower-bound argument.
    pub ew2_floor: f64,
    /// `max(0, √E|w^m|² − √(2d))`.
    pub w2_lower_bound: f64,
    /// The stated lower bound on `W₂(q_m, p)`.
    pub w2_bound_stated: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    /// Overrides the environment and the default parallelism.
    pub workers: Option<usize>,
    /// Directory relative target paths resolve against.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub manifest_path: PathBuf,
    pub manifest: Value,
}

/// Explicit value, else `RCULMC_WORKERS`, else the available parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    let n = match explicit {
        Some(n) => n,
        None => match std::env::var(WORKERS_ENV) {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("{WORKERS_ENV} = `{s}` is not a worker count")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(HarnessError::Config("worker count must be at least 1".into()));
    }
    Ok(n)
}

/// Runs an experiment and writes its CSVs and `manifest.json`.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let output_dir = opts
        .output_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| HarnessError::Usage("no output directory given".into()))?;
    fs::create_dir_all(&output_dir).map_err(|e| HarnessError::io(&output_dir, e))?;
    let started = Instant::now();
    let (csv_paths, details) = match config.kind {
        ExperimentKind::Sampling => run_sampling(config, opts, &output_dir)?,
        ExperimentKind::Prop5Oracle => run_prop5(config, &output_dir)?,
    };
    let mut manifest = json!({
        "name": config.name,
        "kind": config.kind,
        "config": config,
        "config_hash": config.hash(),
        "versions": { "rculmc": env!("CARGO_PKG_VERSION") },
        "outputs": csv_paths
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect::<Vec<_>>(),
    });
    let obj = manifest.as_object_mut().expect("object literal");
    if let Value::Object(extra) = details {
        obj.extend(extra);
    }
    obj.insert("wall_time_seconds".into(), json!(started.elapsed().as_secs_f64()));
    let manifest_path = output_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&manifest_path, text + "\n").map_err(|e| HarnessError::io(&manifest_path, e))?;
    Ok(RunOutcome {
        output_dir,
        csv_paths,
        manifest_path,
        manifest,
    })
}

fn report_json(label: &str, strict: bool, r: &AdmissibilityReport) -> Value {
    let b = r.binding();
    json!({
        "label": label,
        "algorithm": r.algorithm.as_str(),
        "mode": if strict { "strict" } else { "permissive" },
        "admissible": r.admissible(),
        "gamma_max": r.gamma_max,
        "h_max": r.h_max,
        "min_phi": r.min_phi,
        "schedule_limited": r.schedule_limited,
        "binding": { "name": b.name, "bound": b.description, "value": b.value, "limit": b.limit },
        "checks": r.checks.iter().map(|c| json!({
            "name": c.name,
            "bound": c.description,
            "value": c.value,
            "limit": c.limit,
            "passed": c.passed,
        })).collect::<Vec<_>>(),
    })
}

struct Prepared {
    label: String,
    algorithm: Algorithm,
    h: f64,
    config: SamplerConfig,
}

fn run_sampling(config: &ExperimentConfig, opts: &RunOptions, out: &Path) -> Result<(Vec<PathBuf>, Value)> {
    let target = config
        .target
        .as_ref()
        .expect("validated")
        .build(opts.base_dir.as_deref())?;
    let potential = target.potential();
    let k = config.metric.k;
    let reference = target.reference_moment(k)?;
    let init = config.init.build(potential.dim(), Some(&reference))?;
    let grid = config.grid.as_ref().expect("validated").points()?;
    let trials = config.trials.expect("validated");
    let workers = resolve_workers(opts.workers)?;

    let mut prepared = Vec::new();
    let mut admissibility = Vec::new();
    for (index, entry) in config.samplers.iter().enumerate() {
        let label = entry.label()?;
        let algorithm = entry.algorithm()?;
        let sampler = entry
            .sampler_config(potential)?
            .with_init(init.clone())
            .with_seed(config.master_seed)
            .with_stream((index as u64) << TRIAL_STREAM_BITS);
        let report = validate_stepsize(potential.constants(), &sampler, algorithm);
        if entry.strict {
            if let Some(c) = report.first_violation() {
                return Err(HarnessError::Config(format!(
                    "sampler `{label}` refused in strict mode: {} violated ({:e} > {:e})",
                    c.description, c.value, c.limit
                )));
            }
        }
        admissibility.push(report_json(&label, entry.strict, &report));
        prepared.push(Prepared {
            label,
            algorithm,
            h: entry.h,
            config: sampler,
        });
    }
    if trials >> TRIAL_STREAM_BITS != 0 {
        return Err(HarnessError::Config(format!("at most 2^{TRIAL_STREAM_BITS} trials")));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let metric_name = config.metric.name();
    let mut csv_paths = Vec::new();
    let mut timings = Vec::new();
    let mut seeds = Vec::new();
    for p in &prepared {
        let started = Instant::now();
        let records = pool.install(|| match &target {
            BuiltTarget::Experiment(t) => sampler_curve(t, p, &grid, trials, &reference, &metric_name, config.master_seed),
            BuiltTarget::Quadratic(t) => sampler_curve(t, p, &grid, trials, &reference, &metric_name, config.master_seed),
            BuiltTarget::Graph(t) => sampler_curve(t, p, &grid, trials, &reference, &metric_name, config.master_seed),
        })?;
        let path = out.join(format!("{}.csv", p.label));
        write_csv(&path, &records)?;
        csv_paths.push(path);
        timings.push(json!({ "label": p.label, "seconds": started.elapsed().as_secs_f64() }));
        seeds.push(json!({
            "label": p.label,
            "rng_seed": p.config.rng_seed,
            "stream_base": p.config.rng_stream,
        }));
    }
    let details = json!({
        "seeds": {
            "master_seed": config.master_seed,
            "trials": trials,
            "derivation": "ChaCha8 seeded with master_seed; trial t of sampler s uses stream (s << 32) | t",
            "samplers": seeds,
        },
        "admissibility": admissibility,
        "workers": workers,
        "sampler_wall_time_seconds": timings,
    });
    Ok((csv_paths, details))
}

/// Leading-block positions at each grid point, and the `(cost, iterations)`
/// reached there, for one trial.
type TrialSnapshots = (Vec<f64>, Vec<(u64, u64)>);

/// Runs every trial of one sampler to each grid cost and reduces the
/// snapshots, in trial order, to one error per grid point.
fn sampler_curve<P: Potential>(
    target: &P,
    p: &Prepared,
    grid: &[u64],
    trials: u64,
    reference: &DMatrix<f64>,
    metric_name: &str,
    master_seed: u64,
) -> Result<Vec<RunRecord>> {
    let k = reference.nrows();
    let outcomes: Vec<Result<TrialSnapshots>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let config = p.config.clone().with_stream(p.config.rng_stream | t);
            let mut chain = Chain::new(target, &config, p.algorithm).map_err(HarnessError::running)?;
            let mut snaps = Vec::with_capacity(grid.len() * k);
            let mut marks = Vec::with_capacity(grid.len());
            for &c in grid {
                let reached = chain.advance_to_cost(c).map_err(HarnessError::running)?;
                snaps.extend_from_slice(&chain.state().x[..k]);
                marks.push((reached, chain.state().iter));
            }
            Ok((snaps, marks))
        })
        .collect();
    let mut snapshots = Vec::with_capacity(outcomes.len());
    let mut marks = None;
    for o in outcomes {
        let (s, m) = o?;
        match &marks {
            None => marks = Some(m),
            Some(expected) if *expected != m => {
                return Err(HarnessError::Numerical("trials disagree on snapshot cost".into()))
            }
            Some(_) => {}
        }
        snapshots.push(s);
    }
    let marks = marks.expect("at least one trial");
    let mut records = Vec::with_capacity(grid.len());
    for (g, (&grid_cost, &(cost_units, iterations))) in grid.iter().zip(&marks).enumerate() {
        let samples: Vec<&[f64]> = snapshots.iter().map(|s| &s[g * k..(g + 1) * k]).collect();
        let report = moment_error(&samples, reference, k).map_err(HarnessError::running)?;
        if !report.error.is_finite() {
            return Err(HarnessError::Numerical(format!("`{}` produced a non-finite error", p.label)));
        }
        records.push(RunRecord {
            algorithm: p.algorithm.as_str().into(),
            label: p.label.clone(),
            h: p.h,
            grid_cost,
            cost_units,
            iterations,
            error: report.error,
            metric_name: metric_name.into(),
            seed: master_seed,
        });
    }
    Ok(records)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Iterates the exact recursion, checking the floor at every step and
/// writing a row every `stride` steps.
pub fn prop5_rows(o: &OracleConfig) -> Result<(Vec<OracleRecord>, Option<u64>)> {
    let recursion = RcMomentRecursion::uniform(o.dim, o.h).map_err(HarnessError::setup)?;
    // Check the hypothesis up front so that a bad `h` is a config error.
    prop5_second_moment_floor(o.dim, o.h, 0).map_err(HarnessError::setup)?;
    let mut state = prop5_initial_moments(o.dim);
    let mut rows = Vec::new();
    let mut first_violation = None;
    for m in 0..=o.steps {
        let floor = prop5_second_moment_floor(o.dim, o.h, m).map_err(HarnessError::running)?;
        if !state.ew2.is_finite() {
            return Err(HarnessError::Numerical(format!("recursion diverged at step {m}")));
        }
        if state.ew2 < floor && first_violation.is_none() {
            first_violation = Some(m);
        }
        if m % o.stride == 0 || m == o.steps {
            rows.push(OracleRecord {
                algorithm: Algorithm::RcUlmc.as_str().into(),
                label: "prop5-oracle".into(),
                h: o.h,
                grid_cost: m,
                cost_units: m,
                iterations: m,
                error: state.ew2,
                metric_name: "ew2".into(),
                seed: 0,
                ew2_floor: floor,
                w2_lower_bound: second_moment_w2_lower_bound(state.ew2, o.dim),
                w2_bound_stated: prop5_lower_bound(o.dim, o.h, m).map_err(HarnessError::running)?,
            });
        }
        if m < o.steps {
            state = recursion.step(&state);
        }
    }
    Ok((rows, first_violation))
}

fn run_prop5(config: &ExperimentConfig, out: &Path) -> Result<(Vec<PathBuf>, Value)> {
    let o = config.oracle.as_ref().expect("validated");
    let (rows, violation) = prop5_rows(o)?;
    let path = out.join("prop5-oracle.csv");
    write_csv(&path, &rows)?;
    if let Some(m) = violation {
        return Err(HarnessError::Numerical(format!(
            "recursion fell below its floor at step {m} (rows written to {})",
            path.display()
        )));
    }
    Ok((vec![path], json!({ "floor_holds": true, "rows": rows.len() })))
}

/// Reads a cost-error CSV written by [`run`].
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let mut rows = Vec::new();
    for row in r.deserialize::<RunRecord>() {
        rows.push(row.map_err(|e| HarnessError::csv(path, e))?);
    }
    if rows.is_empty() {
        return Err(HarnessError::csv(path, "no records"));
    }
    Ok(rows)
}

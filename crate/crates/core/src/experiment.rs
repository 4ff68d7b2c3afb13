//! Monte Carlo runs of the filter over the simulated scenario.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FilterError, RunError};
use crate::estimation::{existence, extract_estimates, mean_cardinality, TrackEstimate};
use crate::gaussian::MeasVec;
use crate::glmb::{joint_predict_update, GlmbDensity, StepStats};
use crate::labels::Scan;
use crate::metrics::{ancestry_analysis, cardinality_stats, ospa, AncestryRecord, CardinalityStat, Ospa};
use crate::models::{Models, ScenarioConfig};
use crate::seeds::{derive, stream, PURPOSE_FILTER, PURPOSE_SCAN};
use crate::simulator::{generate_scan, generate_truth, write_scans_csv, Truth};

pub const META_SCHEMA_VERSION: u32 = 1;

/// Tolerance of the normalization and PHD-mass checks.
pub const INVARIANT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub scan: Scan,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct TrialOutput {
    pub trial: usize,
    pub seed: u64,
    /// `estimates[k - 1]` holds the estimates at scan `k`.
    pub estimates: Vec<Vec<TrackEstimate>>,
    pub ospa: Vec<Ospa>,
    pub stats: Vec<StepStats>,
    pub violations: Vec<Violation>,
    pub ancestry: Vec<AncestryRecord>,
    pub scans: Vec<Vec<MeasVec>>,
    pub wall_seconds: f64,
}

impl TrialOutput {
    pub fn cardinality(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.len() as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OspaRow {
    pub scan: Scan,
    pub total: f64,
    pub loc: f64,
    pub card: f64,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ScenarioConfig,
    pub truth: Truth,
    pub trials: Vec<TrialOutput>,
    pub cardinality: Vec<CardinalityStat>,
    pub ospa: Vec<OspaRow>,
    pub wall_seconds: f64,
}

impl Experiment {
    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.trials.iter().flat_map(|t| t.violations.iter())
    }

    pub fn ancestry(&self) -> impl Iterator<Item = &AncestryRecord> {
        self.trials.iter().flat_map(|t| t.ancestry.iter())
    }
}

/// Seed of trial `trial` below the master seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive(master, &[trial as u64])
}

/// Runs one trial: simulates every scan and filters it, checking the
/// structural invariants of each posterior on the way.
pub fn run_trial(
    cfg: &ScenarioConfig,
    models: &Models,
    truth: &Truth,
    trial: usize,
) -> Result<TrialOutput, FilterError> {
    let start = Instant::now();
    let seed = trial_seed(cfg.montecarlo.seed, trial);
    let horizon = truth.horizon;
    let mut density = GlmbDensity::empty(0);
    let mut out = TrialOutput {
        trial,
        seed,
        estimates: Vec::with_capacity(horizon as usize),
        ospa: Vec::with_capacity(horizon as usize),
        stats: Vec::with_capacity(horizon as usize),
        violations: Vec::new(),
        ancestry: Vec::new(),
        scans: Vec::with_capacity(horizon as usize),
        wall_seconds: 0.0,
    };
    for k in 1..=horizon {
        let alive = truth.alive(k);
        let states: Vec<_> = alive.iter().map(|(_, x)| *x).collect();
        let z = generate_scan(&states, &models.sensor, &mut stream(seed, &[PURPOSE_SCAN, k as u64]));
        let step = joint_predict_update(&density, &z, models, &cfg.filter, derive(seed, &[PURPOSE_FILTER, k as u64]))?;
        density = step.density;

        let mut messages = density.check_invariants();
        let mass: f64 = existence(&density).values().sum();
        let mean = mean_cardinality(&density);
        if (mass - mean).abs() > INVARIANT_TOL * mean.max(1.0) {
            messages.push(format!("PHD mass {mass} differs from expected cardinality {mean}"));
        }
        out.violations
            .extend(messages.into_iter().map(|message| Violation { trial, scan: k, message }));

        let est = extract_estimates(&density);
        let xs: Vec<[f64; 2]> = est.iter().map(|e| [e.mean[0], e.mean[1]]).collect();
        let ys: Vec<[f64; 2]> = alive.iter().map(|(_, x)| [x[0], x[1]]).collect();
        out.ospa.push(ospa(&xs, &ys, &cfg.ospa));
        out.estimates.push(est);
        out.stats.push(step.stats);
        out.scans.push(z);
    }
    out.ancestry = ancestry_analysis(trial, &out.estimates, truth, models).records;
    out.wall_seconds = start.elapsed().as_secs_f64();
    log::debug!("trial {trial} finished in {:.1} s", out.wall_seconds);
    Ok(out)
}

/// Runs every trial of `cfg` in parallel on the current rayon pool.
/// Results do not depend on the number of threads.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<Experiment, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    let models = cfg.models();
    let truth = generate_truth(cfg);
    let trials = (0..cfg.montecarlo.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &models, &truth, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(cfg.clone(), truth, trials, start.elapsed().as_secs_f64()))
}

pub fn summarize(config: ScenarioConfig, truth: Truth, trials: Vec<TrialOutput>, wall_seconds: f64) -> Experiment {
    let counts: Vec<usize> = (1..=truth.horizon).map(|k| truth.cardinality(k)).collect();
    let runs: Vec<Vec<f64>> = trials.iter().map(|t| t.cardinality()).collect();
    let cardinality = cardinality_stats(&runs, &counts);
    let n = trials.len() as f64;
    let ospa = (0..truth.horizon as usize)
        .map(|k| {
            let sum = |f: fn(&Ospa) -> f64| trials.iter().map(|t| f(&t.ospa[k])).sum::<f64>() / n;
            OspaRow {
                scan: k as Scan + 1,
                total: sum(|o| o.total),
                loc: sum(|o| o.localization),
                card: sum(|o| o.cardinality),
            }
        })
        .collect();
    Experiment {
        config,
        truth,
        trials,
        cardinality,
        ospa,
        wall_seconds,
    }
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    trial: usize,
    scan: Scan,
    label: &'a crate::labels::Label,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    existence: f64,
}

#[derive(Serialize)]
struct DiagnosticLine<'a> {
    trial: usize,
    #[serde(flatten)]
    stats: &'a StepStats,
    ospa: f64,
    estimated: usize,
    truth: usize,
}

#[derive(Serialize)]
pub struct TrialMeta {
    pub trial: usize,
    pub seed: u64,
    pub wall_seconds: f64,
}

#[derive(Serialize)]
pub struct Meta<'a> {
    pub schema_version: u32,
    pub package_version: &'static str,
    pub git_hash: Option<String>,
    pub threads: usize,
    pub master_seed: u64,
    pub config: &'a ScenarioConfig,
    pub trials: Vec<TrialMeta>,
    pub wall_seconds: f64,
}

impl<'a> Meta<'a> {
    pub fn new(exp: &'a Experiment, git_hash: Option<String>, threads: usize) -> Self {
        Meta {
            schema_version: META_SCHEMA_VERSION,
            package_version: env!("CARGO_PKG_VERSION"),
            git_hash,
            threads,
            master_seed: exp.config.montecarlo.seed,
            config: &exp.config,
            trials: exp
                .trials
                .iter()
                .map(|t| TrialMeta {
                    trial: t.trial,
                    seed: t.seed,
                    wall_seconds: t.wall_seconds,
                })
                .collect(),
            wall_seconds: exp.wall_seconds,
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, RunError> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn io(dir: &Path, name: &str) -> impl Fn(std::io::Error) -> RunError {
    let path = dir.join(name).display().to_string();
    move |source| RunError::Io {
        path: path.clone(),
        source,
    }
}

fn csv_err(dir: &Path, name: &str) -> impl Fn(csv::Error) -> RunError {
    let io = io(dir, name);
    move |e| io(e.into())
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), RunError> {
    let err = csv_err(dir, name);
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    for r in rows {
        w.serialize(r).map_err(&err)?;
    }
    w.flush().map_err(io(dir, name))
}

/// Names of the deterministic outputs written by [`write_outputs`].
pub const DETERMINISTIC_OUTPUTS: [&str; 7] = [
    "cardinality.csv",
    "ospa.csv",
    "ancestry.csv",
    "estimates.csv",
    "scans.csv",
    "truth.json",
    "diagnostics.jsonl",
];

/// Writes the aggregate CSVs, per-trial estimate log, per-step diagnostics,
/// truth, the first trial's scans and `meta.json` into `dir`.
pub fn write_outputs(dir: &Path, exp: &Experiment, meta: &Meta) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(io(dir, ""))?;
    write_csv(dir, "cardinality.csv", &exp.cardinality)?;
    write_csv(dir, "ospa.csv", &exp.ospa)?;
    write_csv(dir, "ancestry.csv", exp.ancestry().map(AncestryCsv::from))?;
    write_csv(
        dir,
        "estimates.csv",
        exp.trials.iter().flat_map(|t| {
            t.estimates.iter().enumerate().flat_map(move |(k, est)| {
                est.iter().map(move |e| EstimateRow {
                    trial: t.trial,
                    scan: k as Scan + 1,
                    label: &e.label,
                    x: e.mean[0],
                    y: e.mean[1],
                    vx: e.mean[2],
                    vy: e.mean[3],
                    existence: e.existence,
                })
            })
        }),
    )?;
    if let Some(first) = exp.trials.first() {
        write_scans_csv(&first.scans, create(dir, "scans.csv")?).map_err(csv_err(dir, "scans.csv"))?;
    }
    let mut f = create(dir, "truth.json")?;
    f.write_all(exp.truth.to_json().as_bytes())
        .and_then(|_| f.flush())
        .map_err(io(dir, "truth.json"))?;

    let mut f = create(dir, "diagnostics.jsonl")?;
    for t in &exp.trials {
        for (k, s) in t.stats.iter().enumerate() {
            let line = DiagnosticLine {
                trial: t.trial,
                stats: s,
                ospa: t.ospa[k].total,
                estimated: t.estimates[k].len(),
                truth: exp.truth.cardinality(k as Scan + 1),
            };
            serde_json::to_writer(&mut f, &line)?;
            f.write_all(b"\n").map_err(io(dir, "diagnostics.jsonl"))?;
        }
    }
    f.flush().map_err(io(dir, "diagnostics.jsonl"))?;

    let mut f = create(dir, "meta.json")?;
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n").and_then(|_| f.flush()).map_err(io(dir, "meta.json"))
}

#[derive(Serialize)]
struct AncestryCsv {
    run: usize,
    region: u32,
    root: String,
    birth_time: Option<Scan>,
    death_time: Option<Scan>,
    gen1_spawn_time: Option<Scan>,
    gen2_spawn_time: Option<Scan>,
    origin_error: bool,
    label_switch: bool,
    no_spawn: bool,
    reproduced: bool,
}

impl From<&AncestryRecord> for AncestryCsv {
    fn from(r: &AncestryRecord) -> Self {
        AncestryCsv {
            run: r.run,
            region: r.region,
            root: r.root.as_ref().map(|l| l.to_string()).unwrap_or_default(),
            birth_time: r.birth_time,
            death_time: r.death_time,
            gen1_spawn_time: r.gen1_spawn_time,
            gen2_spawn_time: r.gen2_spawn_time,
            origin_error: r.origin_error,
            label_switch: r.label_switch,
            no_spawn: r.no_spawn,
            reproduced: r.reproduced,
        }
    }
}

//! Oracle checks on small random instances, shared by `--selftest` and the
//! acceptance tests.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{gibbs_sample, murty_topk, CostRow, CostTable, RowKind};
use crate::estimation::{cardinality_distribution, existence};
use crate::gaussian::{Gaussian, GaussianMixture, MeasVec, StateMat, StateVec, TrackDensity};
use crate::glmb::{joint_predict_update, GlmbComponent, GlmbDensity};
use crate::labels::Label;
use crate::models::{ScenarioConfig, Truncation};
use crate::oracle::{enumerate_posterior, gibbs_target, relative_error, total_variation, NoSpawnReference};
use crate::seeds::stream;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{status} {} ({:.1} s): {}", c.name, c.seconds, c.detail)?;
        }
        Ok(())
    }
}

/// Config tweak applied to the filter side only, to show that the checks
/// can fail.
pub type Mutation = fn(&mut ScenarioConfig);

pub fn no_mutation(_: &mut ScenarioConfig) {}

fn exhaustive(cfg: &mut ScenarioConfig) {
    cfg.filter.truncation = Truncation::Exhaustive;
    cfg.filter.cap = usize::MAX;
    cfg.filter.mixture_cap = usize::MAX;
    cfg.filter.mixture_prune = 0.0;
}

fn timed(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (passed, detail) = f();
    Check {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> Gaussian<4> {
    let mean = StateVec::new(
        rng.gen_range(-300.0..300.0),
        rng.gen_range(-300.0..300.0),
        rng.gen_range(-10.0..10.0),
        rng.gen_range(-10.0..10.0),
    );
    let (sp, sv) = (rng.gen_range(20.0..200.0), rng.gen_range(1.0..25.0));
    Gaussian::new(mean, StateMat::from_diagonal(&StateVec::new(sp, sp, sv, sv)))
}

fn random_density(rng: &mut ChaCha8Rng) -> TrackDensity {
    let n = rng.gen_range(1..=2);
    let mut mix = GaussianMixture::new((0..n).map(|_| (rng.gen_range(0.2..1.0), random_state(rng))).collect());
    mix.normalize();
    mix
}

fn near(rng: &mut ChaCha8Rng, x: f64, y: f64, spread: f64) -> MeasVec {
    MeasVec::new(x + rng.gen_range(-spread..spread), y + rng.gen_range(-spread..spread))
}

/// Random guarded instance: up to two prior components with up to two
/// parents each, up to three birth regions, one spawn per parent and up to
/// three measurements.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (ScenarioConfig, GlmbDensity, Vec<MeasVec>) {
    let mut cfg = ScenarioConfig::default();
    exhaustive(&mut cfg);
    let births = rng.gen_range(0..=3);
    cfg.birth.regions.truncate(births);
    for r in &mut cfg.birth.regions {
        r.r_b = rng.gen_range(0.05..0.5);
    }
    cfg.dynamics.p_s = rng.gen_range(0.5..0.99);
    cfg.sensor.p_d = rng.gen_range(0.5..0.95);
    cfg.spawn.p_t = rng.gen_range(0.05..0.5);
    cfg.spawn.per_parent = 1;
    cfg.sensor.clutter_density = rng.gen_range(1e-6..1e-4);

    let pool: Vec<Label> = ["1,1", "2,2", "3,3"].iter().map(|s| s.parse().expect("label")).collect();
    let components = (0..rng.gen_range(1..=2))
        .map(|_| {
            let n = rng.gen_range(0..=2);
            let mut labels = pool.clone();
            while labels.len() > n {
                labels.remove(rng.gen_range(0..labels.len()));
            }
            let dens = labels.iter().map(|_| random_density(rng)).collect();
            GlmbComponent::new(labels, dens, rng.gen_range(0.1f64..1.0).ln())
        })
        .collect::<Vec<_>>();
    let means: Vec<StateVec> = components
        .iter()
        .flat_map(|c| c.densities().iter().map(|d| d.moment_match().mean))
        .collect();
    let z = (0..rng.gen_range(0..=3))
        .map(|_| match (rng.gen_range(0..3), means.is_empty()) {
            (0, false) => {
                let m = means[rng.gen_range(0..means.len())];
                near(rng, m[0] + m[2], m[1] + m[3], 20.0)
            }
            (1, false) => {
                let m = means[rng.gen_range(0..means.len())];
                near(rng, m[0] + m[2], m[1] + m[3], 90.0)
            }
            _ => near(rng, 0.0, 0.0, 450.0),
        })
        .collect();
    let mut prior = GlmbDensity { components, scan: 5 };
    prior.normalize();
    (cfg, prior, z)
}

/// Exhaustive filter step against the enumerated posterior on random
/// guarded instances: weights to `weight_tol` relative, cardinality
/// distribution and per-label existence to `moment_tol`.
pub fn oracle_equivalence(instances: usize, seed: u64, weight_tol: f64, moment_tol: f64, mutate: Mutation) -> Check {
    timed("oracle equivalence", || {
        let mut rng = stream(seed, &[0xe0]);
        let (mut worst_w, mut worst_m) = (0.0f64, 0.0f64);
        let mut failures = Vec::new();
        for case in 0..instances {
            let (cfg, prior, z) = random_instance(&mut rng);
            let models = cfg.models();
            let mut main_cfg = cfg.clone();
            mutate(&mut main_cfg);
            let oracle = match enumerate_posterior(&prior, &z, &models) {
                Ok(o) => o,
                Err(e) => {
                    failures.push(format!("case {case}: oracle error {e}"));
                    continue;
                }
            };
            let post = match joint_predict_update(&prior, &z, &main_cfg.models(), &main_cfg.filter, seed) {
                Ok(p) => p.density,
                Err(e) => {
                    failures.push(format!("case {case}: filter error {e}"));
                    continue;
                }
            };
            let mut seen = 0;
            for c in &post.components {
                let map = c.history_maps().pop().unwrap_or_default();
                let theta: Vec<u32> = map.iter().map(|m| m.1).collect();
                let w = oracle.weight(c.labels(), &theta);
                worst_w = worst_w.max(relative_error(c.weight(), w));
                seen += usize::from(w > 0.0);
            }
            let significant = oracle
                .hypotheses
                .iter()
                .filter(|h| h.log_weight > -600.0)
                .count();
            if seen < significant {
                failures.push(format!("case {case}: {seen} of {significant} hypotheses found"));
            }
            let rho = cardinality_distribution(&post);
            for n in 0..rho.len().max(oracle.cardinality.len()) {
                let a = rho.get(n).copied().unwrap_or(0.0);
                let b = oracle.cardinality.get(n).copied().unwrap_or(0.0);
                worst_m = worst_m.max((a - b).abs());
            }
            let ex = existence(&post);
            for (l, &b) in &oracle.existence {
                worst_m = worst_m.max((ex.get(l).copied().unwrap_or(0.0) - b).abs());
            }
        }
        let passed = failures.is_empty() && worst_w <= weight_tol && worst_m <= moment_tol;
        let mut detail = format!(
            "{instances} instances, max relative weight error {worst_w:.2e}, max moment error {worst_m:.2e}"
        );
        if let Some(f) = failures.first() {
            detail.push_str(&format!("; {} failures, first: {f}", failures.len()));
        }
        (passed, detail)
    })
}

/// With spawning disabled, several exhaustive filter steps against the
/// independent reference recursion, component by component.
pub fn no_spawn_reduction(scenarios: usize, seed: u64, tol: f64, mutate: Mutation) -> Check {
    timed("no-spawn reduction", || {
        let mut rng = stream(seed, &[0xe1]);
        let mut worst = 0.0f64;
        let mut failures = Vec::new();
        let mut compared = 0;
        for case in 0..scenarios {
            let mut cfg = ScenarioConfig::default();
            exhaustive(&mut cfg);
            cfg.spawn.p_t = 0.0;
            let (regions, scans) = if case % 2 == 0 { (1, 3) } else { (2, 2) };
            cfg.birth.regions.truncate(regions);
            for r in &mut cfg.birth.regions {
                r.r_b = rng.gen_range(0.1..0.6);
            }
            cfg.dynamics.p_s = rng.gen_range(0.6..0.99);
            cfg.sensor.p_d = rng.gen_range(0.5..0.95);
            cfg.sensor.clutter_density = rng.gen_range(1e-6..1e-4);
            let models = cfg.models();
            let mut main_cfg = cfg.clone();
            mutate(&mut main_cfg);
            let main_models = main_cfg.models();

            let mut reference = NoSpawnReference::default();
            let mut density = GlmbDensity::empty(0);
            for k in 1..=scans {
                let z: Vec<MeasVec> = (0..rng.gen_range(0..=2))
                    .map(|_| {
                        let r = &cfg.birth.regions[rng.gen_range(0..regions)];
                        near(&mut rng, r.mean[0], r.mean[1], 40.0)
                    })
                    .collect();
                if let Err(e) = reference.step(&z, &models) {
                    failures.push(format!("case {case} scan {k}: reference error {e}"));
                    break;
                }
                density = match joint_predict_update(&density, &z, &main_models, &main_cfg.filter, seed) {
                    Ok(s) => s.density,
                    Err(e) => {
                        failures.push(format!("case {case} scan {k}: filter error {e}"));
                        break;
                    }
                };
                let expected = reference.weights();
                let got: BTreeMap<_, _> = density
                    .components
                    .iter()
                    .map(|c| ((c.labels().to_vec(), c.history_maps()), c.weight()))
                    .collect();
                for (key, &w) in &expected {
                    let g = got.get(key).copied().unwrap_or(0.0);
                    if w > 1e-250 || g > 0.0 {
                        worst = worst.max(relative_error(g, w));
                        compared += 1;
                    }
                }
                if got.keys().any(|k| !expected.contains_key(k)) {
                    failures.push(format!("case {case} scan {k}: component missing from the reference"));
                }
            }
        }
        let passed = failures.is_empty() && worst <= tol;
        let mut detail = format!("{scenarios} scenarios, {compared} weights, max relative error {worst:.2e}");
        if let Some(f) = failures.first() {
            detail.push_str(&format!("; {} failures, first: {f}", failures.len()));
        }
        (passed, detail)
    })
}

/// Random cost table with `rows` survival rows and `m` measurements.
pub fn random_table(rng: &mut ChaCha8Rng, rows: usize, m: usize) -> CostTable {
    let labels: Vec<CostRow> = (0..rows)
        .map(|i| CostRow {
            label: Label::birth(1, i as u32 + 1).expect("label"),
            kind: RowKind::Survive,
        })
        .collect();
    let exist: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.1..0.95)).collect();
    let ratios: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..m).map(|_| rng.gen_range(-4.0f64..4.0).exp()).collect())
        .collect();
    let refs: Vec<&[f64]> = ratios.iter().map(|r| r.as_slice()).collect();
    CostTable::from_parts(labels, &exist, &refs, rng.gen_range(0.5..0.95), m)
}

/// Empirical distribution of `sweeps` Gibbs sweeps on random tables against
/// the exact target.
pub fn gibbs_total_variation(tables: usize, sweeps: usize, seed: u64, tol: f64) -> Check {
    timed("Gibbs total variation", || {
        let mut worst = 0.0f64;
        for t in 0..tables {
            let mut rng = stream(seed, &[0xe2, t as u64]);
            let table = random_table(&mut rng, 3, 2);
            let target = gibbs_target(&table);
            let samples = gibbs_sample(&table, &table.initial_vector(), sweeps, &mut rng);
            worst = worst.max(total_variation(&samples, &target));
        }
        (worst < tol, format!("{tables} tables, {sweeps} sweeps, max TV {worst:.4}"))
    })
}

/// Fraction of seeds for which `sweeps` Gibbs sweeps visit all of the three
/// best vectors found by ranked assignment.
pub fn murty_recovery(seeds: usize, sweeps: usize, seed: u64, required: usize) -> Check {
    timed("Murty top-3 recovery", || {
        let mut hits = 0;
        for s in 0..seeds {
            let mut rng = stream(seed, &[0xe3, s as u64]);
            let table = random_table(&mut rng, 3, 2);
            let best = murty_topk(&table, 3);
            let init = table.initial_vector();
            let mut visited = gibbs_sample(&table, &init, sweeps, &mut rng);
            visited.push(init);
            hits += usize::from(best.iter().all(|(g, _)| visited.contains(g)));
        }
        (hits >= required, format!("{hits} of {seeds} seeds"))
    })
}

/// Every oracle check at the acceptance tolerances.
pub fn run() -> Report {
    Report {
        checks: vec![
            no_spawn_reduction(20, 1, 1e-10, no_mutation),
            oracle_equivalence(200, 1, 1e-10, 1e-8, no_mutation),
            gibbs_total_variation(10, 100_000, 1, 0.05),
            murty_recovery(100, 1000, 1, 99),
        ],
    }
}

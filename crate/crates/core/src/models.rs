//! Scenario configuration and the concrete motion, birth, spawn and sensor
//! models built from it.
//!
//! Defaults reproduce the three-region spawning scenario: constant-velocity
//! motion with unit sampling time, position-only measurements with 10 m
//! noise, 66 clutter returns per scan over a 2 km square, three birth regions
//! and a single spawn slot per track placed 70 m to the side of its parent.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::SVector;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::gaussian::{
    Gaussian, MeasMat, MeasVec, ObsMat, OffsetModel, StateMat, StateVec, TrackDensity,
};

// ---------------------------------------------------------------------------
// Configuration file schema

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dynamics: DynamicsConfig,
    pub birth: BirthConfig,
    pub spawn: SpawnConfig,
    pub sensor: SensorConfig,
    pub filter: FilterConfig,
    pub ospa: OspaConfig,
    pub montecarlo: MonteCarloConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Sampling period in seconds.
    pub dt: f64,
    /// Process noise standard deviation (m/s²).
    pub sigma_v: f64,
    /// Survival probability.
    pub p_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BirthConfig {
    pub regions: Vec<BirthRegionConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthRegionConfig {
    pub r_b: f64,
    pub mean: [f64; 4],
    /// Per-axis standard deviation; the covariance is `std² · I₄`.
    pub std: f64,
    /// Index used in the labels of tracks born in this region.
    pub label_index: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpawnConfig {
    pub p_t: f64,
    /// Spawn slots per existing track and scan.
    pub per_parent: u32,
    /// Distance of a spawned object from its parent (m).
    pub distance: f64,
    /// Bearings relative to the parent heading (degrees), one mixture
    /// component each with equal weight.
    pub bearings_deg: Vec<f64>,
    /// Per-axis standard deviation of the spawn noise; `Q_T = std² · I₄`.
    pub q_t_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub p_d: f64,
    /// Measurement noise standard deviation (m).
    pub sigma_e: f64,
    /// Clutter intensity per square metre.
    pub clutter_density: f64,
    /// `[[x_min, x_max], [y_min, y_max]]` in metres.
    pub region: [[f64; 2]; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Gibbs sampling of association vectors.
    Gibbs,
    /// Every positive 1-1 vector; only feasible for tiny instances.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Total Gibbs sweeps shared among prior components per scan.
    pub hmax: usize,
    /// Minimum sweeps given to every prior component.
    pub min_sweeps: usize,
    /// Maximum number of GLMB components kept after each scan.
    pub cap: usize,
    /// Factor applied to `p_S` in the sampling cost table only.
    pub temper_s: f64,
    /// Factor applied to `p_D` in the sampling cost table only.
    pub temper_d: f64,
    /// Factor applied to `p_T` in the sampling cost table only.
    pub temper_t: f64,
    /// Per-track Gaussian mixture size limit.
    pub mixture_cap: usize,
    /// Relative weight below which per-track mixture components are dropped.
    pub mixture_prune: f64,
    /// Association maps kept per component; `None` keeps the full history.
    pub history_depth: Option<usize>,
    pub truncation: Truncation,
    /// Half-width, in predicted standard deviations per axis, of the window
    /// outside which measurements get zero weight in the sampling table.
    /// Exact hypothesis weights never use the gate.
    pub gate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OspaConfig {
    pub c: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    /// Number of scans per trial.
    pub horizon: u32,
    /// Scans a parent lives after its spawn event in the generated truth.
    pub parent_lifetime: u32,
    /// Scans over which a spawned truth track accelerates from rest to its
    /// cruise velocity; 0 starts it at cruise velocity.
    pub spawn_ramp: u32,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            dt: 1.0,
            sigma_v: 1.0,
            p_s: 0.99,
        }
    }
}

impl Default for BirthConfig {
    fn default() -> Self {
        let region = |x: f64, y: f64, label_index| BirthRegionConfig {
            r_b: 0.02,
            mean: [x, y, 0.0, 0.0],
            std: 10.0,
            label_index,
        };
        BirthConfig {
            regions: vec![
                region(0.0, 500.0, 1),
                region(433.0, -250.0, 2),
                region(-433.0, -250.0, 3),
            ],
        }
    }
}

impl Default for SpawnConfig {
    fn default() -> Self {
        SpawnConfig {
            p_t: 0.01,
            per_parent: 1,
            distance: 70.0,
            bearings_deg: vec![-80.0, -90.0, -100.0],
            q_t_std: 5.0,
        }
    }
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            p_d: 0.88,
            sigma_e: 10.0,
            clutter_density: 1.65e-5,
            region: [[-1000.0, 1000.0], [-1000.0, 1000.0]],
        }
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            hmax: 5000,
            min_sweeps: 1,
            cap: 1000,
            temper_s: 0.9,
            temper_d: 0.9,
            temper_t: 1.0,
            mixture_cap: 10,
            mixture_prune: 1e-5,
            history_depth: None,
            truncation: Truncation::Gibbs,
            gate: 7.0,
        }
    }
}

impl Default for OspaConfig {
    fn default() -> Self {
        OspaConfig { c: 100.0, p: 1.0 }
    }
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            trials: 100,
            seed: 1,
            horizon: 100,
            parent_lifetime: 5,
            spawn_ramp: 10,
        }
    }
}

fn check_prob(path: &str, v: f64, open_low: bool, open_high: bool) -> Result<(), ConfigError> {
    let low_ok = if open_low { v > 0.0 } else { v >= 0.0 };
    let high_ok = if open_high { v < 1.0 } else { v <= 1.0 };
    if v.is_finite() && low_ok && high_ok {
        Ok(())
    } else {
        let lo = if open_low { "(0" } else { "[0" };
        let hi = if open_high { "1)" } else { "1]" };
        Err(ConfigError::invalid(path, format!("{v} is outside {lo}, {hi}")))
    }
}

fn check_positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(path, format!("{v} must be positive")))
    }
}

impl ScenarioConfig {
    /// Parses a JSON scenario; missing fields and sections take their defaults.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError::invalid(&e.path().to_string(), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_positive("dynamics.dt", self.dynamics.dt)?;
        if !(self.dynamics.sigma_v.is_finite() && self.dynamics.sigma_v >= 0.0) {
            return Err(ConfigError::invalid("dynamics.sigma_v", "must be non-negative"));
        }
        check_prob("dynamics.p_s", self.dynamics.p_s, true, true)?;
        for (i, r) in self.birth.regions.iter().enumerate() {
            check_prob(&format!("birth.regions[{i}].r_b"), r.r_b, true, true)?;
            check_positive(&format!("birth.regions[{i}].std"), r.std)?;
            if r.label_index == 0 {
                return Err(ConfigError::invalid(
                    &format!("birth.regions[{i}].label_index"),
                    "must be positive",
                ));
            }
        }
        let mut idx: Vec<u32> = self.birth.regions.iter().map(|r| r.label_index).collect();
        idx.sort_unstable();
        idx.dedup();
        if idx.len() != self.birth.regions.len() {
            return Err(ConfigError::invalid("birth.regions", "label indices must be distinct"));
        }
        check_prob("spawn.p_t", self.spawn.p_t, false, true)?;
        check_positive("spawn.q_t_std", self.spawn.q_t_std)?;
        if self.spawn.per_parent > 0 && self.spawn.p_t > 0.0 && self.spawn.bearings_deg.is_empty() {
            return Err(ConfigError::invalid("spawn.bearings_deg", "needs at least one bearing"));
        }
        check_prob("sensor.p_d", self.sensor.p_d, true, true)?;
        check_positive("sensor.sigma_e", self.sensor.sigma_e)?;
        if !(self.sensor.clutter_density.is_finite() && self.sensor.clutter_density >= 0.0) {
            return Err(ConfigError::invalid("sensor.clutter_density", "must be non-negative"));
        }
        for (axis, [lo, hi]) in self.sensor.region.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(ConfigError::invalid(
                    &format!("sensor.region[{axis}]"),
                    "lower bound must be below upper bound",
                ));
            }
        }
        let f = &self.filter;
        if f.cap == 0 {
            return Err(ConfigError::invalid("filter.cap", "must be at least 1"));
        }
        if f.mixture_cap == 0 {
            return Err(ConfigError::invalid("filter.mixture_cap", "must be at least 1"));
        }
        check_prob("filter.mixture_prune", f.mixture_prune, false, true)?;
        check_prob("filter.temper_s", f.temper_s, true, false)?;
        check_prob("filter.temper_d", f.temper_d, true, false)?;
        check_prob("filter.temper_t", f.temper_t, true, false)?;
        check_positive("filter.gate", f.gate)?;
        if f.history_depth == Some(0) {
            return Err(ConfigError::invalid("filter.history_depth", "must be at least 1"));
        }
        check_positive("ospa.c", self.ospa.c)?;
        if !(self.ospa.p.is_finite() && self.ospa.p >= 1.0) {
            return Err(ConfigError::invalid("ospa.p", "order must be at least 1"));
        }
        if self.montecarlo.trials == 0 {
            return Err(ConfigError::invalid("montecarlo.trials", "must be at least 1"));
        }
        if self.montecarlo.horizon == 0 {
            return Err(ConfigError::invalid("montecarlo.horizon", "must be at least 1"));
        }
        Ok(())
    }

    pub fn models(&self) -> Models {
        Models::from_config(self)
    }
}

// ---------------------------------------------------------------------------
// Models

#[derive(Clone, Debug, PartialEq)]
pub struct MotionModel {
    pub f: StateMat,
    pub q: StateMat,
    pub dt: f64,
}

impl MotionModel {
    /// Nearly constant velocity model in two dimensions.
    pub fn constant_velocity(dt: f64, sigma_v: f64) -> Self {
        let mut f = StateMat::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        let s2 = sigma_v * sigma_v;
        let mut q = StateMat::zeros();
        for i in 0..2 {
            q[(i, i)] = s2 * dt.powi(4) / 4.0;
            q[(i, i + 2)] = s2 * dt.powi(3) / 2.0;
            q[(i + 2, i)] = s2 * dt.powi(3) / 2.0;
            q[(i + 2, i + 2)] = s2 * dt * dt;
        }
        MotionModel { f, q, dt }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalModel {
    pub p_s: f64,
}

#[derive(Clone, Debug)]
pub struct BirthRegion {
    pub r_b: f64,
    pub density: TrackDensity,
    pub label_index: u32,
}

#[derive(Clone, Debug)]
pub struct BirthModel {
    pub regions: Vec<BirthRegion>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpawnModel {
    pub p_t: f64,
    /// `(distance, relative bearing in radians)` per mixture component.
    pub offsets: Vec<(f64, f64)>,
    pub q_t: StateMat,
    pub per_parent: u32,
}

impl SpawnModel {
    /// Whether the filter needs spawn rows at all.
    pub fn enabled(&self) -> bool {
        self.p_t > 0.0 && self.per_parent > 0 && !self.offsets.is_empty()
    }
}

impl OffsetModel for SpawnModel {
    fn offsets(&self, parent: &StateVec) -> Vec<(f64, StateVec)> {
        let w = 1.0 / self.offsets.len() as f64;
        self.offsets
            .iter()
            .map(|&(distance, bearing)| (w, spawn_offset(parent, bearing, distance)))
            .collect()
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Region {
    pub fn area(&self) -> f64 {
        (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])
    }

    pub fn contains(&self, z: &MeasVec) -> bool {
        (self.x[0]..=self.x[1]).contains(&z[0]) && (self.y[0]..=self.y[1]).contains(&z[1])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorModel {
    pub h: ObsMat,
    pub r: MeasMat,
    pub p_d: f64,
    /// Expected clutter count per scan.
    pub clutter_rate: f64,
    pub region: Region,
}

impl SensorModel {
    /// `log κ(z)`: uniform intensity inside the region, `-inf` outside.
    pub fn clutter_loglik(&self, z: &MeasVec) -> f64 {
        if self.region.contains(z) {
            (self.clutter_rate / self.region.area()).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn sample_clutter<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<MeasVec> {
        if self.clutter_rate <= 0.0 {
            return Vec::new();
        }
        let n = Poisson::new(self.clutter_rate)
            .expect("positive finite rate")
            .sample(rng) as usize;
        (0..n)
            .map(|_| {
                MeasVec::new(
                    rng.gen_range(self.region.x[0]..self.region.x[1]),
                    rng.gen_range(self.region.y[0]..self.region.y[1]),
                )
            })
            .collect()
    }
}

/// Every model needed by the filter and the simulator.
#[derive(Clone, Debug)]
pub struct Models {
    pub motion: MotionModel,
    pub survival: SurvivalModel,
    pub birth: BirthModel,
    pub spawn: SpawnModel,
    pub sensor: SensorModel,
}

impl Models {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let motion = MotionModel::constant_velocity(cfg.dynamics.dt, cfg.dynamics.sigma_v);
        let birth = BirthModel {
            regions: cfg
                .birth
                .regions
                .iter()
                .map(|r| BirthRegion {
                    r_b: r.r_b,
                    density: TrackDensity::single(Gaussian::new(
                        SVector::from(r.mean),
                        StateMat::identity() * (r.std * r.std),
                    )),
                    label_index: r.label_index,
                })
                .collect(),
        };
        let spawn = SpawnModel {
            p_t: cfg.spawn.p_t,
            offsets: cfg
                .spawn
                .bearings_deg
                .iter()
                .map(|b| (cfg.spawn.distance, b.to_radians()))
                .collect(),
            q_t: StateMat::identity() * (cfg.spawn.q_t_std * cfg.spawn.q_t_std),
            per_parent: cfg.spawn.per_parent,
        };
        let mut h = ObsMat::zeros();
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 1.0;
        let region = Region {
            x: cfg.sensor.region[0],
            y: cfg.sensor.region[1],
        };
        let sensor = SensorModel {
            h,
            r: MeasMat::identity() * (cfg.sensor.sigma_e * cfg.sensor.sigma_e),
            p_d: cfg.sensor.p_d,
            clutter_rate: cfg.sensor.clutter_density * region.area(),
            region,
        };
        Models {
            motion,
            survival: SurvivalModel {
                p_s: cfg.dynamics.p_s,
            },
            birth,
            spawn,
            sensor,
        }
    }
}

static ZERO_SPEED_WARNED: AtomicBool = AtomicBool::new(false);

/// Offset from a parent state to a spawned object: `distance` metres away at
/// `bearing` relative to the parent heading, with the parent velocity
/// cancelled so the spawned object starts at rest.
pub fn spawn_offset(parent: &StateVec, bearing: f64, distance: f64) -> StateVec {
    let (vx, vy) = (parent[2], parent[3]);
    let heading = if vx.hypot(vy) < 1e-12 {
        if !ZERO_SPEED_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!("spawn offset requested for a parent at rest; using heading 0");
        }
        0.0
    } else {
        vy.atan2(vx)
    };
    let angle = heading + bearing;
    StateVec::new(distance * angle.cos(), distance * angle.sin(), -vx, -vy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defaults() {
        let cfg = ScenarioConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let m = cfg.models();
        assert_eq!(m.survival.p_s, 0.99);
        assert_eq!(m.sensor.p_d, 0.88);
        assert_eq!(m.sensor.r, MeasMat::identity() * 100.0);
        assert_eq!(m.spawn.p_t, 0.01);
        assert_eq!(m.spawn.per_parent, 1);
        assert!(m.birth.regions.iter().all(|r| r.r_b == 0.02));
        assert_relative_eq!(m.sensor.clutter_rate, 66.0, epsilon = 1e-9);
        assert_eq!(cfg.ospa.c, 100.0);
        assert_eq!(cfg.filter.cap, 1000);
    }

    #[test]
    fn birth_regions() {
        let m = ScenarioConfig::default().models();
        let means: Vec<[f64; 4]> = m
            .birth
            .regions
            .iter()
            .map(|r| {
                let g = &r.density.components()[0].1;
                assert_eq!(g.cov, StateMat::identity() * 100.0);
                [g.mean[0], g.mean[1], g.mean[2], g.mean[3]]
            })
            .collect();
        assert_eq!(
            means,
            vec![
                [0.0, 500.0, 0.0, 0.0],
                [433.0, -250.0, 0.0, 0.0],
                [-433.0, -250.0, 0.0, 0.0]
            ]
        );
    }

    #[test]
    fn motion_matrices_match_block_form() {
        let m = MotionModel::constant_velocity(1.0, 1.0);
        #[rustfmt::skip]
        let f = StateMat::new(
            1.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        );
        #[rustfmt::skip]
        let q = StateMat::new(
            0.25, 0.0, 0.5, 0.0,
            0.0, 0.25, 0.0, 0.5,
            0.5, 0.0, 1.0, 0.0,
            0.0, 0.5, 0.0, 1.0,
        );
        assert_eq!(m.f, f);
        assert_eq!(m.q, q);
    }

    #[test]
    fn partial_config_keeps_other_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"spawn": {"p_t": 0.0}}"#).unwrap();
        assert_eq!(cfg.spawn.p_t, 0.0);
        assert_eq!(cfg.spawn.distance, 70.0);
        assert_eq!(cfg.ospa, OspaConfig::default());
        assert!(!cfg.models().spawn.enabled());
    }

    #[test]
    fn rejects_bad_values_with_path() {
        let err = ScenarioConfig::from_json(r#"{"sensor": {"p_d": -0.2}}"#).unwrap_err();
        assert!(err.to_string().starts_with("sensor.p_d"), "{err}");
        let err = ScenarioConfig::from_json(r#"{"dynamics": {"p_s": "high"}}"#).unwrap_err();
        assert!(err.to_string().starts_with("dynamics.p_s"), "{err}");
        let err = ScenarioConfig::from_json(r#"{"filter": {"cpa": 3}}"#).unwrap_err();
        assert!(err.to_string().starts_with("filter"), "{err}");
        assert!(ScenarioConfig::from_json(r#"{"ospa": {"p": 0.5}}"#).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn offset_north_heading() {
        let d = spawn_offset(&StateVec::new(0.0, 0.0, 0.0, 3.0), (-90f64).to_radians(), 70.0);
        assert_relative_eq!(d[0], 70.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], 0.0, epsilon = 1e-12);
        assert_eq!((d[2], d[3]), (-0.0, -3.0));
    }

    #[test]
    fn offsets_mirror_about_heading() {
        let parent = StateVec::new(5.0, 5.0, 2.0, 1.0);
        let a = spawn_offset(&parent, 0.5, 70.0);
        let b = spawn_offset(&parent, -0.5, 70.0);
        let heading = 1f64.atan2(2.0);
        let along = |d: &StateVec| d[0] * heading.cos() + d[1] * heading.sin();
        let across = |d: &StateVec| -d[0] * heading.sin() + d[1] * heading.cos();
        assert_relative_eq!(along(&a), along(&b), epsilon = 1e-12);
        assert_relative_eq!(across(&a), -across(&b), epsilon = 1e-12);
        assert_eq!((a[2], a[3]), (-2.0, -1.0));
    }

    #[test]
    fn parent_at_rest_uses_zero_heading() {
        let d = spawn_offset(&StateVec::zeros(), 0.0, 70.0);
        assert_eq!(d, StateVec::new(70.0, 0.0, -0.0, -0.0));
    }

    #[test]
    fn clutter_intensity_and_sampling() {
        let mut cfg = ScenarioConfig::default();
        let s = cfg.models().sensor;
        assert_relative_eq!(s.clutter_loglik(&MeasVec::zeros()), 1.65e-5f64.ln(), epsilon = 1e-12);
        assert_eq!(s.clutter_loglik(&MeasVec::new(1001.0, 0.0)), f64::NEG_INFINITY);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let total: usize = (0..draws).map(|_| s.sample_clutter(&mut rng).len()).sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 66.0).abs() < 0.66, "mean clutter {mean}");
        assert!(s.sample_clutter(&mut rng).iter().all(|z| s.region.contains(z)));

        cfg.sensor.clutter_density = 0.0;
        let s = cfg.models().sensor;
        assert!((0..100).all(|_| s.sample_clutter(&mut rng).is_empty()));
    }
}

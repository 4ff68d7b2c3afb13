//! Ground truth and measurement generation for the three-region spawning
//! scenario.
//!
//! The scenario has six spontaneous births and six spawn events:
//!
//! * one track per birth region, born at scans 1, 2, 3 (labels `1,1`, `2,2`,
//!   `3,3`), moving at 5 m/s;
//! * each of them spawns a first-generation track 70 m to its right at scans
//!   10, 11, 12 and dies a few scans later; the three first-generation tracks
//!   meet at the origin at scan 45;
//! * each first-generation track spawns a second-generation track at scans
//!   56, 58, 60;
//! * late births `55,3`, `57,1`, `59,2` cross the second-generation tracks
//!   near (−250, −433) at 82, (−260, 430) at 84 and (507, 26) at 86.
//!
//! Trajectories are noise free and, apart from spawned tracks, constant
//! velocity. A spawned track starts at rest, as in the filter's spawn model,
//! and accelerates uniformly to its cruise velocity over
//! `montecarlo.spawn_ramp` scans. The exact waypoints are this crate's own
//! construction around the stated events.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::gaussian::{MeasVec, StateVec};
use crate::labels::{Label, Scan};
use crate::models::{ScenarioConfig, SensorModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTrack {
    pub label: Label,
    pub birth_scan: Scan,
    /// First scan at which the track no longer exists.
    pub death_scan: Scan,
    /// States for scans `birth_scan..death_scan`.
    pub states: Vec<[f64; 4]>,
}

impl TruthTrack {
    pub fn alive(&self, k: Scan) -> bool {
        (self.birth_scan..self.death_scan).contains(&k)
    }

    pub fn state(&self, k: Scan) -> Option<StateVec> {
        self.alive(k)
            .then(|| StateVec::from(self.states[(k - self.birth_scan) as usize]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub horizon: Scan,
    pub tracks: Vec<TruthTrack>,
}

/// Scan times and positions of the scripted events.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineageEvents {
    pub region: u32,
    pub birth: Scan,
    pub gen1_spawn: Scan,
    pub gen2_spawn: Scan,
    pub late_birth: Scan,
    pub late_region: u32,
    pub crossing: Scan,
    pub crossing_point: [f64; 2],
}

/// Events per lineage, indexed by birth region 1, 2, 3.
pub const LINEAGES: [LineageEvents; 3] = [
    LineageEvents {
        region: 1,
        birth: 1,
        gen1_spawn: 10,
        gen2_spawn: 56,
        late_birth: 55,
        late_region: 3,
        crossing: 82,
        crossing_point: [-250.0, -433.0],
    },
    LineageEvents {
        region: 2,
        birth: 2,
        gen1_spawn: 11,
        gen2_spawn: 58,
        late_birth: 57,
        late_region: 1,
        crossing: 84,
        crossing_point: [-260.0, 430.0],
    },
    LineageEvents {
        region: 3,
        birth: 3,
        gen1_spawn: 12,
        gen2_spawn: 60,
        late_birth: 59,
        late_region: 2,
        crossing: 86,
        crossing_point: [507.0, 26.0],
    },
];

/// Scan at which the first generation meets at the origin.
pub const ORIGIN_CROSSING: Scan = 45;
const PARENT_SPEED: f64 = 5.0;

fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Straight-line track from `start` at `from` with velocity `vel`.
fn straight(label: Label, from: Scan, until: Scan, start: [f64; 2], vel: [f64; 2]) -> TruthTrack {
    let states = (from..until)
        .map(|k| {
            let t = (k - from) as f64;
            [start[0] + vel[0] * t, start[1] + vel[1] * t, vel[0], vel[1]]
        })
        .collect();
    TruthTrack {
        label,
        birth_scan: from,
        death_scan: until,
        states,
    }
}

/// Track starting at rest at `start` on scan `from` that reaches `target` at
/// scan `arrive`, accelerating uniformly for the first `ramp` scans.
fn ramped(label: Label, from: Scan, until: Scan, start: [f64; 2], target: [f64; 2], arrive: Scan, ramp: Scan) -> TruthTrack {
    let span = (arrive - from) as f64;
    let ramp = (ramp as f64).min(span);
    if ramp == 0.0 {
        return straight(label, from, until, start, velocity_to(start, target, arrive - from));
    }
    let delta = [target[0] - start[0], target[1] - start[1]];
    // cruise speed as a fraction of the total displacement per scan
    let cruise = 1.0 / (span - ramp / 2.0);
    let states = (from..until)
        .map(|k| {
            let t = (k - from) as f64;
            let (frac, speed) = if t <= ramp {
                (cruise * t * t / (2.0 * ramp), cruise * t / ramp)
            } else {
                (cruise * (t - ramp / 2.0), cruise)
            };
            [
                start[0] + frac * delta[0],
                start[1] + frac * delta[1],
                speed * delta[0],
                speed * delta[1],
            ]
        })
        .collect();
    TruthTrack {
        label,
        birth_scan: from,
        death_scan: until,
        states,
    }
}

fn velocity_to(from: [f64; 2], to: [f64; 2], scans: Scan) -> [f64; 2] {
    [(to[0] - from[0]) / scans as f64, (to[1] - from[1]) / scans as f64]
}

/// Position `distance` metres to the right of a track's heading.
fn right_of(track: &TruthTrack, k: Scan, distance: f64) -> [f64; 2] {
    let x = track.state(k).expect("track alive at spawn scan");
    let heading = x[3].atan2(x[2]) - std::f64::consts::FRAC_PI_2;
    [x[0] + distance * heading.cos(), x[1] + distance * heading.sin()]
}

/// Deterministic ground truth; lineages whose events fall past the horizon
/// are truncated.
pub fn generate_truth(cfg: &ScenarioConfig) -> Truth {
    let horizon = cfg.montecarlo.horizon;
    let end = horizon + 1;
    let lifetime = cfg.montecarlo.parent_lifetime.max(1);
    let distance = cfg.spawn.distance;
    let ramp = cfg.montecarlo.spawn_ramp;
    let defaults = crate::models::BirthConfig::default();
    let regions = if cfg.birth.regions.len() >= 3 {
        &cfg.birth.regions
    } else {
        &defaults.regions
    };
    let center = |r: u32| {
        let m = regions[(r - 1) as usize].mean;
        [m[0], m[1]]
    };
    let index = |r: u32| regions[(r - 1) as usize].label_index;

    let mut tracks = Vec::new();
    for ev in LINEAGES {
        if ev.birth > horizon {
            continue;
        }
        // the region 1 parent heads east; the others are the same pattern
        // rotated about the origin
        let angle = (ev.region as f64 - 1.0) * -120f64.to_radians();
        let vel = rotate([PARENT_SPEED, 0.0], angle);
        let root = Label::birth(ev.birth, index(ev.region)).expect("positive index");
        let death = (ev.gen1_spawn + lifetime).min(end);
        let parent = straight(root.clone(), ev.birth, death, center(ev.region), vel);

        if ev.gen1_spawn <= horizon {
            let start = right_of(&parent, ev.gen1_spawn, distance);
            let l1 = Label::spawn(&root, ev.gen1_spawn, 1).expect("later scan");
            let gen1 = ramped(l1.clone(), ev.gen1_spawn, end, start, [0.0, 0.0], ORIGIN_CROSSING, ramp);
            if ev.gen2_spawn <= horizon {
                let start = right_of(&gen1, ev.gen2_spawn, distance);
                let l2 = Label::spawn(&l1, ev.gen2_spawn, 1).expect("later scan");
                tracks.push(ramped(l2, ev.gen2_spawn, end, start, ev.crossing_point, ev.crossing, ramp));
            }
            tracks.push(gen1);
        }
        tracks.push(parent);

        if ev.late_birth <= horizon {
            let start = center(ev.late_region);
            let v = velocity_to(start, ev.crossing_point, ev.crossing - ev.late_birth);
            let label = Label::birth(ev.late_birth, index(ev.late_region)).expect("positive index");
            tracks.push(straight(label, ev.late_birth, end, start, v));
        }
    }
    tracks.sort_by(|a, b| a.label.cmp(&b.label));
    Truth { horizon, tracks }
}

impl Truth {
    /// Labels and states of the tracks alive at scan `k`.
    pub fn alive(&self, k: Scan) -> Vec<(&Label, StateVec)> {
        self.tracks
            .iter()
            .filter_map(|t| t.state(k).map(|x| (&t.label, x)))
            .collect()
    }

    pub fn cardinality(&self, k: Scan) -> usize {
        self.tracks.iter().filter(|t| t.alive(k)).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("truth serializes")
    }
}

/// One scan of detections plus clutter. Detections falling outside the
/// sensor region are dropped; detections come first, then clutter.
pub fn generate_scan<R: Rng + ?Sized>(
    states: &[StateVec],
    sensor: &SensorModel,
    rng: &mut R,
) -> Vec<MeasVec> {
    let noise = [
        Normal::new(0.0, sensor.r[(0, 0)].sqrt()).expect("finite noise"),
        Normal::new(0.0, sensor.r[(1, 1)].sqrt()).expect("finite noise"),
    ];
    let mut out = Vec::new();
    for x in states {
        if rng.gen::<f64>() < sensor.p_d {
            let z = sensor.h * x + MeasVec::new(noise[0].sample(rng), noise[1].sample(rng));
            if sensor.region.contains(&z) {
                out.push(z);
            }
        }
    }
    out.extend(sensor.sample_clutter(rng));
    out
}

/// Writes `scan,x,y` rows.
pub fn write_scans_csv<W: Write>(scans: &[Vec<MeasVec>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scan", "x", "y"])?;
    for (k, zs) in scans.iter().enumerate() {
        for z in zs {
            w.write_record(&[(k + 1).to_string(), z[0].to_string(), z[1].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn truth() -> Truth {
        generate_truth(&ScenarioConfig::default())
    }

    #[test]
    fn final_labels_match_the_table() {
        let t = truth();
        let mut alive: Vec<String> = t.alive(100).iter().map(|(l, _)| l.to_string()).collect();
        alive.sort();
        let mut want = vec![
            "1,1,10,1,56,1",
            "2,2,11,1,58,1",
            "3,3,12,1,60,1",
            "1,1,10,1",
            "2,2,11,1",
            "3,3,12,1",
            "55,3",
            "57,1",
            "59,2",
        ];
        want.sort();
        assert_eq!(alive, want);
    }

    #[test]
    fn cardinality_profile() {
        let t = truth();
        let card: Vec<usize> = (1..=100).map(|k| t.cardinality(k)).collect();
        assert_eq!(&card[..3], &[1, 2, 3]);
        assert_eq!(card[9], 4);
        assert_eq!(card[11], 6);
        assert_eq!(card[16], 3);
        assert_eq!(card[59], 9);
        assert_eq!(card[99], 9);
    }

    #[test]
    fn first_generation_meets_at_origin() {
        let t = truth();
        for (l, x) in t.alive(ORIGIN_CROSSING) {
            if l.generation() == 1 {
                assert!(x[0].hypot(x[1]) < 25.0, "{l} at {x:?}");
            }
        }
    }

    #[test]
    fn crossings() {
        let t = truth();
        for ev in LINEAGES {
            let near: Vec<&Label> = t
                .alive(ev.crossing)
                .into_iter()
                .filter(|(_, x)| (x[0] - ev.crossing_point[0]).hypot(x[1] - ev.crossing_point[1]) < 1e-6)
                .map(|(l, _)| l)
                .collect();
            assert_eq!(near.len(), 2, "crossing at {}", ev.crossing);
        }
    }

    #[test]
    fn spawns_start_seventy_metres_from_parent() {
        let t = truth();
        for track in t.tracks.iter().filter(|t| t.label.generation() > 0) {
            let parent = t.tracks.iter().find(|p| Some(&p.label) == track.label.ancestor().as_ref()).unwrap();
            let k = track.birth_scan;
            let (a, b) = (track.state(k).unwrap(), parent.state(k).unwrap());
            assert!(((a[0] - b[0]).hypot(a[1] - b[1]) - 70.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spawns_start_at_rest_and_accelerate_smoothly() {
        let t = truth();
        for track in &t.tracks {
            let first = track.states[0];
            if track.label.generation() > 0 {
                assert_eq!([first[2], first[3]], [0.0, 0.0], "{}", track.label);
            }
            for w in track.states.windows(2) {
                let (a, b) = (w[0], w[1]);
                for i in 0..2 {
                    // uniform acceleration between scans
                    assert!((b[i] - a[i] - (a[i + 2] + b[i + 2]) / 2.0).abs() < 1e-9, "{}", track.label);
                }
                assert!((b[2] - a[2]).hypot(b[3] - a[3]) < 2.5, "{}", track.label);
            }
        }
    }

    #[test]
    fn zero_ramp_spawns_at_cruise_velocity() {
        let mut cfg = ScenarioConfig::default();
        cfg.montecarlo.spawn_ramp = 0;
        let t = generate_truth(&cfg);
        let gen1 = t.tracks.iter().find(|t| t.label.to_string() == "1,1,10,1").unwrap();
        assert!(gen1.states[0][2].hypot(gen1.states[0][3]) > 10.0);
        assert_eq!(gen1.states[1][2], gen1.states[0][2]);
        let x = gen1.state(ORIGIN_CROSSING).unwrap();
        assert!(x[0].hypot(x[1]) < 1e-9);
    }

    #[test]
    fn truth_is_reproducible_and_serializable() {
        let a = truth();
        assert_eq!(a, truth());
        let back: Truth = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn scan_edge_cases() {
        let mut cfg = ScenarioConfig::default();
        cfg.sensor.p_d = 1.0 - 1e-15;
        cfg.sensor.clutter_density = 0.0;
        cfg.sensor.sigma_e = 1e-9;
        let sensor = cfg.models().sensor;
        let states = [StateVec::new(10.0, 20.0, 1.0, 1.0), StateVec::new(-5.0, 3.0, 0.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = generate_scan(&states, &sensor, &mut rng);
        assert_eq!(z.len(), 2);
        assert!((z[0] - MeasVec::new(10.0, 20.0)).norm() < 1e-6);

        let mut cfg = ScenarioConfig::default();
        cfg.sensor.p_d = 1e-300;
        let sensor = cfg.models().sensor;
        let z = generate_scan(&states, &sensor, &mut rng);
        assert!(z.iter().all(|z| sensor.region.contains(z)));
    }

    #[test]
    fn detection_rate() {
        let mut cfg = ScenarioConfig::default();
        cfg.sensor.clutter_density = 0.0;
        let sensor = cfg.models().sensor;
        let states = [StateVec::zeros(), StateVec::new(100.0, 0.0, 0.0, 0.0), StateVec::new(0.0, 100.0, 0.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let total: usize = (0..n).map(|_| generate_scan(&states, &sensor, &mut rng).len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 2.64).abs() < 0.0264, "mean detections {mean}");
    }
}

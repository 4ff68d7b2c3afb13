//! OSPA distance, Monte Carlo cardinality statistics and lineage analysis.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::estimation::TrackEstimate;
use crate::labels::{Label, Scan};
use crate::lsap;
use crate::models::{BirthModel, Models, OspaConfig};
use crate::simulator::{Truth, LINEAGES};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Ospa {
    pub total: f64,
    pub localization: f64,
    pub cardinality: f64,
}

/// OSPA distance of order `p` with cutoff `c` between two point sets, with
/// the optimal assignment solved exactly. Both sets empty gives zeros.
pub fn ospa(x: &[[f64; 2]], y: &[[f64; 2]], params: &OspaConfig) -> Ospa {
    let (c, p) = (params.c, params.p);
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return Ospa::default();
    }
    let mut cost = Vec::with_capacity(m * n);
    for a in small {
        for b in large {
            cost.push((a[0] - b[0]).hypot(a[1] - b[1]).min(c).powf(p));
        }
    }
    let loc_sum = if m == 0 {
        0.0
    } else {
        lsap::solve(&cost, m, n).expect("finite costs").1
    };
    let card_sum = c.powf(p) * (n - m) as f64;
    let n = n as f64;
    Ospa {
        total: ((loc_sum + card_sum) / n).powf(1.0 / p),
        localization: (loc_sum / n).powf(1.0 / p),
        cardinality: (card_sum / n).powf(1.0 / p),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CardinalityStat {
    pub scan: Scan,
    pub truth: usize,
    pub mean: f64,
    pub std: f64,
}

/// Per-scan sample mean and standard deviation (divisor `n − 1`) of the
/// estimated cardinality over runs. `runs[r][k]` is the estimate of run `r`
/// at scan `k + 1`.
pub fn cardinality_stats(runs: &[Vec<f64>], truth: &[usize]) -> Vec<CardinalityStat> {
    let n = runs.len() as f64;
    truth
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let vals: Vec<f64> = runs.iter().map(|r| r[k]).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let std = if runs.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            CardinalityStat {
                scan: k as Scan + 1,
                truth: t,
                mean,
                std,
            }
        })
        .collect()
}

/// Lineage outcome for one spawning birth region in one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AncestryRecord {
    pub run: usize,
    pub region: u32,
    /// Root label of the estimated family assigned to this region.
    pub root: Option<Label>,
    pub birth_time: Option<Scan>,
    /// First scan after which the root label is no longer estimated.
    pub death_time: Option<Scan>,
    pub gen1_spawn_time: Option<Scan>,
    pub gen2_spawn_time: Option<Scan>,
    pub origin_error: bool,
    pub label_switch: bool,
    pub no_spawn: bool,
    /// A second-generation label with both spawn times within the tolerance
    /// and a root traced back to this region exists at the horizon.
    pub reproduced: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AncestryReport {
    pub records: Vec<AncestryRecord>,
    /// Region each estimated root was traced to (`None`: outside every gate).
    pub root_regions: BTreeMap<Label, Option<u32>>,
}

/// Spawn-time tolerance, in scans, used for `reproduced`.
pub const SPAWN_TIME_TOLERANCE: Scan = 2;
const MATCH_GATE: f64 = 100.0;

/// Region whose birth mean is nearest to `p`, if within three standard
/// deviations of it.
pub fn classify_region(p: [f64; 2], births: &BirthModel) -> Option<u32> {
    births
        .regions
        .iter()
        .filter_map(|r| {
            let g = r.density.moment_match();
            let d = (p[0] - g.mean[0]).hypot(p[1] - g.mean[1]);
            let gate = 3.0 * g.cov[(0, 0)].max(g.cov[(1, 1)]).sqrt();
            (d <= gate).then_some((d, r.label_index))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, idx)| idx)
}

/// Traces every estimated lineage at the horizon back to its root, classifies
/// the root's birth region from its state at the scan its label was created
/// (the first estimate, run back along its estimated velocity when the root
/// only entered the estimates later), and compares the resulting family tree
/// with the truth.
///
/// `estimates[k - 1]` holds the estimates at scan `k`.
pub fn ancestry_analysis(
    run: usize,
    estimates: &[Vec<TrackEstimate>],
    truth: &Truth,
    models: &Models,
) -> AncestryReport {
    let births = &models.birth;
    let Some(last) = estimates.last() else {
        return AncestryReport::default();
    };
    let horizon = estimates.len() as Scan;

    // first and last appearance of every label
    let mut seen: BTreeMap<&Label, (Scan, Scan, [f64; 4])> = BTreeMap::new();
    for (k, est) in estimates.iter().enumerate() {
        let k = k as Scan + 1;
        for e in est {
            seen.entry(&e.label)
                .and_modify(|s| s.1 = k)
                .or_insert((k, k, e.mean));
        }
    }
    let mut root_regions = BTreeMap::new();
    for e in last {
        let root = e.label.root();
        let region = match seen.get(&root) {
            Some(&(first, _, x)) => {
                let back = first.saturating_sub(root.birth_time()) as f64 * models.motion.dt;
                classify_region([x[0] - back * x[2], x[1] - back * x[3]], births)
            }
            // the root never made it into an estimate; fall back to the
            // region encoded in its label
            None => Some(root.path()[0].1),
        };
        root_regions.insert(root, region);
    }

    // match final estimates to the truth alive at the horizon
    let alive = truth.alive(horizon);
    let mut matched: BTreeMap<&Label, &Label> = BTreeMap::new();
    if !last.is_empty() && !alive.is_empty() {
        let (rows, cols) = (last.len(), alive.len());
        let transpose = rows > cols;
        let (r, c) = if transpose { (cols, rows) } else { (rows, cols) };
        let mut cost = vec![0.0; r * c];
        for (i, e) in last.iter().enumerate() {
            for (j, (_, x)) in alive.iter().enumerate() {
                let d = (e.mean[0] - x[0]).hypot(e.mean[1] - x[1]).min(MATCH_GATE);
                let at = if transpose { j * c + i } else { i * c + j };
                cost[at] = d;
            }
        }
        if let Some((assign, _)) = lsap::solve(&cost, r, c) {
            for (a, &b) in assign.iter().enumerate() {
                let (i, j) = if transpose { (b, a) } else { (a, b) };
                let e = &last[i];
                let x = alive[j].1;
                if (e.mean[0] - x[0]).hypot(e.mean[1] - x[1]) < MATCH_GATE {
                    matched.insert(&e.label, alive[j].0);
                }
            }
        }
    }

    let mut records = Vec::new();
    for ev in LINEAGES {
        if ev.birth > horizon {
            continue;
        }
        let true_root = truth
            .tracks
            .iter()
            .map(|t| t.label.root())
            .find(|r| r.path()[0].0 == ev.birth && r.generation() == 0 && r.path()[0].1 == region_index(births, ev.region));
        // family whose final labels are matched most often to this lineage
        let mut votes: BTreeMap<Label, usize> = BTreeMap::new();
        for (est, tl) in &matched {
            if Some(tl.root()) == true_root && tl.generation() > 0 {
                *votes.entry(est.root()).or_insert(0) += 1;
            }
        }
        let family = votes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(r, _)| r.clone());
        let region = region_index(births, ev.region);
        let reproduced = last.iter().any(|e| {
            let p = e.label.path();
            e.label.generation() == 2
                && p[1].0.abs_diff(ev.gen1_spawn) <= SPAWN_TIME_TOLERANCE
                && p[2].0.abs_diff(ev.gen2_spawn) <= SPAWN_TIME_TOLERANCE
                && root_regions.get(&e.label.root()).copied().flatten() == Some(region)
        });
        let mut rec = AncestryRecord {
            run,
            region: ev.region,
            no_spawn: true,
            reproduced,
            ..Default::default()
        };
        if let Some(root) = family {
            let members: Vec<&TrackEstimate> = last.iter().filter(|e| e.label.root() == root).collect();
            let at_gen = |g: usize| {
                members
                    .iter()
                    .filter(|e| e.label.generation() >= g)
                    .map(|e| e.label.path()[g].0)
                    .min()
            };
            rec.birth_time = Some(root.birth_time());
            rec.death_time = match seen.get(&root) {
                Some(&(_, last_seen, _)) if last_seen < horizon => Some(last_seen + 1),
                _ => None,
            };
            rec.gen1_spawn_time = at_gen(1);
            rec.gen2_spawn_time = at_gen(2);
            rec.no_spawn = rec.gen1_spawn_time.is_none() || rec.gen2_spawn_time.is_none();
            rec.origin_error = root_regions.get(&root).copied().flatten() != Some(region);
            rec.label_switch = members.iter().any(|e| match matched.get(&e.label) {
                Some(tl) => tl.generation() != e.label.generation() || Some(tl.root()) != true_root,
                None => false,
            });
            rec.root = Some(root);
        }
        records.push(rec);
    }
    AncestryReport {
        records,
        root_regions,
    }
}

fn region_index(births: &BirthModel, region: u32) -> u32 {
    births
        .regions
        .get(region as usize - 1)
        .map_or(region, |r| r.label_index)
}

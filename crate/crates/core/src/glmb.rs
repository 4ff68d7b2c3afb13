//! GLMB density with spawning and its joint prediction–update recursion.
//!
//! One call of [`joint_predict_update`] turns the density at scan `k` into the
//! density at `k + 1`:
//!
//! 1. the Gibbs budget is split over prior components by multinomial draw;
//! 2. each prior component gets a cost table over births, its own labels and
//!    the spawn slots of those labels, sampled by Gibbs (or enumerated);
//! 3. every distinct association vector becomes a posterior component whose
//!    weight is evaluated exactly, with survivors and their spawns updated
//!    jointly per family so the shared parent state is respected;
//! 4. weights are normalized, equal `(I, ξ)` pairs are merged and the result
//!    is capped.
//!
//! A family's measurement evidence enters the component weight exactly once.
//! Each member then carries the normalized marginal of the family posterior.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::assignment::{self, CostRow, CostTable, RowKind};
use crate::error::FilterError;
use crate::gaussian::{
    build_family, cap_mixture, log_sum_exp, Gaussian, GaussianMixture, MeasVec, OffsetModel,
    TrackDensity,
};
use crate::labels::{Label, Scan};
use crate::models::{FilterConfig, Models, Truncation};
use crate::seeds;

/// One association map `θ` of the history `ξ`.
#[derive(Debug)]
pub struct HistoryNode {
    parent: Option<Arc<HistoryNode>>,
    /// Label set of the prior component this map was generated from.
    prior_labels: Arc<[Label]>,
    labels: Arc<[Label]>,
    theta: Box<[u32]>,
    scan: Scan,
    digest: u64,
}

impl HistoryNode {
    pub fn scan(&self) -> Scan {
        self.scan
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn theta(&self) -> &[u32] {
        &self.theta
    }

    pub fn parent(&self) -> Option<&Arc<HistoryNode>> {
        self.parent.as_ref()
    }

    pub fn prior_labels(&self) -> &[Label] {
        &self.prior_labels
    }
}

fn node_digest(parent: u64, scan: Scan, labels: &[Label], theta: &[u32]) -> u64 {
    let mut h = DefaultHasher::new();
    parent.hash(&mut h);
    scan.hash(&mut h);
    labels.hash(&mut h);
    theta.hash(&mut h);
    h.finish()
}

/// Digest over at most `depth` most recent maps.
fn history_digest(node: &Option<Arc<HistoryNode>>, depth: Option<usize>) -> u64 {
    match depth {
        None => node.as_ref().map_or(0, |n| n.digest),
        Some(d) => {
            let mut maps = Vec::new();
            let mut cur = node.as_ref();
            while let Some(n) = cur {
                if maps.len() == d {
                    break;
                }
                maps.push(n);
                cur = n.parent.as_ref();
            }
            maps.iter()
                .rev()
                .fold(0, |acc, n| node_digest(acc, n.scan, &n.labels, &n.theta))
        }
    }
}

fn history_eq(a: &Option<Arc<HistoryNode>>, b: &Option<Arc<HistoryNode>>, depth: Option<usize>) -> bool {
    let (mut a, mut b) = (a.as_ref(), b.as_ref());
    let mut seen = 0;
    loop {
        if depth == Some(seen) {
            return true;
        }
        match (a, b) {
            (None, None) => return true,
            (Some(x), Some(y)) => {
                if Arc::ptr_eq(x, y) {
                    return true;
                }
                if x.scan != y.scan || x.labels != y.labels || x.theta != y.theta {
                    return false;
                }
                a = x.parent.as_ref();
                b = y.parent.as_ref();
                seen += 1;
            }
            _ => return false,
        }
    }
}

/// One term `(I, ξ, w, p)` of a GLMB density.
#[derive(Clone, Debug)]
pub struct GlmbComponent {
    labels: Arc<[Label]>,
    densities: Vec<Arc<TrackDensity>>,
    history: Option<Arc<HistoryNode>>,
    pub log_weight: f64,
}

impl GlmbComponent {
    /// Component with no history; densities are aligned with `labels`, which
    /// are sorted on construction.
    pub fn new(labels: Vec<Label>, densities: Vec<TrackDensity>, log_weight: f64) -> Self {
        let mut pairs: Vec<(Label, TrackDensity)> = labels.into_iter().zip(densities).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (labels, densities): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        GlmbComponent {
            labels: labels.into(),
            densities: densities.into_iter().map(Arc::new).collect(),
            history: None,
            log_weight,
        }
    }

    /// Labels in canonical order.
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn densities(&self) -> &[Arc<TrackDensity>] {
        &self.densities
    }

    pub fn density(&self, label: &Label) -> Option<&TrackDensity> {
        self.labels
            .binary_search(label)
            .ok()
            .map(|i| self.densities[i].as_ref())
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn history(&self) -> Option<&Arc<HistoryNode>> {
        self.history.as_ref()
    }

    /// Association maps oldest first, each as `(label, measurement)` pairs.
    pub fn history_maps(&self) -> Vec<Vec<(Label, u32)>> {
        let mut out = Vec::new();
        let mut cur = self.history.as_ref();
        while let Some(n) = cur {
            out.push(n.labels.iter().cloned().zip(n.theta.iter().copied()).collect());
            cur = n.parent.as_ref();
        }
        out.reverse();
        out
    }
}

/// Weighted set of components at one scan.
#[derive(Clone, Debug)]
pub struct GlmbDensity {
    pub components: Vec<GlmbComponent>,
    pub scan: Scan,
}

impl GlmbDensity {
    /// No objects with certainty.
    pub fn empty(scan: Scan) -> Self {
        GlmbDensity {
            components: vec![GlmbComponent {
                labels: Arc::from(Vec::new()),
                densities: Vec::new(),
                history: None,
                log_weight: 0.0,
            }],
            scan,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight()).collect()
    }

    /// Rescales log weights to sum to one; returns the log of the old total.
    pub fn normalize(&mut self) -> f64 {
        let logs: Vec<f64> = self.components.iter().map(|c| c.log_weight).collect();
        let total = log_sum_exp(&logs);
        for c in &mut self.components {
            c.log_weight -= total;
        }
        total
    }

    /// Effective number of components `1 / Σ w²`.
    pub fn ess(&self) -> f64 {
        1.0 / self.components.iter().map(|c| c.weight().powi(2)).sum::<f64>()
    }

    /// Violations of the structural invariants, one message each.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let total: f64 = self.weights().iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            bad.push(format!("scan {}: weights sum to {total}", self.scan));
        }
        for (h, c) in self.components.iter().enumerate() {
            if c.labels.windows(2).any(|w| w[0] >= w[1]) {
                bad.push(format!("scan {}: component {h} labels not distinct/sorted", self.scan));
            }
            if c.densities.len() != c.labels.len() {
                bad.push(format!("scan {}: component {h} density count", self.scan));
            }
            for l in c.labels.iter() {
                if l.generation() > 0 && l.last_time() == self.scan {
                    let parent = l.ancestor().expect("spawn label has an ancestor");
                    let ok = match &c.history {
                        Some(n) => n.prior_labels.binary_search(&parent).is_ok(),
                        None => true,
                    };
                    if !ok {
                        bad.push(format!("scan {}: spawn {l} without parent {parent}", self.scan));
                    }
                }
            }
            for (l, d) in c.labels.iter().zip(&c.densities) {
                if !d.is_normalized() {
                    bad.push(format!("scan {}: density of {l} not normalized", self.scan));
                }
                if d.components().iter().any(|(_, g)| !g.is_psd()) {
                    bad.push(format!("scan {}: density of {l} not PSD", self.scan));
                }
            }
        }
        bad
    }
}

/// Diagnostics of one recursion step.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub scan: Scan,
    pub prior_components: usize,
    pub sweeps: usize,
    /// Distinct association vectors evaluated.
    pub hypotheses: usize,
    pub components: usize,
    pub ess: f64,
    /// Weight removed by the component cap.
    pub discarded_mass: f64,
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub density: GlmbDensity,
    pub stats: StepStats,
}

/// Predicted density of one table row and its (gated) detection ratios.
struct RowPrediction {
    density: Arc<TrackDensity>,
    ratios: Vec<f64>,
}

type JointKey = (usize, Vec<i32>);

struct JointResult {
    log_evidence: f64,
    posteriors: Vec<Arc<TrackDensity>>,
}

struct Step<'a> {
    models: &'a Models,
    cfg: &'a FilterConfig,
    z: &'a [MeasVec],
    log_kappa: Vec<f64>,
    /// Measurement indices sorted by x, for gating.
    by_x: Vec<(f64, usize)>,
    gate: Option<f64>,
    ln_pd: f64,
    ln_qd: f64,
    survivors: HashMap<usize, Arc<RowPrediction>>,
    spawns: HashMap<usize, Arc<RowPrediction>>,
    posteriors: HashMap<(usize, u32), (Arc<TrackDensity>, f64)>,
    joints: HashMap<JointKey, Arc<JointResult>>,
}

fn ptr(d: &Arc<TrackDensity>) -> usize {
    Arc::as_ptr(d) as usize
}

impl<'a> Step<'a> {
    fn cap(&self, mix: TrackDensity) -> TrackDensity {
        let prune = self.cfg.mixture_prune;
        let total = mix.total_weight();
        if mix.len() <= self.cfg.mixture_cap
            && mix.components().iter().all(|(w, _)| *w >= prune * total)
        {
            let mut mix = mix;
            mix.normalize();
            return mix;
        }
        cap_mixture(&mix, self.cfg.mixture_cap, prune).mixture
    }

    fn ratios(&self, pred: &TrackDensity) -> Result<Vec<f64>, FilterError> {
        let m = self.z.len();
        let mut out = vec![0.0; m];
        if m == 0 {
            return Ok(out);
        }
        let inn = pred.innovations(&self.models.sensor.h, &self.models.sensor.r)?;
        let candidates: Vec<usize> = match self.gate {
            None => (0..m).collect(),
            Some(g) => {
                let (mut x0, mut x1, mut y0, mut y1) =
                    (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for (_, i) in &inn {
                    let (sx, sy) = (g * i.std_dev(0), g * i.std_dev(1));
                    x0 = x0.min(i.predicted[0] - sx);
                    x1 = x1.max(i.predicted[0] + sx);
                    y0 = y0.min(i.predicted[1] - sy);
                    y1 = y1.max(i.predicted[1] + sy);
                }
                let start = self.by_x.partition_point(|(x, _)| *x < x0);
                self.by_x[start..]
                    .iter()
                    .take_while(|(x, _)| *x <= x1)
                    .map(|&(_, j)| j)
                    .filter(|&j| (y0..=y1).contains(&self.z[j][1]))
                    .collect()
            }
        };
        let mut terms = Vec::with_capacity(inn.len());
        for j in candidates {
            if !self.log_kappa[j].is_finite() {
                continue;
            }
            terms.clear();
            terms.extend(inn.iter().map(|(w, i)| w.ln() + i.log_pdf(&self.z[j])));
            out[j] = (log_sum_exp(&terms) - self.log_kappa[j]).exp();
        }
        Ok(out)
    }

    fn prediction(&self, density: TrackDensity) -> Result<Arc<RowPrediction>, FilterError> {
        let ratios = self.ratios(&density)?;
        Ok(Arc::new(RowPrediction {
            density: Arc::new(density),
            ratios,
        }))
    }

    fn survivor(&mut self, prior: &Arc<TrackDensity>) -> Result<Arc<RowPrediction>, FilterError> {
        if let Some(p) = self.survivors.get(&ptr(prior)) {
            return Ok(p.clone());
        }
        let motion = &self.models.motion;
        let p = self.prediction(prior.predict(&motion.f, &motion.q))?;
        self.survivors.insert(ptr(prior), p.clone());
        Ok(p)
    }

    fn spawned(&mut self, prior: &Arc<TrackDensity>) -> Result<Arc<RowPrediction>, FilterError> {
        if let Some(p) = self.spawns.get(&ptr(prior)) {
            return Ok(p.clone());
        }
        let p = self.prediction(spawn_prediction(prior, self.models))?;
        self.spawns.insert(ptr(prior), p.clone());
        Ok(p)
    }

    /// Posterior of a single-member row given measurement `j` (0 = missed)
    /// together with `log ⟨p, g(z_j|·)⟩` (0 when missed).
    fn posterior(&mut self, pred: &Arc<TrackDensity>, j: u32) -> Result<(Arc<TrackDensity>, f64), FilterError> {
        let key = (ptr(pred), j);
        if let Some(p) = self.posteriors.get(&key) {
            return Ok(p.clone());
        }
        let out = if j == 0 {
            (Arc::new(self.cap(pred.as_ref().clone())), 0.0)
        } else {
            let s = &self.models.sensor;
            let (post, ll) = pred.update(&self.z[j as usize - 1], &s.h, &s.r)?;
            (Arc::new(self.cap(post)), ll)
        };
        self.posteriors.insert(key, out.clone());
        Ok(out)
    }

    /// Joint update of a family with at least two present members.
    /// `pattern` holds the entry of the survival row followed by the spawn
    /// slots (−1 absent).
    fn joint(
        &mut self,
        prior: &Arc<TrackDensity>,
        parent: &Label,
        spawn_labels: &[Label],
        pattern: &[i32],
    ) -> Result<Arc<JointResult>, FilterError> {
        let key = (ptr(prior), pattern.to_vec());
        if let Some(r) = self.joints.get(&key) {
            return Ok(r.clone());
        }
        let spawn_model: &dyn OffsetModel = &self.models.spawn;
        let survivor = (pattern[0] >= 0).then_some(parent);
        let spawns: Vec<(Label, &dyn OffsetModel)> = spawn_labels
            .iter()
            .zip(&pattern[1..])
            .filter(|(_, &j)| j >= 0)
            .map(|(l, _)| (l.clone(), spawn_model))
            .collect();
        let motion = &self.models.motion;
        let family = build_family(prior, survivor, &spawns, &motion.f, &motion.q, &self.models.spawn.q_t)?;
        let assigned: Vec<Option<MeasVec>> = pattern
            .iter()
            .filter(|&&j| j >= 0)
            .map(|&j| (j > 0).then(|| self.z[j as usize - 1]))
            .collect();
        let s = &self.models.sensor;
        let post = family.update(&assigned, &s.h, &s.r)?;
        let mut posteriors = Vec::with_capacity(post.members());
        for i in 0..post.members() {
            posteriors.push(Arc::new(self.cap(post.marginalize(i)?)));
        }
        let r = Arc::new(JointResult {
            log_evidence: post.log_evidence,
            posteriors,
        });
        self.joints.insert(key, r.clone());
        Ok(r)
    }
}

/// Predicted marginal of one spawned object: every parent component is
/// combined with every offset of the spawn model.
pub fn spawn_prediction(parent: &TrackDensity, models: &Models) -> TrackDensity {
    let f = &models.motion.f;
    let mut out = Vec::new();
    for (w, g) in parent.components() {
        let cov = f * g.cov * f.transpose() + models.spawn.q_t;
        let cov = (cov + cov.transpose()) * 0.5;
        let base = f * g.mean;
        for (ow, d) in models.spawn.offsets(&g.mean) {
            out.push((w * ow, Gaussian::new(base + d, cov)));
        }
    }
    GaussianMixture::new(out)
}

/// Multinomial split of `total` draws with probabilities `weights`.
pub fn multinomial<R: Rng + ?Sized>(total: usize, weights: &[f64], rng: &mut R) -> Vec<usize> {
    let mut left = total as u64;
    let mut mass: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        if left == 0 || i + 1 == weights.len() {
            out.push(left as usize);
            left = 0;
            continue;
        }
        let p = if mass > 0.0 { (w / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, p).expect("valid binomial").sample(rng);
        out.push(k as usize);
        left -= k;
        mass -= w;
    }
    out
}

struct Candidate {
    log_weight: f64,
    members: Vec<(Label, Arc<TrackDensity>, u32)>,
    parent: usize,
}

/// One step of the GLMB recursion with spawning.
///
/// `seed` drives the Gibbs budget allocation and every component's chain;
/// equal inputs give bit-identical outputs.
pub fn joint_predict_update(
    prior: &GlmbDensity,
    z: &[MeasVec],
    models: &Models,
    cfg: &FilterConfig,
    seed: u64,
) -> Result<StepOutput, FilterError> {
    if prior.is_empty() {
        return Err(FilterError::EmptyPrior);
    }
    let next = prior.scan + 1;
    let sensor = &models.sensor;
    let exhaustive = cfg.truncation == Truncation::Exhaustive;
    let mut by_x: Vec<(f64, usize)> = z.iter().enumerate().map(|(j, z)| (z[0], j)).collect();
    by_x.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut step = Step {
        models,
        cfg,
        z,
        log_kappa: z.iter().map(|zj| sensor.clutter_loglik(zj)).collect(),
        by_x,
        gate: (!exhaustive).then_some(cfg.gate),
        ln_pd: sensor.p_d.ln(),
        ln_qd: (1.0 - sensor.p_d).ln(),
        survivors: HashMap::new(),
        spawns: HashMap::new(),
        posteriors: HashMap::new(),
        joints: HashMap::new(),
    };

    let births: Vec<(Label, f64, Arc<RowPrediction>)> = models
        .birth
        .regions
        .iter()
        .map(|r| {
            let label = Label::birth(next, r.label_index).expect("validated label index");
            Ok((label, r.r_b, step.prediction(r.density.clone())?))
        })
        .collect::<Result<_, FilterError>>()?;
    let mut births = births;
    births.sort_by(|a, b| a.0.cmp(&b.0));

    let sweeps: Vec<usize> = if exhaustive {
        vec![0; prior.len()]
    } else {
        let mut rng = seeds::stream(seed, &[seeds::PURPOSE_ALLOCATE]);
        multinomial(cfg.hmax, &prior.weights(), &mut rng)
            .into_iter()
            .map(|n| n.max(cfg.min_sweeps))
            .collect()
    };

    let spawning = models.spawn.enabled();
    let per_parent = if spawning { models.spawn.per_parent } else { 0 };
    let p_s = models.survival.p_s;
    let (ln_ps, ln_qs) = (p_s.ln(), (1.0 - p_s).ln());
    let p_t = models.spawn.p_t;
    let (ln_pt, ln_qt) = (p_t.ln(), (1.0 - p_t).ln());

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut hypotheses = 0;
    for (h, comp) in prior.components.iter().enumerate() {
        let n = comp.labels.len();
        let surv: Vec<Arc<RowPrediction>> = comp
            .densities
            .iter()
            .map(|d| step.survivor(d))
            .collect::<Result<_, _>>()?;
        let spawn_pred: Vec<Arc<RowPrediction>> = if spawning {
            comp.densities
                .iter()
                .map(|d| step.spawned(d))
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };
        // spawn rows in canonical label order, remembering parent and slot
        let mut spawn_rows: Vec<(Label, usize)> = Vec::with_capacity(n * per_parent as usize);
        for (s, l) in comp.labels.iter().enumerate() {
            for i in 1..=per_parent {
                spawn_rows.push((Label::spawn(l, next, i).expect("next scan follows"), s));
            }
        }
        spawn_rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut slots: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, (_, s)) in spawn_rows.iter().enumerate() {
            slots[*s].push(k);
        }

        let nb = births.len();
        let mut rows = Vec::with_capacity(nb + n + spawn_rows.len());
        let mut exist = Vec::with_capacity(rows.capacity());
        let mut ratios: Vec<&[f64]> = Vec::with_capacity(rows.capacity());
        for (l, r_b, p) in &births {
            rows.push(CostRow {
                label: l.clone(),
                kind: RowKind::Birth,
            });
            exist.push(*r_b);
            ratios.push(&p.ratios);
        }
        for (l, p) in comp.labels.iter().zip(&surv) {
            rows.push(CostRow {
                label: l.clone(),
                kind: RowKind::Survive,
            });
            exist.push(p_s * cfg.temper_s);
            ratios.push(&p.ratios);
        }
        for (l, s) in &spawn_rows {
            rows.push(CostRow {
                label: l.clone(),
                kind: RowKind::Spawn,
            });
            exist.push(p_t * cfg.temper_t);
            ratios.push(&spawn_pred[*s].ratios);
        }
        let table = CostTable::from_parts(rows, &exist, &ratios, sensor.p_d * cfg.temper_d, z.len());

        let vectors = if exhaustive {
            assignment::enumerate_vectors(&table)
        } else {
            let mut rng = seeds::stream(seed, &[seeds::PURPOSE_GIBBS, h as u64]);
            let init = table.initial_vector();
            let mut v = vec![init.clone()];
            v.extend(assignment::gibbs_sample(&table, &init, sweeps[h], &mut rng));
            v
        };
        let uniq = assignment::unique(&vectors);
        hypotheses += uniq.vectors.len();

        for gamma in &uniq.vectors {
            let mut lw = comp.log_weight;
            let mut members = Vec::new();
            for (b, (l, r_b, p)) in births.iter().enumerate() {
                let j = gamma[b];
                if j < 0 {
                    lw += (1.0 - r_b).ln();
                    continue;
                }
                let (post, ll) = step.posterior(&p.density, j as u32)?;
                lw += r_b.ln()
                    + if j == 0 {
                        step.ln_qd
                    } else {
                        step.ln_pd + ll - step.log_kappa[j as usize - 1]
                    };
                members.push((l.clone(), post, j as u32));
            }
            let mut pattern = Vec::with_capacity(1 + per_parent as usize);
            let mut spawn_labels = Vec::with_capacity(per_parent as usize);
            for s in 0..n {
                pattern.clear();
                spawn_labels.clear();
                pattern.push(gamma[nb + s]);
                lw += if gamma[nb + s] >= 0 { ln_ps } else { ln_qs };
                for &k in &slots[s] {
                    let j = gamma[nb + n + k];
                    pattern.push(j);
                    spawn_labels.push(spawn_rows[k].0.clone());
                    lw += if j >= 0 { ln_pt } else { ln_qt };
                }
                let present = pattern.iter().filter(|&&j| j >= 0).count();
                if present == 0 {
                    continue;
                }
                let detected = pattern.iter().filter(|&&j| j > 0).count();
                if present == 1 || detected == 0 {
                    for (slot, &j) in pattern.iter().enumerate() {
                        if j < 0 {
                            continue;
                        }
                        let (label, pred) = if slot == 0 {
                            (comp.labels[s].clone(), &surv[s].density)
                        } else {
                            (spawn_labels[slot - 1].clone(), &spawn_pred[s].density)
                        };
                        let (post, ll) = step.posterior(pred, j as u32)?;
                        lw += if j == 0 {
                            step.ln_qd
                        } else {
                            step.ln_pd + ll - step.log_kappa[j as usize - 1]
                        };
                        members.push((label, post, j as u32));
                    }
                } else {
                    let res = step.joint(&comp.densities[s], &comp.labels[s], &spawn_labels, &pattern)?;
                    lw += res.log_evidence;
                    let mut next_post = res.posteriors.iter();
                    for (slot, &j) in pattern.iter().enumerate() {
                        if j < 0 {
                            continue;
                        }
                        lw += if j == 0 {
                            step.ln_qd
                        } else {
                            step.ln_pd - step.log_kappa[j as usize - 1]
                        };
                        let label = if slot == 0 {
                            comp.labels[s].clone()
                        } else {
                            spawn_labels[slot - 1].clone()
                        };
                        members.push((label, next_post.next().expect("one per member").clone(), j as u32));
                    }
                }
            }
            if lw.is_finite() {
                members.sort_by(|a, b| a.0.cmp(&b.0));
                candidates.push(Candidate {
                    log_weight: lw,
                    members,
                    parent: h,
                });
            }
        }
    }

    let total = log_sum_exp(&candidates.iter().map(|c| c.log_weight).collect::<Vec<_>>());
    let components: Vec<GlmbComponent> = candidates
        .into_iter()
        .map(|c| {
            let labels: Arc<[Label]> = c.members.iter().map(|m| m.0.clone()).collect();
            let theta: Box<[u32]> = c.members.iter().map(|m| m.2).collect();
            let parent = prior.components[c.parent].history.clone();
            let digest = node_digest(parent.as_ref().map_or(0, |p| p.digest), next, &labels, &theta);
            GlmbComponent {
                history: Some(Arc::new(HistoryNode {
                    parent,
                    prior_labels: prior.components[c.parent].labels.clone(),
                    labels: labels.clone(),
                    theta,
                    scan: next,
                    digest,
                })),
                labels,
                densities: c.members.into_iter().map(|m| m.1).collect(),
                log_weight: c.log_weight - total,
            }
        })
        .collect();

    let mut density = GlmbDensity {
        components: aggregate(components, cfg.history_depth),
        scan: next,
    };
    let discarded_mass = cap_components(&mut density, cfg.cap);
    let stats = StepStats {
        scan: next,
        prior_components: prior.len(),
        sweeps: sweeps.iter().sum(),
        hypotheses,
        components: density.len(),
        ess: density.ess(),
        discarded_mass,
    };
    Ok(StepOutput { density, stats })
}

/// Merges components with equal label set and history by summing their
/// weights; the first occurrence keeps its densities and position. The
/// result is renormalized.
pub fn aggregate(components: Vec<GlmbComponent>, depth: Option<usize>) -> Vec<GlmbComponent> {
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut out: Vec<GlmbComponent> = Vec::with_capacity(components.len());
    let mut logs: Vec<Vec<f64>> = Vec::with_capacity(components.len());
    for c in components {
        let key = {
            let mut h = DefaultHasher::new();
            c.labels.hash(&mut h);
            history_digest(&c.history, depth).hash(&mut h);
            h.finish()
        };
        let bucket = buckets.entry(key).or_default();
        let hit = bucket
            .iter()
            .copied()
            .find(|&i| out[i].labels == c.labels && history_eq(&out[i].history, &c.history, depth));
        match hit {
            Some(i) => logs[i].push(c.log_weight),
            None => {
                bucket.push(out.len());
                logs.push(vec![c.log_weight]);
                out.push(c);
            }
        }
    }
    for (c, l) in out.iter_mut().zip(&logs) {
        c.log_weight = if l.len() == 1 { l[0] } else { log_sum_exp(l) };
    }
    let total = log_sum_exp(&out.iter().map(|c| c.log_weight).collect::<Vec<_>>());
    for c in &mut out {
        c.log_weight -= total;
    }
    out
}

/// Keeps the `cap` heaviest components (ties go to the lexicographically
/// smaller label set), renormalizes, and returns the discarded weight.
pub fn cap_components(density: &mut GlmbDensity, cap: usize) -> f64 {
    let cap = cap.max(1);
    if density.len() <= cap {
        density.normalize();
        return 0.0;
    }
    let mut order: Vec<usize> = (0..density.len()).collect();
    let comps = &density.components;
    order.sort_by(|&a, &b| {
        comps[b]
            .log_weight
            .total_cmp(&comps[a].log_weight)
            .then_with(|| comps[a].labels.cmp(&comps[b].labels))
            .then(a.cmp(&b))
    });
    let total = log_sum_exp(&comps.iter().map(|c| c.log_weight).collect::<Vec<_>>());
    let kept_logs: Vec<f64> = order[..cap].iter().map(|&i| comps[i].log_weight).collect();
    let kept = (log_sum_exp(&kept_logs) - total).exp();
    let mut keep = order[..cap].to_vec();
    keep.sort_unstable();
    let mut all: Vec<Option<GlmbComponent>> = std::mem::take(&mut density.components)
        .into_iter()
        .map(Some)
        .collect();
    density.components = keep.iter().map(|&i| all[i].take().expect("kept once")).collect();
    density.normalize();
    1.0 - kept
}

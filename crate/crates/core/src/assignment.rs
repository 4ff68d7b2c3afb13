//! Association cost tables, Gibbs sampling of positive 1-1 vectors, and the
//! exact alternatives (full enumeration, Murty ranking) used for small
//! instances and tests.
//!
//! An association vector `γ` has one entry per table row: `-1` when the
//! label is absent, `0` when it exists but is missed, `j >= 1` when it
//! generated measurement `j`. Positive entries are unique.

use std::collections::HashMap;

use rand::Rng;

use crate::error::GaussianError;
use crate::gaussian::{log_sum_exp, MeasVec, TrackDensity};
use crate::labels::Label;
use crate::lsap;
use crate::models::SensorModel;

/// Clamping range for existence and detection probabilities in a table.
pub const PROB_FLOOR: f64 = 1e-6;

pub type AssocVector = Vec<i32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKind {
    Birth,
    Survive,
    Spawn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub label: Label,
    pub kind: RowKind,
}

/// Non-negative weights `η_i(j)` for `j ∈ {-1, 0, 1..=m}`.
#[derive(Clone, Debug)]
pub struct CostTable {
    rows: Vec<CostRow>,
    measurements: usize,
    eta: Vec<f64>,
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// `⟨p, g(z_j|·)⟩ / κ(z_j)` for every measurement, evaluated for a predicted
/// track density. Measurements with zero clutter intensity get weight zero.
pub fn detection_ratios(
    pred: &TrackDensity,
    z: &[MeasVec],
    sensor: &SensorModel,
) -> Result<Vec<f64>, GaussianError> {
    let inn = pred.innovations(&sensor.h, &sensor.r)?;
    let mut out = Vec::with_capacity(z.len());
    let mut terms = Vec::with_capacity(inn.len());
    for zj in z {
        let log_kappa = sensor.clutter_loglik(zj);
        if !log_kappa.is_finite() {
            out.push(0.0);
            continue;
        }
        terms.clear();
        terms.extend(inn.iter().map(|(w, i)| w.ln() + i.log_pdf(zj)));
        out.push((log_sum_exp(&terms) - log_kappa).exp());
    }
    Ok(out)
}

impl CostTable {
    /// Row `i` reads `{1-p_i, p_i (1-p_D), p_i p_D L_i(1), …, p_i p_D L_i(m)}`
    /// with `p_i = exist[i]` and `L_i = ratios[i]`. Probabilities are clamped
    /// into `[1e-6, 1-1e-6]`.
    pub fn from_parts(rows: Vec<CostRow>, exist: &[f64], ratios: &[&[f64]], p_d: f64, m: usize) -> Self {
        assert_eq!(rows.len(), exist.len());
        assert_eq!(rows.len(), ratios.len());
        let p_d = clamp_prob(p_d);
        let width = m + 2;
        let mut eta = Vec::with_capacity(rows.len() * width);
        for (p, l) in exist.iter().zip(ratios) {
            assert_eq!(l.len(), m);
            let p = clamp_prob(*p);
            eta.push(1.0 - p);
            eta.push(p * (1.0 - p_d));
            eta.extend(l.iter().map(|x| p * p_d * x));
        }
        CostTable {
            rows,
            measurements: m,
            eta,
        }
    }

    /// Table from explicit entries, row-major over `j = -1, 0, 1..=m`.
    pub fn from_matrix(rows: Vec<CostRow>, m: usize, eta: Vec<f64>) -> Self {
        assert_eq!(eta.len(), rows.len() * (m + 2));
        assert!(eta.iter().all(|x| x.is_finite() && *x >= 0.0), "negative or non-finite weight");
        CostTable {
            rows,
            measurements: m,
            eta,
        }
    }

    pub fn rows(&self) -> &[CostRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }

    pub fn eta(&self, row: usize, j: i32) -> f64 {
        self.eta[row * (self.measurements + 2) + (j + 1) as usize]
    }

    pub fn row_slice(&self, row: usize) -> &[f64] {
        let w = self.measurements + 2;
        &self.eta[row * w..(row + 1) * w]
    }

    /// `Π_i η_i(γ_i)`.
    pub fn weight(&self, gamma: &[i32]) -> f64 {
        gamma.iter().enumerate().map(|(i, &j)| self.eta(i, j)).product()
    }

    pub fn log_weight(&self, gamma: &[i32]) -> f64 {
        gamma.iter().enumerate().map(|(i, &j)| self.eta(i, j).ln()).sum()
    }

    /// Births and spawns absent, survivors present but missed.
    pub fn initial_vector(&self) -> AssocVector {
        self.rows
            .iter()
            .map(|r| if r.kind == RowKind::Survive { 0 } else { -1 })
            .collect()
    }
}

pub fn is_positive_one_to_one(gamma: &[i32]) -> bool {
    let mut seen: Vec<i32> = gamma.iter().copied().filter(|&j| j > 0).collect();
    let n = seen.len();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == n
}

/// Runs `sweeps` Gibbs sweeps from `init`. Each sweep resamples every row in
/// order from its conditional given the other rows; the vector after each
/// sweep is returned.
#[allow(clippy::needless_range_loop)]
pub fn gibbs_sample<R: Rng + ?Sized>(
    table: &CostTable,
    init: &[i32],
    sweeps: usize,
    rng: &mut R,
) -> Vec<AssocVector> {
    assert_eq!(init.len(), table.len());
    debug_assert!(is_positive_one_to_one(init));
    let m = table.measurements();
    let mut gamma = init.to_vec();
    // owner[j] = row currently holding measurement j + 1
    let mut owner: Vec<Option<usize>> = vec![None; m];
    for (i, &j) in gamma.iter().enumerate() {
        if j > 0 {
            owner[(j - 1) as usize] = Some(i);
        }
    }
    let mut probs = vec![0.0; m + 2];
    let mut out = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        for i in 0..table.len() {
            let row = table.row_slice(i);
            let mut total = 0.0;
            for (k, p) in probs.iter_mut().enumerate() {
                let free = k < 2 || owner[k - 2].is_none_or(|o| o == i);
                *p = if free { row[k] } else { 0.0 };
                total += *p;
            }
            let mut u = rng.gen::<f64>() * total;
            let mut pick = 0;
            for (k, p) in probs.iter().enumerate() {
                if *p > 0.0 {
                    pick = k;
                    if u < *p {
                        break;
                    }
                    u -= p;
                }
            }
            let old = gamma[i];
            if old > 0 {
                owner[(old - 1) as usize] = None;
            }
            let new = pick as i32 - 1;
            if new > 0 {
                owner[(new - 1) as usize] = Some(i);
            }
            gamma[i] = new;
        }
        out.push(gamma.clone());
    }
    out
}

/// Result of [`unique`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unique {
    /// Distinct vectors in order of first occurrence.
    pub vectors: Vec<AssocVector>,
    pub counts: Vec<usize>,
    /// For every input, the position of its vector in `vectors`.
    pub index: Vec<usize>,
}

pub fn unique(vectors: &[AssocVector]) -> Unique {
    let mut seen: HashMap<&[i32], usize> = HashMap::new();
    let mut out = Unique {
        vectors: Vec::new(),
        counts: Vec::new(),
        index: Vec::with_capacity(vectors.len()),
    };
    for v in vectors {
        let next = out.vectors.len();
        let k = *seen.entry(v.as_slice()).or_insert(next);
        if k == next {
            out.vectors.push(v.clone());
            out.counts.push(0);
        }
        out.counts[k] += 1;
        out.index.push(k);
    }
    out
}

/// Label set and association map encoded by a vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    /// Present labels in row order.
    pub labels: Vec<Label>,
    /// Measurement index per present label (0 = missed), aligned with `labels`.
    pub theta: Vec<u32>,
}

pub fn gamma_to_hypothesis(table: &CostTable, gamma: &[i32]) -> Hypothesis {
    let mut h = Hypothesis {
        labels: Vec::new(),
        theta: Vec::new(),
    };
    for (row, &j) in table.rows().iter().zip(gamma) {
        if j >= 0 {
            h.labels.push(row.label.clone());
            h.theta.push(j as u32);
        }
    }
    h
}

/// Inverse of [`gamma_to_hypothesis`]; labels missing from the hypothesis
/// map to `-1`.
pub fn hypothesis_to_gamma(table: &CostTable, h: &Hypothesis) -> AssocVector {
    table
        .rows()
        .iter()
        .map(|row| {
            h.labels
                .iter()
                .position(|l| *l == row.label)
                .map_or(-1, |k| h.theta[k] as i32)
        })
        .collect()
}

/// Every positive 1-1 vector with non-zero weight, in lexicographic order.
pub fn enumerate_vectors(table: &CostTable) -> Vec<AssocVector> {
    fn rec(table: &CostTable, i: usize, used: &mut [bool], cur: &mut AssocVector, out: &mut Vec<AssocVector>) {
        if i == table.len() {
            out.push(cur.clone());
            return;
        }
        for j in -1..=table.measurements() as i32 {
            if table.eta(i, j) <= 0.0 || (j > 0 && used[(j - 1) as usize]) {
                continue;
            }
            if j > 0 {
                used[(j - 1) as usize] = true;
            }
            cur.push(j);
            rec(table, i + 1, used, cur, out);
            cur.pop();
            if j > 0 {
                used[(j - 1) as usize] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(table, 0, &mut vec![false; table.measurements()], &mut Vec::new(), &mut out);
    out
}

/// The `k` highest-weight positive 1-1 vectors by Murty's ranked assignment,
/// best first. Equal weights are ordered lexicographically by `γ`.
pub fn murty_topk(table: &CostTable, k: usize) -> Vec<(AssocVector, f64)> {
    let p = table.len();
    let m = table.measurements();
    if p == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    // columns: m measurements, then one private miss and one private absent
    // column per row
    let cols = m + 2 * p;
    let mut base = vec![lsap::FORBIDDEN; p * cols];
    for i in 0..p {
        let cost = |j: i32| {
            let e = table.eta(i, j);
            if e > 0.0 {
                -e.ln()
            } else {
                lsap::FORBIDDEN
            }
        };
        for j in 1..=m {
            base[i * cols + j - 1] = cost(j as i32);
        }
        base[i * cols + m + i] = cost(0);
        base[i * cols + m + p + i] = cost(-1);
    }
    let to_gamma = |assign: &[usize]| -> AssocVector {
        assign
            .iter()
            .map(|&c| {
                if c < m {
                    c as i32 + 1
                } else if c < m + p {
                    0
                } else {
                    -1
                }
            })
            .collect()
    };
    // column of row i for gamma value j
    let col_of = |i: usize, j: i32| -> usize {
        match j {
            -1 => m + p + i,
            0 => m + i,
            j => (j - 1) as usize,
        }
    };

    struct Node {
        cost: Vec<f64>,
        assign: Vec<usize>,
        total: f64,
    }
    let first = match lsap::solve(&base, p, cols) {
        Some((assign, total)) => Node {
            cost: base,
            assign,
            total,
        },
        None => return Vec::new(),
    };
    let mut open = vec![first];
    let mut out: Vec<(AssocVector, f64)> = Vec::new();
    // collect a few extra so ties at the boundary can be ordered
    while out.len() < k + p && !open.is_empty() {
        let best = (0..open.len())
            .min_by(|&a, &b| {
                open[a]
                    .total
                    .total_cmp(&open[b].total)
                    .then_with(|| to_gamma(&open[a].assign).cmp(&to_gamma(&open[b].assign)))
            })
            .unwrap();
        let node = open.swap_remove(best);
        let gamma = to_gamma(&node.assign);
        out.push((gamma.clone(), (-node.total).exp()));
        // partition: child r forces rows < r to their assignment and forbids
        // row r's current assignment
        let mut cost = node.cost.clone();
        for r in 0..p {
            let mut child = cost.clone();
            child[r * cols + node.assign[r]] = lsap::FORBIDDEN;
            if let Some((assign, total)) = lsap::solve(&child, p, cols) {
                open.push(Node {
                    cost: child,
                    assign,
                    total,
                });
            }
            let keep = col_of(r, gamma[r]);
            for c in 0..cols {
                if c != keep {
                    cost[r * cols + c] = lsap::FORBIDDEN;
                }
            }
            for i in 0..p {
                if i != r {
                    cost[i * cols + keep] = lsap::FORBIDDEN;
                }
            }
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.truncate(k);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{Gaussian, StateMat, StateVec};
    use crate::models::ScenarioConfig;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows(kinds: &[RowKind]) -> Vec<CostRow> {
        kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| CostRow {
                label: Label::birth(1, i as u32 + 1).unwrap(),
                kind,
            })
            .collect()
    }

    fn random_table(rng: &mut ChaCha8Rng, p: usize, m: usize) -> CostTable {
        let eta = (0..p * (m + 2)).map(|_| rng.gen_range(0.05..1.0)).collect();
        CostTable::from_matrix(rows(&vec![RowKind::Survive; p]), m, eta)
    }

    fn exact_law(table: &CostTable) -> HashMap<AssocVector, f64> {
        let all = enumerate_vectors(table);
        let total: f64 = all.iter().map(|g| table.weight(g)).sum();
        all.into_iter().map(|g| {
            let w = table.weight(&g) / total;
            (g, w)
        }).collect()
    }

    #[test]
    fn eta_rows_follow_existence_and_detection() {
        let r = rows(&[RowKind::Birth, RowKind::Survive]);
        let l = [2.0, 3.0];
        let t = CostTable::from_parts(r, &[0.02, 0.99], &[&l, &l], 0.88, 2);
        assert_relative_eq!(t.eta(0, -1), 0.98);
        assert_relative_eq!(t.eta(1, -1), 0.01, epsilon = 1e-15);
        assert_relative_eq!(t.eta(1, 0), 0.99 * 0.12, epsilon = 1e-15);
        assert_relative_eq!(t.eta(1, 2), 0.99 * 0.88 * 3.0, epsilon = 1e-15);
    }

    #[test]
    fn probabilities_are_clamped() {
        let t = CostTable::from_parts(rows(&[RowKind::Spawn]), &[0.0], &[&[]], 1.0, 0);
        assert_relative_eq!(t.eta(0, 0), PROB_FLOOR * PROB_FLOOR);
        assert!(t.eta(0, -1) < 1.0);
    }

    #[test]
    fn detection_ratio_is_a_gaussian_integral() {
        // ⟨N(x; m, P), N(z; Hx, R)⟩ = N(z; Hm, HPHᵀ + R), computed per axis
        let sensor = ScenarioConfig::default().models().sensor;
        let pred = TrackDensity::single(Gaussian::new(
            StateVec::new(10.0, -20.0, 1.0, 0.0),
            StateMat::identity() * 44.0,
        ));
        let z = MeasVec::new(13.0, -25.0);
        let got = detection_ratios(&pred, &[z], &sensor).unwrap()[0];
        let var = 44.0 + 100.0;
        let axis = |d: f64| (-0.5 * d * d / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let want = axis(3.0) * axis(-5.0) / 1.65e-5;
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn two_state_chain_frequency() {
        let (a, b) = (0.3, 0.7);
        let t = CostTable::from_matrix(rows(&[RowKind::Survive]), 0, vec![a, b]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let hits = gibbs_sample(&t, &[-1], n, &mut rng).iter().filter(|g| g[0] == 0).count();
        let p = b / (a + b);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn gibbs_matches_enumeration_in_total_variation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_table(&mut rng, 3, 2);
        let law = exact_law(&t);
        let n = 100_000;
        let draws = gibbs_sample(&t, &t.initial_vector(), n, &mut rng);
        let mut freq: HashMap<AssocVector, f64> = HashMap::new();
        for d in draws {
            *freq.entry(d).or_default() += 1.0 / n as f64;
        }
        let tv: f64 = law
            .iter()
            .map(|(g, p)| (p - freq.get(g).copied().unwrap_or(0.0)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.05, "total variation {tv}");
        assert!(freq.keys().all(|g| law.contains_key(g)));
    }

    #[test]
    fn gibbs_never_duplicates_a_measurement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // dense contention: five rows over two measurements
        let t = random_table(&mut rng, 5, 2);
        let draws = gibbs_sample(&t, &t.initial_vector(), 200_000, &mut rng);
        assert!(draws.iter().all(|g| is_positive_one_to_one(g)));
    }

    #[test]
    fn unique_examples() {
        let a = vec![1, 0];
        let b = vec![-1, 0];
        let u = unique(&[a.clone(), a.clone(), b.clone()]);
        assert_eq!(u.vectors, vec![a, b]);
        assert_eq!(u.counts, vec![2, 1]);
        assert_eq!(u.index, vec![0, 0, 1]);
        assert!(unique(&[]).vectors.is_empty());
    }

    #[test]
    fn hypothesis_extremes() {
        let t = CostTable::from_matrix(rows(&[RowKind::Birth, RowKind::Survive]), 1, vec![1.0; 6]);
        assert!(gamma_to_hypothesis(&t, &[-1, -1]).labels.is_empty());
        let h = gamma_to_hypothesis(&t, &[0, 0]);
        assert_eq!(h.labels.len(), 2);
        assert_eq!(h.theta, vec![0, 0]);
    }

    proptest! {
        #[test]
        fn hypothesis_round_trip(p in 1usize..6, m in 0usize..4, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_table(&mut rng, p, m);
            let g = gibbs_sample(&t, &t.initial_vector(), 3, &mut rng).pop().unwrap();
            let h = gamma_to_hypothesis(&t, &g);
            prop_assert_eq!(hypothesis_to_gamma(&t, &h), g);
        }
    }

    #[test]
    fn enumeration_counts() {
        // one row over {-1, 0, 1}: three vectors; two rows share one measurement: 3·3 − 1
        let t = CostTable::from_matrix(rows(&[RowKind::Survive]), 1, vec![1.0; 3]);
        assert_eq!(enumerate_vectors(&t).len(), 3);
        let t = CostTable::from_matrix(rows(&[RowKind::Survive; 2]), 1, vec![1.0; 6]);
        assert_eq!(enumerate_vectors(&t).len(), 8);
    }

    #[test]
    fn murty_single_row() {
        let t = CostTable::from_matrix(rows(&[RowKind::Survive]), 0, vec![0.2, 0.8]);
        let top = murty_topk(&t, 5);
        assert_eq!(top.len(), 2);
        assert_eq!(top[0].0, vec![0]);
        assert_eq!(top[1].0, vec![-1]);
        assert_relative_eq!(top[0].1, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn murty_matches_enumeration_ranking() {
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = rng.gen_range(1..4);
            let m = rng.gen_range(0..3);
            let t = random_table(&mut rng, p, m);
            let mut all: Vec<(AssocVector, f64)> =
                enumerate_vectors(&t).into_iter().map(|g| { let w = t.weight(&g); (g, w) }).collect();
            all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let k = all.len().min(6);
            let top = murty_topk(&t, k);
            assert_eq!(top.len(), k);
            for (got, want) in top.iter().zip(&all) {
                assert_relative_eq!(got.1, want.1, max_relative = 1e-9);
            }
            assert_eq!(top[0].0, all[0].0);
            assert_eq!(murty_topk(&t, all.len() + 10).len(), all.len());
        }
    }
}

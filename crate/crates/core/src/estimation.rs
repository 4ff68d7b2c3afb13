//! State extraction and summary statistics of a GLMB density.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::gaussian::{GaussianMixture, StateMat, StateVec, TrackDensity};
use crate::glmb::GlmbDensity;
use crate::labels::Label;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackEstimate {
    pub label: Label,
    pub mean: [f64; 4],
    #[serde(skip)]
    pub cov: StateMat,
    /// Total weight of the components containing the label.
    pub existence: f64,
}

impl TrackEstimate {
    pub fn state(&self) -> StateVec {
        StateVec::from(self.mean)
    }
}

/// `ρ(n)`, the probability of exactly `n` objects, for `n = 0..=max |I|`.
pub fn cardinality_distribution(density: &GlmbDensity) -> Vec<f64> {
    let max = density.components.iter().map(|c| c.cardinality()).max().unwrap_or(0);
    let mut rho = vec![0.0; max + 1];
    for c in &density.components {
        rho[c.cardinality()] += c.weight();
    }
    rho
}

/// Expected number of objects.
pub fn mean_cardinality(density: &GlmbDensity) -> f64 {
    density
        .components
        .iter()
        .map(|c| c.weight() * c.cardinality() as f64)
        .sum()
}

/// Existence probability of every label present in some component.
pub fn existence(density: &GlmbDensity) -> BTreeMap<Label, f64> {
    let mut out = BTreeMap::new();
    for c in &density.components {
        let w = c.weight();
        for l in c.labels() {
            *out.entry(l.clone()).or_insert(0.0) += w;
        }
    }
    out
}

/// Maximum a posteriori cardinality (ties go to the smaller count), then the
/// heaviest component of that cardinality (ties go to the earlier one).
/// Each label is summarized by its moment-matched Gaussian.
pub fn extract_estimates(density: &GlmbDensity) -> Vec<TrackEstimate> {
    let rho = cardinality_distribution(density);
    let Some(n) = argmax_first(&rho) else {
        return Vec::new();
    };
    let best = density
        .components
        .iter()
        .filter(|c| c.cardinality() == n)
        .fold(None, |acc: Option<&crate::glmb::GlmbComponent>, c| match acc {
            Some(b) if b.log_weight >= c.log_weight => Some(b),
            _ => Some(c),
        });
    let Some(best) = best else {
        return Vec::new();
    };
    let ex = existence(density);
    best.labels()
        .iter()
        .zip(best.densities())
        .map(|(l, d)| {
            let g = d.moment_match();
            TrackEstimate {
                label: l.clone(),
                mean: [g.mean[0], g.mean[1], g.mean[2], g.mean[3]],
                cov: g.cov,
                existence: ex[l],
            }
        })
        .collect()
}

fn argmax_first(xs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        if best.is_none_or(|b| x > xs[b]) {
            best = Some(i);
        }
    }
    best
}

/// Existence of `label` and its weight-blended density (normalized; empty
/// when the label appears nowhere).
pub fn phd(density: &GlmbDensity, label: &Label) -> (f64, TrackDensity) {
    let mut mass = 0.0;
    let mut parts = Vec::new();
    for c in &density.components {
        if let Some(d) = c.density(label) {
            let w = c.weight();
            mass += w;
            parts.extend(d.components().iter().map(|(v, g)| (w * v, g.clone())));
        }
    }
    let mut mix = GaussianMixture::new(parts);
    mix.normalize();
    (mass, mix)
}

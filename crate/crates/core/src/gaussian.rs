//! Gaussian and Gaussian-mixture algebra for linear-Gaussian models.
//!
//! Single-object densities live in fixed-size types. Family blocks stack a
//! parent's survived state with its spawned states and therefore have a
//! size known only at run time; they use dynamic matrices.

use nalgebra::{Cholesky, DMatrix, DVector, SMatrix, SVector};

use crate::error::GaussianError;
use crate::labels::Label;

pub const STATE_DIM: usize = 4;
pub const MEAS_DIM: usize = 2;

pub type StateVec = SVector<f64, STATE_DIM>;
pub type StateMat = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type MeasVec = SVector<f64, MEAS_DIM>;
pub type MeasMat = SMatrix<f64, MEAS_DIM, MEAS_DIM>;
pub type ObsMat = SMatrix<f64, MEAS_DIM, STATE_DIM>;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian<const N: usize> {
    pub mean: SVector<f64, N>,
    pub cov: SMatrix<f64, N, N>,
}

/// Kinematic single-object Gaussian.
pub type StateGaussian = Gaussian<STATE_DIM>;
/// Single-object track density.
pub type TrackDensity = GaussianMixture<STATE_DIM>;

pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Symmetric and no eigenvalue below `-1e-9 * trace`.
pub fn is_psd<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).abs().max() > 1e-9 * scale {
        return false;
    }
    let sym = symmetrize(m);
    let floor = -1e-9 * sym.trace().abs().max(f64::MIN_POSITIVE);
    DMatrix::from_column_slice(N, N, sym.as_slice())
        .symmetric_eigenvalues()
        .iter()
        .all(|&e| e >= floor)
}

/// Precomputed predicted measurement and innovation factor for repeated
/// likelihood evaluations against many measurements.
#[derive(Clone, Debug)]
pub struct Innovation<const M: usize> {
    pub predicted: SVector<f64, M>,
    chol: Cholesky<f64, nalgebra::Const<M>>,
    log_norm: f64,
}

impl<const M: usize> Innovation<M> {
    pub fn new(predicted: SVector<f64, M>, s: SMatrix<f64, M, M>) -> Result<Self, GaussianError> {
        let chol = Cholesky::new(symmetrize(&s)).ok_or(GaussianError::SingularInnovation)?;
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Innovation {
            predicted,
            chol,
            log_norm: 0.5 * (M as f64 * LN_2PI + log_det),
        })
    }

    /// `log N(z; predicted, S)`.
    pub fn log_pdf(&self, z: &SVector<f64, M>) -> f64 {
        let e = z - self.predicted;
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&e)
            .unwrap_or_else(|| SVector::repeat(f64::INFINITY));
        -0.5 * y.norm_squared() - self.log_norm
    }

    /// Standard deviation of the predicted measurement along one axis.
    pub fn std_dev(&self, axis: usize) -> f64 {
        self.chol.l_dirty().row(axis).columns(0, axis + 1).norm()
    }

    pub fn inverse(&self) -> SMatrix<f64, M, M> {
        self.chol.inverse()
    }
}

impl<const N: usize> Gaussian<N> {
    pub fn new(mean: SVector<f64, N>, cov: SMatrix<f64, N, N>) -> Self {
        Gaussian { mean, cov }
    }

    /// `N(F·m, F·P·Fᵀ + Q)`.
    pub fn predict(&self, f: &SMatrix<f64, N, N>, q: &SMatrix<f64, N, N>) -> Self {
        Gaussian {
            mean: f * self.mean,
            cov: symmetrize(&(f * self.cov * f.transpose() + q)),
        }
    }

    pub fn innovation<const M: usize>(
        &self,
        h: &SMatrix<f64, M, N>,
        r: &SMatrix<f64, M, M>,
    ) -> Result<Innovation<M>, GaussianError> {
        Innovation::new(h * self.mean, h * self.cov * h.transpose() + r)
    }

    /// Kalman measurement update. Also returns `log N(z; H·m, H·P·Hᵀ + R)`.
    pub fn update<const M: usize>(
        &self,
        z: &SVector<f64, M>,
        h: &SMatrix<f64, M, N>,
        r: &SMatrix<f64, M, M>,
    ) -> Result<(Self, f64), GaussianError> {
        let inn = self.innovation(h, r)?;
        Ok(self.update_with(&inn, z, h))
    }

    pub(crate) fn update_with<const M: usize>(
        &self,
        inn: &Innovation<M>,
        z: &SVector<f64, M>,
        h: &SMatrix<f64, M, N>,
    ) -> (Self, f64) {
        let pht = self.cov * h.transpose();
        let gain = pht * inn.inverse();
        let mean = self.mean + gain * (z - inn.predicted);
        let cov = symmetrize(&(self.cov - gain * pht.transpose()));
        (Gaussian { mean, cov }, inn.log_pdf(z))
    }

    pub fn is_psd(&self) -> bool {
        is_psd(&self.cov)
    }
}

/// Weighted sum of Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture<const N: usize> {
    components: Vec<(f64, Gaussian<N>)>,
}

impl<const N: usize> GaussianMixture<N> {
    pub fn new(components: Vec<(f64, Gaussian<N>)>) -> Self {
        GaussianMixture { components }
    }

    pub fn single(g: Gaussian<N>) -> Self {
        GaussianMixture {
            components: vec![(1.0, g)],
        }
    }

    pub fn empty() -> Self {
        GaussianMixture {
            components: Vec::new(),
        }
    }

    pub fn components(&self) -> &[(f64, Gaussian<N>)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    /// Rescales weights to sum to one and returns the previous total.
    pub fn normalize(&mut self) -> f64 {
        let total = self.total_weight();
        if total > 0.0 {
            for (w, _) in &mut self.components {
                *w /= total;
            }
        }
        total
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= 1e-9
    }

    pub fn predict(&self, f: &SMatrix<f64, N, N>, q: &SMatrix<f64, N, N>) -> Self {
        GaussianMixture {
            components: self
                .components
                .iter()
                .map(|(w, g)| (*w, g.predict(f, q)))
                .collect(),
        }
    }

    /// Single Gaussian with the mixture's first two moments.
    pub fn moment_match(&self) -> Gaussian<N> {
        let total = self.total_weight();
        let mean = self
            .components
            .iter()
            .fold(SVector::<f64, N>::zeros(), |acc, (w, g)| acc + g.mean * (*w / total));
        let cov = self.components.iter().fold(SMatrix::<f64, N, N>::zeros(), |acc, (w, g)| {
            let d = g.mean - mean;
            acc + (g.cov + d * d.transpose()) * (*w / total)
        });
        Gaussian::new(mean, symmetrize(&cov))
    }

    /// Per-component innovations, paired with the component weights.
    pub fn innovations<const M: usize>(
        &self,
        h: &SMatrix<f64, M, N>,
        r: &SMatrix<f64, M, M>,
    ) -> Result<Vec<(f64, Innovation<M>)>, GaussianError> {
        self.components
            .iter()
            .map(|(w, g)| Ok((*w, g.innovation(h, r)?)))
            .collect()
    }

    /// `log Σ_c w_c N(z; H·m_c, H·P_c·Hᵀ + R)`.
    pub fn log_likelihood<const M: usize>(
        &self,
        z: &SVector<f64, M>,
        h: &SMatrix<f64, M, N>,
        r: &SMatrix<f64, M, M>,
    ) -> Result<f64, GaussianError> {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|(w, g)| Ok(w.ln() + g.innovation(h, r)?.log_pdf(z)))
            .collect::<Result<_, GaussianError>>()?;
        Ok(log_sum_exp(&terms))
    }

    /// Bayes update of the whole mixture; the result is normalized and the
    /// returned value is the log of the mixture's predictive likelihood.
    pub fn update<const M: usize>(
        &self,
        z: &SVector<f64, M>,
        h: &SMatrix<f64, M, N>,
        r: &SMatrix<f64, M, M>,
    ) -> Result<(Self, f64), GaussianError> {
        let mut parts = Vec::with_capacity(self.components.len());
        let mut logs = Vec::with_capacity(self.components.len());
        for (w, g) in &self.components {
            let inn = g.innovation(h, r)?;
            let (post, ll) = g.update_with(&inn, z, h);
            logs.push(w.ln() + ll);
            parts.push(post);
        }
        let total = log_sum_exp(&logs);
        let components = logs
            .iter()
            .zip(parts)
            .map(|(l, g)| ((l - total).exp(), g))
            .collect();
        Ok((GaussianMixture { components }, total))
    }
}

/// Result of [`cap_mixture`].
#[derive(Clone, Debug)]
pub struct CappedMixture<const N: usize> {
    pub mixture: GaussianMixture<N>,
    /// Weight retained before renormalization.
    pub kept_mass: f64,
}

/// Drops components whose relative weight is below `prune_threshold`, keeps
/// the `max_components` heaviest (ties go to the lower index) and
/// renormalizes. At least one component always survives.
pub fn cap_mixture<const N: usize>(
    mix: &GaussianMixture<N>,
    max_components: usize,
    prune_threshold: f64,
) -> CappedMixture<N> {
    let max_components = max_components.max(1);
    let total = mix.total_weight();
    let mut order: Vec<usize> = (0..mix.len()).collect();
    order.sort_by(|&a, &b| {
        mix.components[b]
            .0
            .total_cmp(&mix.components[a].0)
            .then(a.cmp(&b))
    });
    let mut keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| mix.components[i].0 >= prune_threshold * total)
        .take(max_components)
        .collect();
    if keep.is_empty() {
        if let Some(&best) = order.first() {
            keep.push(best);
        }
    }
    keep.sort_unstable();
    let mut out = GaussianMixture {
        components: keep.iter().map(|&i| mix.components[i].clone()).collect(),
    };
    let kept_mass = out.normalize();
    CappedMixture {
        mixture: out,
        kept_mass,
    }
}

/// Numerically stable `log Σ exp(x_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Weighted offsets applied to the predicted parent state of a spawned member.
pub trait OffsetModel {
    /// `(weight, d)` pairs for a parent whose current estimate is `parent`.
    fn offsets(&self, parent: &StateVec) -> Vec<(f64, StateVec)>;
}

/// Gaussian over a stacked state of arbitrary dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct JointGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Joint density over a parent's survived state and its spawned states.
///
/// Members are stacked in `member_labels` order, each taking
/// [`STATE_DIM`] rows. Every pair of members is correlated through the
/// shared parent state by `F·P·Fᵀ`.
#[derive(Clone, Debug)]
pub struct FamilyBlock {
    pub member_labels: Vec<Label>,
    pub joint: Vec<(f64, JointGaussian)>,
    /// Log of the accumulated measurement evidence (0 before any update).
    pub log_evidence: f64,
}

/// Builds the joint predicted density of a family.
///
/// `survivor` is the parent's own label when it survives; each entry of
/// `spawns` is a spawned member with the offset model that places it.
pub fn build_family(
    parent: &TrackDensity,
    survivor: Option<&Label>,
    spawns: &[(Label, &dyn OffsetModel)],
    f: &StateMat,
    q: &StateMat,
    q_spawn: &StateMat,
) -> Result<FamilyBlock, GaussianError> {
    let members = usize::from(survivor.is_some()) + spawns.len();
    if members == 0 {
        return Err(GaussianError::EmptyFamily);
    }
    let mut member_labels = Vec::with_capacity(members);
    member_labels.extend(survivor.cloned());
    member_labels.extend(spawns.iter().map(|(l, _)| l.clone()));

    let dim = members * STATE_DIM;
    let mut joint = Vec::new();
    for (w, g) in parent.components() {
        let base_mean = f * g.mean;
        let shared = symmetrize(&(f * g.cov * f.transpose()));
        let offsets: Vec<Vec<(f64, StateVec)>> =
            spawns.iter().map(|(_, m)| m.offsets(&g.mean)).collect();
        // odometer over the offset choice of every spawned member
        let mut pick = vec![0usize; offsets.len()];
        loop {
            let mut weight = *w;
            let mut mean = DVector::zeros(dim);
            let mut cov = DMatrix::zeros(dim, dim);
            for a in 0..members {
                for b in 0..members {
                    cov.fixed_view_mut::<STATE_DIM, STATE_DIM>(a * STATE_DIM, b * STATE_DIM)
                        .copy_from(&shared);
                }
            }
            let mut slot = 0;
            if survivor.is_some() {
                mean.fixed_rows_mut::<STATE_DIM>(0).copy_from(&base_mean);
                let mut blk = cov.fixed_view_mut::<STATE_DIM, STATE_DIM>(0, 0);
                blk += q;
                slot = 1;
            }
            for (s, choices) in offsets.iter().enumerate() {
                let (ow, d) = &choices[pick[s]];
                weight *= ow;
                let at = (slot + s) * STATE_DIM;
                mean.fixed_rows_mut::<STATE_DIM>(at).copy_from(&(base_mean + d));
                let mut blk = cov.fixed_view_mut::<STATE_DIM, STATE_DIM>(at, at);
                blk += q_spawn;
            }
            joint.push((weight, JointGaussian { mean, cov }));

            let mut carry = true;
            for (s, choices) in offsets.iter().enumerate() {
                if !carry {
                    break;
                }
                pick[s] += 1;
                if pick[s] == choices.len() {
                    pick[s] = 0;
                } else {
                    carry = false;
                }
            }
            if carry {
                break;
            }
        }
    }
    Ok(FamilyBlock {
        member_labels,
        joint,
        log_evidence: 0.0,
    })
}

impl FamilyBlock {
    pub fn members(&self) -> usize {
        self.member_labels.len()
    }

    /// Stacked Kalman update. `assigned[i]` is the measurement of member `i`
    /// or `None` when it is missed; missed members carry no Gaussian factor.
    /// Component weights are renormalized and the log predictive likelihood
    /// of the stacked measurement is added to `log_evidence`.
    pub fn update(
        &self,
        assigned: &[Option<MeasVec>],
        h: &ObsMat,
        r: &MeasMat,
    ) -> Result<FamilyBlock, GaussianError> {
        if assigned.len() != self.members() {
            return Err(GaussianError::DimensionMismatch {
                expected: self.members(),
                got: assigned.len(),
            });
        }
        let detected: Vec<(usize, MeasVec)> = assigned
            .iter()
            .enumerate()
            .filter_map(|(i, z)| z.map(|z| (i, z)))
            .collect();
        if detected.is_empty() {
            return Ok(self.clone());
        }
        let dim = self.members() * STATE_DIM;
        let mdim = detected.len() * MEAS_DIM;
        let mut big_h = DMatrix::zeros(mdim, dim);
        let mut big_r = DMatrix::zeros(mdim, mdim);
        let mut z = DVector::zeros(mdim);
        for (row, (member, zi)) in detected.iter().enumerate() {
            big_h
                .fixed_view_mut::<MEAS_DIM, STATE_DIM>(row * MEAS_DIM, member * STATE_DIM)
                .copy_from(h);
            big_r
                .fixed_view_mut::<MEAS_DIM, MEAS_DIM>(row * MEAS_DIM, row * MEAS_DIM)
                .copy_from(r);
            z.fixed_rows_mut::<MEAS_DIM>(row * MEAS_DIM).copy_from(zi);
        }

        let mut logs = Vec::with_capacity(self.joint.len());
        let mut parts = Vec::with_capacity(self.joint.len());
        for (w, g) in &self.joint {
            let pht = &g.cov * big_h.transpose();
            let s = &big_h * &pht + &big_r;
            let s = (&s + s.transpose()) * 0.5;
            let chol = s.cholesky().ok_or(GaussianError::SingularInnovation)?;
            let e = &z - &big_h * &g.mean;
            let sol = chol.solve(&e);
            let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let ll = -0.5 * (e.dot(&sol) + log_det + mdim as f64 * LN_2PI);
            let gain_t = chol.solve(&pht.transpose());
            let mean = &g.mean + &pht * &sol;
            let cov = &g.cov - &pht * &gain_t;
            let cov = (&cov + cov.transpose()) * 0.5;
            logs.push(w.ln() + ll);
            parts.push(JointGaussian { mean, cov });
        }
        let total = log_sum_exp(&logs);
        let joint = logs
            .iter()
            .zip(parts)
            .map(|(l, g)| ((l - total).exp(), g))
            .collect();
        Ok(FamilyBlock {
            member_labels: self.member_labels.clone(),
            joint,
            log_evidence: self.log_evidence + total,
        })
    }

    /// Marginal density of one member, normalized.
    pub fn marginalize(&self, member: usize) -> Result<TrackDensity, GaussianError> {
        if member >= self.members() {
            return Err(GaussianError::MemberOutOfRange {
                index: member,
                len: self.members(),
            });
        }
        let at = member * STATE_DIM;
        let mut out = GaussianMixture::new(
            self.joint
                .iter()
                .map(|(w, g)| {
                    let mean: StateVec = g.mean.fixed_rows::<STATE_DIM>(at).into_owned();
                    let cov: StateMat = g.cov.fixed_view::<STATE_DIM, STATE_DIM>(at, at).into_owned();
                    (*w, Gaussian::new(mean, symmetrize(&cov)))
                })
                .collect(),
        );
        out.normalize();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix1, Vector1};

    fn cv_f(dt: f64) -> StateMat {
        let mut f = StateMat::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        f
    }

    fn cv_q(dt: f64, sigma: f64) -> StateMat {
        let mut q = StateMat::zeros();
        let s2 = sigma * sigma;
        for i in 0..2 {
            q[(i, i)] = s2 * dt.powi(4) / 4.0;
            q[(i, i + 2)] = s2 * dt.powi(3) / 2.0;
            q[(i + 2, i)] = s2 * dt.powi(3) / 2.0;
            q[(i + 2, i + 2)] = s2 * dt * dt;
        }
        q
    }

    fn h() -> ObsMat {
        let mut h = ObsMat::zeros();
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 1.0;
        h
    }

    #[test]
    fn identity_prediction_is_a_no_op() {
        let g = Gaussian::new(StateVec::new(1.0, 2.0, 3.0, 4.0), StateMat::identity() * 7.0);
        assert_eq!(g.predict(&StateMat::identity(), &StateMat::zeros()), g);
    }

    #[test]
    fn resting_birth_stays_put() {
        let g = Gaussian::new(StateVec::new(0.0, 500.0, 0.0, 0.0), StateMat::identity() * 100.0);
        let p = g.predict(&cv_f(1.0), &cv_q(1.0, 1.0));
        assert_eq!(p.mean, StateVec::new(0.0, 500.0, 0.0, 0.0));
    }

    #[test]
    fn predicted_covariance_matches_hand_product() {
        // P = 100 I, F = [I I; 0 I], Q from sigma = 1:
        // pos var 100 + 100 + 1/4, pos-vel 100 + 1/2, vel var 100 + 1
        let g = Gaussian::new(StateVec::zeros(), StateMat::identity() * 100.0);
        let p = g.predict(&cv_f(1.0), &cv_q(1.0, 1.0));
        for i in 0..2 {
            assert_relative_eq!(p.cov[(i, i)], 200.25, epsilon = 1e-12);
            assert_relative_eq!(p.cov[(i, i + 2)], 100.5, epsilon = 1e-12);
            assert_relative_eq!(p.cov[(i + 2, i)], 100.5, epsilon = 1e-12);
            assert_relative_eq!(p.cov[(i + 2, i + 2)], 101.0, epsilon = 1e-12);
        }
        assert_eq!(p.cov[(0, 1)], 0.0);
        assert_eq!(p.cov[(0, 3)], 0.0);
    }

    #[test]
    fn scalar_update_matches_bayes_formula() {
        let g = Gaussian::<1>::new(Vector1::new(0.0), Matrix1::new(1.0));
        let (post, ll) = g
            .update(&Vector1::new(1.0), &Matrix1::new(1.0), &Matrix1::new(1.0))
            .unwrap();
        assert_relative_eq!(post.mean[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(post.cov[(0, 0)], 0.5, epsilon = 1e-14);
        // log N(1; 0, 2)
        let expected = -0.5 * (2.0 * std::f64::consts::PI * 2.0).ln() - 0.25;
        assert_relative_eq!(ll, expected, epsilon = 1e-14);
    }

    #[test]
    fn exact_measurement_pins_position() {
        let g = Gaussian::new(StateVec::new(5.0, -3.0, 1.0, 1.0), StateMat::identity() * 50.0);
        let z = MeasVec::new(12.0, 4.0);
        let (post, _) = g.update(&z, &h(), &(MeasMat::identity() * 1e-12)).unwrap();
        assert_relative_eq!(post.mean[0], 12.0, epsilon = 1e-8);
        assert_relative_eq!(post.mean[1], 4.0, epsilon = 1e-8);
    }

    #[test]
    fn likelihood_peaks_at_predicted_measurement() {
        let g = Gaussian::new(StateVec::new(5.0, -3.0, 1.0, 1.0), StateMat::identity() * 50.0);
        let r = MeasMat::identity() * 100.0;
        let inn = g.innovation(&h(), &r).unwrap();
        let at_mode = inn.log_pdf(&MeasVec::new(5.0, -3.0));
        for dz in [0.1, 1.0, 10.0] {
            assert!(inn.log_pdf(&MeasVec::new(5.0 + dz, -3.0)) < at_mode);
            assert!(inn.log_pdf(&MeasVec::new(5.0, -3.0 - dz)) < at_mode);
        }
    }

    #[test]
    fn singular_innovation_is_reported() {
        let g = Gaussian::new(StateVec::zeros(), StateMat::zeros());
        let err = g.update(&MeasVec::zeros(), &h(), &MeasMat::zeros()).unwrap_err();
        assert_eq!(err, GaussianError::SingularInnovation);
    }

    #[test]
    fn cap_examples() {
        let g = || Gaussian::<1>::new(Vector1::new(0.0), Matrix1::new(1.0));
        let mix = GaussianMixture::new(vec![(0.9, g()), (0.09, g()), (0.01, g())]);
        let capped = cap_mixture(&mix, 10, 0.05);
        let w: Vec<f64> = capped.mixture.components().iter().map(|c| c.0).collect();
        assert_eq!(w.len(), 2);
        assert_relative_eq!(w[0], 0.9 / 0.99, epsilon = 1e-14);
        assert_relative_eq!(w[1], 0.09 / 0.99, epsilon = 1e-14);
        assert_relative_eq!(capped.kept_mass, 0.99, epsilon = 1e-14);

        let a = Gaussian::<1>::new(Vector1::new(1.0), Matrix1::new(1.0));
        let b = Gaussian::<1>::new(Vector1::new(2.0), Matrix1::new(1.0));
        let tie = GaussianMixture::new(vec![(0.5, a.clone()), (0.5, b)]);
        let capped = cap_mixture(&tie, 1, 0.0);
        assert_eq!(capped.mixture.components(), &[(1.0, a)]);

        let under = GaussianMixture::new(vec![(0.3, g()), (0.3, g())]);
        let capped = cap_mixture(&under, 5, 1e-5);
        assert_eq!(capped.mixture.len(), 2);
        assert_relative_eq!(capped.mixture.components()[0].0, 0.5);
    }

    struct Fixed(StateVec);
    impl OffsetModel for Fixed {
        fn offsets(&self, _: &StateVec) -> Vec<(f64, StateVec)> {
            vec![(1.0, self.0)]
        }
    }

    struct Three;
    impl OffsetModel for Three {
        fn offsets(&self, _: &StateVec) -> Vec<(f64, StateVec)> {
            (0..3)
                .map(|i| (1.0 / 3.0, StateVec::new(i as f64, 0.0, 0.0, 0.0)))
                .collect()
        }
    }

    fn label(s: &str) -> Label {
        s.parse().unwrap()
    }

    #[test]
    fn survivor_only_family_is_plain_prediction() {
        let parent = GaussianMixture::single(Gaussian::new(
            StateVec::new(1.0, 2.0, 3.0, 4.0),
            StateMat::identity() * 3.0,
        ));
        let (f, q) = (cv_f(1.0), cv_q(1.0, 1.0));
        let fam = build_family(&parent, Some(&label("1,1")), &[], &f, &q, &q).unwrap();
        let pred = parent.components()[0].1.predict(&f, &q);
        assert_eq!(fam.joint.len(), 1);
        assert_relative_eq!(fam.joint[0].1.mean, DVector::from_column_slice(pred.mean.as_slice()));
        let m = fam.marginalize(0).unwrap();
        assert_relative_eq!(m.components()[0].1.cov, pred.cov, epsilon = 1e-12);
    }

    #[test]
    fn spawn_cross_block_is_f_ft() {
        let parent = GaussianMixture::single(Gaussian::new(StateVec::zeros(), StateMat::identity()));
        let f = cv_f(1.0);
        let q = cv_q(1.0, 1.0);
        let qt = StateMat::identity() * 25.0;
        let off = Fixed(StateVec::new(70.0, 0.0, 0.0, 0.0));
        let fam = build_family(
            &parent,
            Some(&label("1,1")),
            &[(label("1,1,2,1"), &off as &dyn OffsetModel)],
            &f,
            &q,
            &qt,
        )
        .unwrap();
        let cov = &fam.joint[0].1.cov;
        let cross: StateMat = cov.fixed_view::<4, 4>(0, 4).into_owned();
        assert_relative_eq!(cross, f * f.transpose(), epsilon = 1e-14);
        let spawn_block: StateMat = cov.fixed_view::<4, 4>(4, 4).into_owned();
        assert_relative_eq!(spawn_block, f * f.transpose() + qt, epsilon = 1e-14);
        let m = fam.marginalize(1).unwrap();
        assert_relative_eq!(m.components()[0].1.mean, StateVec::new(70.0, 0.0, 0.0, 0.0));
        assert!(fam.marginalize(2).is_err());
    }

    #[test]
    fn three_offsets_give_three_equal_components() {
        let parent = GaussianMixture::single(Gaussian::new(
            StateVec::new(0.0, 0.0, 1.0, 0.0),
            StateMat::identity(),
        ));
        let f = cv_f(1.0);
        let fam = build_family(
            &parent,
            None,
            &[(label("1,1,2,1"), &Three as &dyn OffsetModel)],
            &f,
            &StateMat::identity(),
            &StateMat::identity(),
        )
        .unwrap();
        assert_eq!(fam.joint.len(), 3);
        for (i, (w, g)) in fam.joint.iter().enumerate() {
            assert_relative_eq!(*w, 1.0 / 3.0);
            // F·m + d_i
            assert_relative_eq!(g.mean[0], 1.0 + i as f64);
        }
        assert!(matches!(
            build_family(&parent, None, &[], &f, &f, &f),
            Err(GaussianError::EmptyFamily)
        ));
    }

    #[test]
    fn joint_update_without_spawn_equals_kalman() {
        let g = Gaussian::new(StateVec::new(0.0, 0.0, 2.0, -1.0), StateMat::identity() * 20.0);
        let parent = GaussianMixture::single(g.clone());
        let (f, q) = (cv_f(1.0), cv_q(1.0, 1.0));
        let r = MeasMat::identity() * 100.0;
        let z = MeasVec::new(4.0, -3.0);
        let fam = build_family(&parent, Some(&label("1,1")), &[], &f, &q, &q).unwrap();
        let post = fam.update(&[Some(z)], &h(), &r).unwrap();
        let (direct, ll) = g.predict(&f, &q).update(&z, &h(), &r).unwrap();
        let m = post.marginalize(0).unwrap();
        assert_relative_eq!(m.components()[0].1.mean, direct.mean, epsilon = 1e-10);
        assert_relative_eq!(m.components()[0].1.cov, direct.cov, epsilon = 1e-10);
        assert_relative_eq!(post.log_evidence, ll, epsilon = 1e-12);
    }

    #[test]
    fn moment_match_of_two_components() {
        let a = Gaussian::<1>::new(Vector1::new(-1.0), Matrix1::new(1.0));
        let b = Gaussian::<1>::new(Vector1::new(1.0), Matrix1::new(1.0));
        let m = GaussianMixture::new(vec![(0.5, a), (0.5, b)]).moment_match();
        assert_relative_eq!(m.mean[0], 0.0);
        assert_relative_eq!(m.cov[(0, 0)], 2.0);
    }

    #[test]
    fn psd_check() {
        assert!(is_psd(&StateMat::identity()));
        let mut bad = StateMat::identity();
        bad[(3, 3)] = -1.0;
        assert!(!is_psd(&bad));
        let mut asym = StateMat::identity();
        asym[(0, 1)] = 0.5;
        assert!(!is_psd(&asym));
    }
}

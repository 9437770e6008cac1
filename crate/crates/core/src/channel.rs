//! Linear-Gaussian test channels `X̂ = H·S + G·Y + W` and their checks.
//!
//! A channel is synthesized from a distortion covariance `Σ_Δ`. The same
//! matrices also give the decoder-only form `Z = H·S + W`, `X̂ = G·Y + Z`.
//! Structural checks are computed analytically from the joint covariance of
//! `(X, S, Y, X̂, Z)`; nothing here samples except [`simulate_channel`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::{
    conditional_stats, gaussian_cmi, min_eigenvalue, partial_covariance, psd_tolerance,
    pseudo_inverse, select, svd, symmetric_sqrt, symmetrize, ConditionalStats, GaussianSourceSpec,
    INV_TOL, RANK_TOL, SYM_REL_TOL,
};

/// Residual threshold for [`verify_structure`], on a covariance normalized to unit max diagonal.
pub const STRUCT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct TestChannel {
    /// n_x × n_s measurement gain.
    pub h: DMatrix<f64>,
    /// n_x × n_y side-information gain.
    pub g: DMatrix<f64>,
    /// Covariance of the independent noise `W`.
    pub q_w: DMatrix<f64>,
    /// Target distortion covariance `E[(X - X̂)(X - X̂)ᵀ]`.
    pub sigma_delta: DMatrix<f64>,
    /// `Q_{X̂|Y} = H Q_{S|Y} Hᵀ + Q_W`.
    pub q_xhat_given_y: DMatrix<f64>,
    /// `Q_{S|X̂,Y}`.
    pub q_s_given_xhat_y: DMatrix<f64>,
}

/// Smallest singular value of `Q_{X,S|Y}` after checking the square-cross hypothesis.
pub(crate) fn check_cross(stats: &ConditionalStats) -> Result<()> {
    let cross = &stats.q_xs_given_y;
    if cross.nrows() != cross.ncols() {
        return Err(Error::Dimension(format!(
            "test-channel synthesis needs n_x = n_s, got n_x = {}, n_s = {}",
            cross.nrows(),
            cross.ncols()
        )));
    }
    let sv = svd(cross).singular_values;
    let smin = sv.min();
    if smin <= INV_TOL * sv.max().max(1.0) {
        return Err(Error::SingularCross {
            min_singular_value: smin,
        });
    }
    Ok(())
}

pub fn build_channel(
    spec: &GaussianSourceSpec,
    stats: &ConditionalStats,
    sigma_delta: &DMatrix<f64>,
) -> Result<TestChannel> {
    let n_x = spec.dims().n_x;
    if sigma_delta.shape() != (n_x, n_x) {
        return Err(Error::Dimension(format!(
            "Σ_Δ must be {n_x}x{n_x}, got {}x{}",
            sigma_delta.nrows(),
            sigma_delta.ncols()
        )));
    }
    if sigma_delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asym = (sigma_delta - sigma_delta.transpose()).norm();
    if asym > SYM_REL_TOL * sigma_delta.norm() {
        return Err(Error::InfeasibleSigma(format!(
            "Σ_Δ is not symmetric (residual {asym:.3e})"
        )));
    }
    let sigma = symmetrize(sigma_delta);

    let tol = psd_tolerance(&stats.q_x_given_y);
    let sigma_min = min_eigenvalue(&sigma);
    if sigma_min < -tol {
        return Err(Error::InfeasibleSigma(format!(
            "Σ_Δ has negative eigenvalue {sigma_min:.6e}"
        )));
    }
    let reproduction = symmetrize(&(&stats.q_x_given_y - &sigma));
    let gap_min = min_eigenvalue(&reproduction);
    if gap_min < -tol {
        return Err(Error::InfeasibleSigma(format!(
            "Σ_Δ exceeds Q_{{X|Y}} (eigenvalue of difference {gap_min:.6e})"
        )));
    }
    check_cross(stats)?;

    // H = (Q_{X|Y} - Σ_Δ) Q_{X,S|Y}^{-T}, i.e. Q_{X,S|Y} Hᵀ = Q_{X|Y} - Σ_Δ.
    let h_t = stats
        .q_xs_given_y
        .clone()
        .lu()
        .solve(&reproduction)
        .ok_or(Error::SingularCross {
            min_singular_value: 0.0,
        })?;
    let h = h_t.transpose();

    let g = decoder_gain(spec, &h)?;

    let signal = symmetrize(&(&h * &stats.q_s_given_y * h.transpose()));
    let mut q_w = symmetrize(&(&reproduction - &signal));
    let w_min = min_eigenvalue(&q_w);
    if w_min < -tol {
        return Err(Error::NegativeNoise {
            min_eigenvalue: w_min,
        });
    }
    if w_min < 0.0 {
        q_w = clamp_negative(&q_w);
    }

    let q_xhat_given_y = symmetrize(&(&signal + &q_w));
    let cross = &stats.q_s_given_y * h.transpose();
    let q_s_given_xhat_y = symmetrize(
        &(&stats.q_s_given_y
            - &cross * pseudo_inverse(&q_xhat_given_y, RANK_TOL) * cross.transpose()),
    );

    Ok(TestChannel {
        h,
        g,
        q_w,
        sigma_delta: sigma,
        q_xhat_given_y,
        q_s_given_xhat_y,
    })
}

/// `G = (Q_{X,Y} - H Q_{S,Y}) Q_Y^{-1}`.
fn decoder_gain(spec: &GaussianSourceSpec, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q_y = spec.q_y();
    let chol = q_y.clone().cholesky().ok_or_else(|| Error::SingularY {
        min_eigenvalue: min_eigenvalue(&q_y),
    })?;
    let rhs = spec.q_xy() - h * spec.q_sy();
    Ok(chol.solve(&rhs.transpose()).transpose())
}

fn clamp_negative(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let vals = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&vals) * v.transpose()))
}

/// Decoder-only realization: `Z = H·S + W` is what the encoder sends,
/// and the decoder forms `X̂ = G·Y + Z`.
#[derive(Debug, Clone)]
pub struct DecoderOnlyForm {
    pub h: DMatrix<f64>,
    pub q_w: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

pub fn decoder_only_form(channel: &TestChannel) -> DecoderOnlyForm {
    DecoderOnlyForm {
        h: channel.h.clone(),
        q_w: channel.q_w.clone(),
        g: channel.g.clone(),
    }
}

impl DecoderOnlyForm {
    /// Gains `(H, G)` of the composed map `X̂ = H·S + G·Y + W`.
    pub fn composed_gains(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.h.clone(), self.g.clone())
    }

    /// Covariance of `(X, S, Y, X̂, Z)` induced by this form.
    pub fn joint_covariance(&self, spec: &GaussianSourceSpec) -> DMatrix<f64> {
        joint_covariance(spec, &self.h, &self.g, &self.q_w)
    }

    /// `I(S; Z | Y)` in nats.
    pub fn rate(&self, spec: &GaussianSourceSpec) -> Result<f64> {
        let idx = JointIndex::new(spec);
        let joint = self.joint_covariance(spec);
        let prior = partial_covariance(&joint, &idx.s, &idx.s, &idx.y);
        let zy = [idx.z.as_slice(), idx.y.as_slice()].concat();
        let posterior = partial_covariance(&joint, &idx.s, &idx.s, &zy);
        gaussian_cmi(&prior, &posterior)
    }
}

/// Index sets of the stacked vector `(X, S, Y, X̂, Z)`.
struct JointIndex {
    x: Vec<usize>,
    s: Vec<usize>,
    y: Vec<usize>,
    xhat: Vec<usize>,
    z: Vec<usize>,
}

impl JointIndex {
    fn new(spec: &GaussianSourceSpec) -> Self {
        let d = spec.dims();
        let n = d.total();
        JointIndex {
            x: d.x().collect(),
            s: d.s().collect(),
            y: d.y().collect(),
            xhat: (n..n + d.n_x).collect(),
            z: (n + d.n_x..n + 2 * d.n_x).collect(),
        }
    }
}

/// Joint covariance of `(X, S, Y, X̂, Z)` with `X̂ = H S + G Y + W`, `Z = H S + W`.
pub fn joint_covariance(
    spec: &GaussianSourceSpec,
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q_w: &DMatrix<f64>,
) -> DMatrix<f64> {
    let d = spec.dims();
    let n = d.total();
    let m = n + 2 * d.n_x;
    let mut lift = DMatrix::zeros(m, n);
    lift.view_mut((0, 0), (n, n)).fill_with_identity();
    lift.view_mut((n, d.n_x), (d.n_x, d.n_s)).copy_from(h);
    lift.view_mut((n, d.n_x + d.n_s), (d.n_x, d.n_y))
        .copy_from(g);
    lift.view_mut((n + d.n_x, d.n_x), (d.n_x, d.n_s))
        .copy_from(h);
    let mut noise = DMatrix::zeros(m, d.n_x);
    noise.view_mut((n, 0), (d.n_x, d.n_x)).fill_with_identity();
    noise
        .view_mut((n + d.n_x, 0), (d.n_x, d.n_x))
        .fill_with_identity();
    symmetrize(&(&lift * spec.covariance() * lift.transpose() + &noise * q_w * noise.transpose()))
}

/// Named residuals of the structural properties; each is zero when the property holds.
#[derive(Debug, Clone)]
pub struct StructuralReport {
    pub residuals: BTreeMap<&'static str, f64>,
    pub tolerance: f64,
}

impl StructuralReport {
    pub fn passed(&self, name: &str) -> Option<bool> {
        self.residuals.get(name).map(|&r| r < self.tolerance)
    }

    pub fn all_pass(&self) -> bool {
        self.residuals.values().all(|&r| r < self.tolerance)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }
}

/// Property names reported by [`verify_structure`].
pub mod property {
    /// X and Y conditionally uncorrelated given X̂.
    pub const MARKOV_X_Y_GIVEN_XHAT: &str = "markov_x_y_given_xhat";
    /// Z conditionally uncorrelated with (X, Y) given S.
    pub const Z_GIVEN_S: &str = "markov_z_xy_given_s";
    /// Sum of the two conditional-mean conditions below.
    pub const CONDITIONAL_MEAN: &str = "conditional_mean_identity";
    /// E(X|Y) and E(X̂|Y) have the same gain.
    pub const CONDITION_MEAN_MATCH: &str = "condition_mean_match";
    /// cov(X,X̂|Y) cov(X̂|Y)^† equals the identity on the range of cov(X̂|Y).
    pub const CONDITION_UNIT_GAIN: &str = "condition_unit_gain";
    /// Q_{S|Z,Y} = Q_{S|X̂,Y} and Q_{Z|Y} = Q_{X̂|Y}.
    pub const RATE_INPUTS: &str = "rate_inputs_match";
    /// H Q_{X,S|Y}ᵀ = Q_{X|Y} - Σ_Δ.
    pub const CROSS_IDENTITY: &str = "cross_identity";
    /// H Q_{X,S|Y}ᵀ symmetric PSD.
    pub const CROSS_SYMMETRIC_PSD: &str = "cross_symmetric_psd";
    /// Q_W = Q_{X|Y} - Σ_Δ - H Q_{S|Y} Hᵀ and Q_W ⪰ 0.
    pub const NOISE_COVARIANCE: &str = "noise_covariance";
    /// Q_{X̂|Y} = Q_{X|Y} - Σ_Δ.
    pub const REPRODUCTION_COVARIANCE: &str = "reproduction_covariance";
    /// E[(X - X̂)(X - X̂)ᵀ] = Σ_Δ.
    pub const DISTORTION_COVARIANCE: &str = "distortion_covariance";
    /// G = (Q_{X,Y} - H Q_{S,Y}) Q_Y^{-1}.
    pub const DECODER_GAIN: &str = "decoder_gain";
}

pub fn verify_structure(spec: &GaussianSourceSpec, channel: &TestChannel) -> StructuralReport {
    use property::*;

    let idx = JointIndex::new(spec);
    let scale = spec.scale().max(f64::MIN_POSITIVE);
    let joint = joint_covariance(spec, &channel.h, &channel.g, &channel.q_w) / scale;
    let sigma = &channel.sigma_delta / scale;
    let q_w = &channel.q_w / scale;
    let pc = |a: &[usize], b: &[usize], g: &[usize]| partial_covariance(&joint, a, b, g);
    let cat = |a: &[usize], b: &[usize]| [a, b].concat();
    let neg = |m: &DMatrix<f64>| (-min_eigenvalue(m)).max(0.0);

    let mut r = BTreeMap::new();

    r.insert(MARKOV_X_Y_GIVEN_XHAT, pc(&idx.x, &idx.y, &idx.xhat).norm());
    r.insert(Z_GIVEN_S, pc(&idx.z, &cat(&idx.x, &idx.y), &idx.s).norm());

    let q_y = select(&joint, &idx.y, &idx.y);
    let q_y_inv = pseudo_inverse(&q_y, RANK_TOL);
    let gain_x = select(&joint, &idx.x, &idx.y) * &q_y_inv;
    let gain_xhat = select(&joint, &idx.xhat, &idx.y) * &q_y_inv;
    let mean_match = (gain_x - gain_xhat).norm();

    let c = pc(&idx.x, &idx.xhat, &idx.y);
    let q_xhat_y = pc(&idx.xhat, &idx.xhat, &idx.y);
    let q_xhat_pinv = pseudo_inverse(&q_xhat_y, RANK_TOL);
    let unit_gain = (&c * &q_xhat_pinv - &q_xhat_y * &q_xhat_pinv).norm();
    r.insert(CONDITION_MEAN_MATCH, mean_match);
    r.insert(CONDITION_UNIT_GAIN, unit_gain);
    r.insert(CONDITIONAL_MEAN, mean_match + unit_gain);

    let q_s_zy = pc(&idx.s, &idx.s, &cat(&idx.z, &idx.y));
    let q_s_xhaty = pc(&idx.s, &idx.s, &cat(&idx.xhat, &idx.y));
    let q_z_y = pc(&idx.z, &idx.z, &idx.y);
    r.insert(
        RATE_INPUTS,
        (q_s_zy - &q_s_xhaty).norm() + (q_z_y - &q_xhat_y).norm(),
    );

    let q_x_y = pc(&idx.x, &idx.x, &idx.y);
    let q_s_y = pc(&idx.s, &idx.s, &idx.y);
    let q_xs_y = pc(&idx.x, &idx.s, &idx.y);
    let target = &q_x_y - &sigma;
    let h_cross = &channel.h * q_xs_y.transpose();
    r.insert(CROSS_IDENTITY, (&h_cross - &target).norm());
    r.insert(
        CROSS_SYMMETRIC_PSD,
        (&h_cross - h_cross.transpose()).norm() + neg(&h_cross),
    );
    let implied_noise = &target - &channel.h * &q_s_y * channel.h.transpose();
    r.insert(NOISE_COVARIANCE, (&q_w - implied_noise).norm() + neg(&q_w));
    r.insert(REPRODUCTION_COVARIANCE, (&q_xhat_y - &target).norm());

    // X - X̂ as a linear combination of the stacked vector.
    let mut diff = DMatrix::zeros(idx.x.len(), joint.nrows());
    for (k, (&i, &j)) in idx.x.iter().zip(&idx.xhat).enumerate() {
        diff[(k, i)] = 1.0;
        diff[(k, j)] = -1.0;
    }
    let distortion = &diff * &joint * diff.transpose();
    r.insert(DISTORTION_COVARIANCE, (distortion - &sigma).norm());

    let gain_expected = (spec.q_xy() - &channel.h * spec.q_sy()) * &q_y_inv / scale;
    r.insert(DECODER_GAIN, (&channel.g - gain_expected).norm());

    StructuralReport {
        residuals: r,
        tolerance: STRUCT_TOL,
    }
}

/// Rate of a channel by both determinant-ratio formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRate {
    /// `½ log det Q_{S|Y} / det Q_{S|X̂,Y}`
    pub from_measurement: f64,
    /// `½ log det Q_{X̂|Y} / det Q_W`
    pub from_reproduction: f64,
}

impl ChannelRate {
    pub fn rate(&self) -> f64 {
        self.from_measurement
    }

    pub fn discrepancy(&self) -> f64 {
        if self.from_measurement == self.from_reproduction {
            0.0
        } else {
            (self.from_measurement - self.from_reproduction).abs()
        }
    }
}

pub fn rate_of_channel(spec: &GaussianSourceSpec, channel: &TestChannel) -> Result<ChannelRate> {
    let stats = conditional_stats(spec)?;
    Ok(ChannelRate {
        from_measurement: gaussian_cmi(&stats.q_s_given_y, &channel.q_s_given_xhat_y)?,
        from_reproduction: gaussian_cmi(&channel.q_xhat_given_y, &channel.q_w)?,
    })
}

/// Distortion covariance `E[(X - X̂)(X - X̂)ᵀ]` implied by the channel matrices.
pub fn analytic_distortion(spec: &GaussianSourceSpec, channel: &TestChannel) -> DMatrix<f64> {
    let d = spec.dims();
    let mut map = DMatrix::zeros(d.n_x, d.total());
    map.view_mut((0, 0), (d.n_x, d.n_x)).fill_with_identity();
    map.view_mut((0, d.n_x), (d.n_x, d.n_s))
        .copy_from(&(-&channel.h));
    map.view_mut((0, d.n_x + d.n_s), (d.n_x, d.n_y))
        .copy_from(&(-&channel.g));
    &map * spec.covariance() * map.transpose() + &channel.q_w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSummary {
    pub n_samples: usize,
    /// Sample mean of `‖X - X̂‖²`.
    pub empirical_distortion: f64,
    pub standard_error: f64,
}

impl SimulationSummary {
    /// `|empirical - expected| / SE`.
    pub fn z_score(&self, expected: f64) -> f64 {
        (self.empirical_distortion - expected).abs() / self.standard_error
    }
}

/// Monte Carlo estimate of the mean squared reconstruction error.
pub fn simulate_channel(
    spec: &GaussianSourceSpec,
    channel: &TestChannel,
    n_samples: usize,
    seed: u64,
) -> Result<SimulationSummary> {
    if n_samples < 2 {
        return Err(Error::TooFewSamples(n_samples));
    }
    let d = spec.dims();
    let n = d.total();
    let root_q = symmetric_sqrt(spec.covariance())?;
    let root_w = symmetric_sqrt(&channel.q_w)?;

    // X - X̂ = [I, -H, -G]·Q^{1/2}·u - Q_W^{1/2}·v with u, v standard normal.
    let mut map = DMatrix::zeros(d.n_x, n);
    map.view_mut((0, 0), (d.n_x, d.n_x)).fill_with_identity();
    map.view_mut((0, d.n_x), (d.n_x, d.n_s))
        .copy_from(&(-&channel.h));
    map.view_mut((0, d.n_x + d.n_s), (d.n_x, d.n_y))
        .copy_from(&(-&channel.g));
    let source_map = map * root_q;
    let noise_map = -root_w;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = DVector::<f64>::zeros(n);
    let mut v = DVector::<f64>::zeros(d.n_x);
    let mut err = DVector::<f64>::zeros(d.n_x);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..n_samples {
        u.iter_mut()
            .for_each(|x| *x = StandardNormal.sample(&mut rng));
        v.iter_mut()
            .for_each(|x| *x = StandardNormal.sample(&mut rng));
        err.gemv(1.0, &source_map, &u, 0.0);
        err.gemv(1.0, &noise_map, &v, 1.0);
        let sq = err.norm_squared();
        // Welford update
        let delta = sq - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (sq - mean);
    }
    let variance = m2 / (n_samples - 1) as f64;
    Ok(SimulationSummary {
        n_samples,
        empirical_distortion: mean,
        standard_error: (variance / n_samples as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{validate_spec, Dims};

    fn scalar_example() -> GaussianSourceSpec {
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 1.5, 1.0, 1.0, 1.0, 2.0]);
        validate_spec(q, Dims::new(1, 1, 1)).unwrap()
    }

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn channel_at(spec: &GaussianSourceSpec, sigma: f64) -> Result<TestChannel> {
        let stats = conditional_stats(spec)?;
        build_channel(spec, &stats, &scalar(sigma))
    }

    #[test]
    fn scalar_example_channel() {
        let spec = scalar_example();
        let ch = channel_at(&spec, 0.375).unwrap();
        assert!((ch.h[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((ch.g[(0, 0)] - 0.375).abs() < 1e-15);
        assert!((ch.q_w[(0, 0)] - 0.0625).abs() < 1e-15);
        assert!((ch.q_xhat_given_y[(0, 0)] - 0.125).abs() < 1e-15);
        assert!((ch.q_s_given_xhat_y[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn full_distortion_gives_zero_rate_channel() {
        let spec = scalar_example();
        let ch = channel_at(&spec, 0.5).unwrap();
        assert_eq!(ch.h[(0, 0)], 0.0);
        assert_eq!(ch.q_w[(0, 0)], 0.0);
        // X̂ = E(X|Y)
        assert!((ch.g[(0, 0)] - 0.5).abs() < 1e-15);
        let rate = rate_of_channel(&spec, &ch).unwrap();
        assert_eq!(rate.from_measurement, 0.0);
        assert_eq!(rate.from_reproduction, 0.0);
        let report = verify_structure(&spec, &ch);
        assert!(report.max_residual() < 1e-12, "{report:?}");
    }

    #[test]
    fn equal_source_and_measurement_match_wyner_channel() {
        // X = S, Q_{X|Y} = q = 0.8.
        let q = DMatrix::from_row_slice(3, 3, &[1.8, 1.8, 1.0, 1.8, 1.8, 1.0, 1.0, 1.0, 1.0]);
        let spec = validate_spec(q, Dims::new(1, 1, 1)).unwrap();
        let (q, delta) = (0.8, 0.3);
        let ch = channel_at(&spec, delta).unwrap();
        let h = (q - delta) / q;
        assert!((ch.h[(0, 0)] - h).abs() < 1e-14);
        assert!((ch.q_w[(0, 0)] - h * delta).abs() < 1e-14);
        let rate = rate_of_channel(&spec, &ch).unwrap();
        assert!((rate.rate() - 0.5 * (q / delta).ln()).abs() < 1e-13);
        let half = channel_at(&spec, q / 2.0).unwrap();
        let rate = rate_of_channel(&spec, &half).unwrap();
        assert!((rate.rate() - 0.5 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn infeasible_sigma_is_rejected() {
        let spec = scalar_example();
        assert!(matches!(
            channel_at(&spec, 0.6),
            Err(Error::InfeasibleSigma(_))
        ));
        assert!(matches!(
            channel_at(&spec, -0.1),
            Err(Error::InfeasibleSigma(_))
        ));
        // Below Q_{X|S,Y} = 0.25 the implied noise covariance goes negative.
        assert!(matches!(
            channel_at(&spec, 0.2),
            Err(Error::NegativeNoise { .. })
        ));
    }

    #[test]
    fn singular_cross_is_rejected() {
        // S independent of X given Y.
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0]));
        let spec = validate_spec(q, Dims::new(1, 1, 1)).unwrap();
        assert!(matches!(
            channel_at(&spec, 0.5),
            Err(Error::SingularCross { .. })
        ));
        let q = DMatrix::identity(4, 4);
        let spec = validate_spec(q, Dims::new(1, 2, 1)).unwrap();
        let stats = conditional_stats(&spec).unwrap();
        assert!(matches!(
            build_channel(&spec, &stats, &scalar(0.5)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn decoder_only_split() {
        let spec = scalar_example();
        let ch = channel_at(&spec, 0.375).unwrap();
        let form = decoder_only_form(&ch);
        assert!((form.h[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((form.q_w[(0, 0)] - 0.0625).abs() < 1e-15);
        assert!((form.g[(0, 0)] - 0.375).abs() < 1e-15);
        assert_eq!(form.composed_gains(), (ch.h.clone(), ch.g.clone()));
        let joint = joint_covariance(&spec, &ch.h, &ch.g, &ch.q_w);
        assert_eq!(form.joint_covariance(&spec), joint);
        let rate = form.rate(&spec).unwrap();
        assert!((rate - 0.5 * 2f64.ln()).abs() < 1e-13);

        let zero = decoder_only_form(&channel_at(&spec, 0.5).unwrap());
        assert_eq!(zero.h[(0, 0)], 0.0);
        assert_eq!(zero.q_w[(0, 0)], 0.0);
        assert_eq!(zero.rate(&spec).unwrap(), 0.0);
    }

    #[test]
    fn trivial_side_information_has_no_decoder_gain() {
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let spec = validate_spec(q, Dims::new(1, 1, 1)).unwrap();
        let ch = channel_at(&spec, 0.4).unwrap();
        assert_eq!(ch.g[(0, 0)], 0.0);
        assert!((ch.q_xhat_given_y[(0, 0)] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn structure_of_scalar_example() {
        let spec = scalar_example();
        let ch = channel_at(&spec, 0.375).unwrap();
        let report = verify_structure(&spec, &ch);
        assert!(report.max_residual() < 1e-12, "{report:?}");
        assert!(report.all_pass());
        assert_eq!(report.residuals.len(), 12);
    }

    #[test]
    fn perturbed_gain_is_detected() {
        let spec = scalar_example();
        let mut ch = channel_at(&spec, 0.375).unwrap();
        ch.h[(0, 0)] += 0.1;
        let report = verify_structure(&spec, &ch);
        assert!(
            report.residuals[property::CONDITIONAL_MEAN] > 0.01,
            "{report:?}"
        );
        assert_eq!(report.passed(property::CONDITIONAL_MEAN), Some(false));
        assert!(!report.all_pass());
    }

    #[test]
    fn scalar_rates_by_both_formulas() {
        let spec = scalar_example();
        let rate = rate_of_channel(&spec, &channel_at(&spec, 0.375).unwrap()).unwrap();
        let expected = 0.5 * 2f64.ln();
        assert!((rate.from_measurement - expected).abs() < 1e-14);
        assert!((rate.from_reproduction - expected).abs() < 1e-14);
        assert!(rate.discrepancy() < 1e-14);
    }

    #[test]
    fn analytic_distortion_matches_sigma() {
        let spec = scalar_example();
        let ch = channel_at(&spec, 0.375).unwrap();
        assert!((analytic_distortion(&spec, &ch)[(0, 0)] - 0.375).abs() < 1e-14);
    }

    #[test]
    fn simulation_concentrates() {
        let spec = scalar_example();
        let ch = channel_at(&spec, 0.375).unwrap();
        let sim = simulate_channel(&spec, &ch, 1_000_000, 11).unwrap();
        assert!(sim.z_score(0.375) < 4.0, "{sim:?}");
        let again = simulate_channel(&spec, &ch, 1_000_000, 11).unwrap();
        assert_eq!(sim, again);

        let zero = channel_at(&spec, 0.5).unwrap();
        let sim = simulate_channel(&spec, &zero, 200_000, 3).unwrap();
        assert!(sim.z_score(0.5) < 4.0, "{sim:?}");

        assert_eq!(
            simulate_channel(&spec, &ch, 1, 0).unwrap_err(),
            Error::TooFewSamples(1)
        );
    }
}

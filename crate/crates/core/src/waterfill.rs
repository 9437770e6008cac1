//! Spectral reduction and water-filling evaluation of the rate-distortion function.
//!
//! With `𝐐 = Q_{S|Y}^{1/2} Q_{X,S|Y}^{-1} = V·diag(d)·Uᵀ`, the optimal
//! reproduction covariance is `Q_{X̂|Y} = U·diag(λ)·Uᵀ` where
//!
//! ```text
//! λ_i = 1/d_i² - 1/(2ξ)   if ξ > d_i²/2,   else 0,
//! Σ_i λ_i = trace(Q_{X|Y}) - Δ,
//! R(Δ) = ½ Σ_i log 1/(1 - λ_i d_i²).
//! ```
//!
//! The achievable range is `Δ⁻ < Δ ≤ Δ⁺` with `Δ⁺ = trace(Q_{X|Y})` and
//! `Δ⁻ = Δ⁺ - Σ_i 1/d_i²`. The rate is infinite at `Δ⁻` and zero from `Δ⁺` on.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Hypothesis, Result};
use crate::gaussian::{
    conditional_stats, eigenvalues, min_eigenvalue, svd, symmetric_sqrt, symmetrize,
    ConditionalStats, GaussianSourceSpec, INV_TOL, RANK_TOL,
};

/// Iteration cap for the water-level bisection.
pub const MAX_BISECTION_ITERS: usize = 200;
/// Relative water-mass tolerance, scaled by `trace(Q_{X|Y})`.
pub const WATER_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SpectralSetup {
    /// `Q_{S|Y}^{1/2} Q_{X,S|Y}^{-1}`
    pub q_matrix: DMatrix<f64>,
    /// Right singular vectors; columns follow `d`.
    pub u: DMatrix<f64>,
    /// Left singular vectors; columns follow `d`.
    pub v: DMatrix<f64>,
    /// Singular values, ascending.
    pub d: Vec<f64>,
    /// Indices with `d_i` nonzero at `RANK_TOL`.
    pub active: Vec<usize>,
    pub q_x_given_y: DMatrix<f64>,
}

impl SpectralSetup {
    pub fn trace(&self) -> f64 {
        self.q_x_given_y.trace()
    }

    pub fn water_tolerance(&self) -> f64 {
        WATER_REL_TOL * self.trace()
    }

    /// Total water `Σ_i max(0, 1/d_i² - 1/(2ξ))` at level `xi`.
    pub fn water_mass(&self, xi: f64) -> f64 {
        self.active.iter().map(|&i| allocation(self.d[i], xi)).sum()
    }
}

fn allocation(d: f64, xi: f64) -> f64 {
    let d2 = d * d;
    if xi > d2 / 2.0 {
        1.0 / d2 - 1.0 / (2.0 * xi)
    } else {
        0.0
    }
}

fn check_positive(m: &DMatrix<f64>, hypothesis: Hypothesis) -> Result<()> {
    let lmin = min_eigenvalue(m);
    let lmax = eigenvalues(m).max();
    if lmin <= INV_TOL * lmax.max(1.0) {
        return Err(Error::HypothesisViolated {
            hypothesis,
            eigenvalue: lmin,
        });
    }
    Ok(())
}

pub fn spectral_setup(stats: &ConditionalStats) -> Result<SpectralSetup> {
    let cross = &stats.q_xs_given_y;
    let (n_x, n_s) = cross.shape();
    if n_x != n_s {
        return Err(Error::HypothesisViolated {
            hypothesis: Hypothesis::SquareCross,
            eigenvalue: f64::NAN,
        });
    }
    let sv = svd(cross).singular_values;
    if sv.min() <= INV_TOL * sv.max().max(1.0) {
        return Err(Error::HypothesisViolated {
            hypothesis: Hypothesis::InvertibleCross,
            eigenvalue: sv.min(),
        });
    }
    check_positive(&stats.q_s_given_y, Hypothesis::MeasurementPositive)?;
    check_positive(&stats.q_x_given_y, Hypothesis::SourcePositive)?;
    check_positive(
        &symmetrize(&(&stats.q_x_given_y - &stats.q_x_given_sy)),
        Hypothesis::StrictConditioningGain,
    )?;

    let root = symmetric_sqrt(&stats.q_s_given_y)?;
    let cross_inv = cross
        .clone()
        .try_inverse()
        .ok_or(Error::HypothesisViolated {
            hypothesis: Hypothesis::InvertibleCross,
            eigenvalue: sv.min(),
        })?;
    let q_matrix = root * cross_inv;

    let svd = svd(&q_matrix);
    let left = svd.u;
    let right = svd.v;
    let mut order: Vec<usize> = (0..n_x).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));

    let mut u = DMatrix::zeros(n_x, n_x);
    let mut v = DMatrix::zeros(n_x, n_x);
    let mut d = Vec::with_capacity(n_x);
    for (k, &i) in order.iter().enumerate() {
        let mut uc = right.column(i).into_owned();
        let mut vc = left.column(i).into_owned();
        // Sign convention: the largest-magnitude entry of each U column is positive.
        let pivot = uc
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            uc = -uc;
            vc = -vc;
        }
        u.set_column(k, &uc);
        v.set_column(k, &vc);
        d.push(svd.singular_values[i]);
    }
    let dmax = d.iter().copied().fold(0.0, f64::max);
    let active = (0..n_x).filter(|&i| d[i] > RANK_TOL * dmax).collect();

    Ok(SpectralSetup {
        q_matrix,
        u,
        v,
        d,
        active,
        q_x_given_y: stats.q_x_given_y.clone(),
    })
}

/// `(Δ⁻, Δ⁺)`.
pub fn distortion_range(setup: &SpectralSetup) -> (f64, f64) {
    let upper = setup.trace();
    let inverse_sum: f64 = setup
        .active
        .iter()
        .map(|&i| 1.0 / (setup.d[i] * setup.d[i]))
        .sum();
    (upper - inverse_sum, upper)
}

#[derive(Debug, Clone)]
pub struct WaterfillSolution {
    pub delta: f64,
    /// Allocations paired with `d` (ascending `d`, so `λ` is descending).
    pub lambda: Vec<f64>,
    pub d: Vec<f64>,
    pub xi: f64,
    /// Nats.
    pub rate: f64,
    pub active_count: usize,
    /// `Δ ≥ Δ⁺`: nothing needs to be sent.
    pub zero_rate: bool,
    pub sigma_delta: DMatrix<f64>,
    pub q_xhat_given_y: DMatrix<f64>,
}

pub fn solve_waterfill(setup: &SpectralSetup, delta: f64) -> Result<WaterfillSolution> {
    if !delta.is_finite() {
        return Err(Error::NonFinite);
    }
    let (lower, upper) = distortion_range(setup);
    if delta <= lower {
        let at_boundary = lower - delta <= f64::EPSILON * upper.max(1.0);
        return Err(Error::BelowRange {
            delta,
            lower,
            at_boundary,
        });
    }
    let d2_min = setup
        .active
        .iter()
        .map(|&i| setup.d[i] * setup.d[i])
        .fold(f64::INFINITY, f64::min);

    let target = (upper - delta).max(0.0);
    let xi = if target == 0.0 {
        d2_min / 2.0
    } else {
        find_water_level(setup, target)?
    };

    let n = setup.d.len();
    let mut lambda = vec![0.0; n];
    let mut rate = 0.0;
    let mut active_count = 0;
    for &i in &setup.active {
        let l = allocation(setup.d[i], xi);
        if l > 0.0 {
            let d2 = setup.d[i] * setup.d[i];
            lambda[i] = l;
            active_count += 1;
            // 1 - λ d² = d² / (2ξ) on active components
            rate += 0.5 * (2.0 * xi / d2).ln();
        }
    }

    let q_xhat_given_y = symmetrize(
        &(&setup.u
            * DMatrix::from_diagonal(&DVector::from_vec(lambda.clone()))
            * setup.u.transpose()),
    );
    let sigma_delta = symmetrize(&(&setup.q_x_given_y - &q_xhat_given_y));

    Ok(WaterfillSolution {
        delta,
        lambda,
        d: setup.d.clone(),
        xi,
        rate,
        active_count,
        zero_rate: delta >= upper,
        sigma_delta,
        q_xhat_given_y,
    })
}

/// Bisection on `ξ` for `water_mass(ξ) = target`, then an exact solve on the
/// detected active set.
fn find_water_level(setup: &SpectralSetup, target: f64) -> Result<f64> {
    let tol = setup.water_tolerance();
    let d2: Vec<f64> = setup
        .active
        .iter()
        .map(|&i| setup.d[i] * setup.d[i])
        .collect();
    let mut lo = d2.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
    let mut hi = d2.iter().copied().fold(0.0, f64::max) / 2.0;
    let mut grow = 0;
    while setup.water_mass(hi) < target {
        hi *= 2.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::BisectionFailed {
                iterations: grow,
                residual: target - setup.water_mass(hi),
            });
        }
    }

    let mut xi = hi;
    let mut residual = setup.water_mass(xi) - target;
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = setup.water_mass(mid) - target;
        if m.abs() < residual.abs() {
            xi = mid;
            residual = m;
        }
        if m == 0.0 {
            break;
        }
        if m < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if residual.abs() > tol {
        return Err(Error::BisectionFailed {
            iterations: MAX_BISECTION_ITERS,
            residual,
        });
    }

    // Polish: on a fixed active set the mass is affine in 1/(2ξ).
    let on: Vec<f64> = d2.iter().copied().filter(|&x| xi > x / 2.0).collect();
    if !on.is_empty() {
        let inv_sum: f64 = on.iter().map(|x| 1.0 / x).sum();
        let half_inv = (inv_sum - target) / on.len() as f64;
        if half_inv > 0.0 {
            let exact = 1.0 / (2.0 * half_inv);
            let same_set = d2.iter().all(|&x| (exact > x / 2.0) == (xi > x / 2.0));
            if same_set && (setup.water_mass(exact) - target).abs() <= residual.abs() {
                return Ok(exact);
            }
        }
    }
    Ok(xi)
}

/// Successfully solved curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub rate: f64,
    pub xi: f64,
    pub active_count: usize,
    pub zero_rate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub delta: f64,
    pub outcome: std::result::Result<CurveSample, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdfCurve {
    pub lower: f64,
    pub upper: f64,
    pub points: Vec<CurvePoint>,
}

impl RdfCurve {
    /// Rates of the points that solved, paired with their distortions.
    pub fn solved(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|s| (p.delta, s.rate)))
            .collect()
    }
}

/// Evaluate `R(Δ)` on an ascending grid. Points are solved independently and in parallel.
pub fn rdf_curve(spec: &GaussianSourceSpec, grid: &[f64]) -> Result<RdfCurve> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.windows(2).any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt())) {
        return Err(Error::UnsortedGrid);
    }
    let stats = conditional_stats(spec)?;
    let setup = spectral_setup(&stats)?;
    let (lower, upper) = distortion_range(&setup);
    let points = grid
        .par_iter()
        .map(|&delta| CurvePoint {
            delta,
            outcome: solve_waterfill(&setup, delta).map(|s| CurveSample {
                rate: s.rate,
                xi: s.xi,
                active_count: s.active_count,
                zero_rate: s.zero_rate,
            }),
        })
        .collect();
    Ok(RdfCurve {
        lower,
        upper,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::gaussian::Dims;

    fn setup_of(spec: &GaussianSourceSpec) -> SpectralSetup {
        spectral_setup(&conditional_stats(spec).unwrap()).unwrap()
    }

    #[test]
    fn scalar_spectral_setup() {
        let setup = setup_of(&fixtures::scalar_example());
        assert!((setup.q_matrix[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((setup.d[0] - 2.0).abs() < 1e-15);
        let (lo, hi) = distortion_range(&setup);
        assert!((lo - 0.25).abs() < 1e-15);
        assert!((hi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wyner_spectral_setup() {
        let q = 1.0;
        let setup = setup_of(&fixtures::wyner_spec(q, 0.7));
        assert!((setup.d[0] * setup.d[0] - 1.0 / q).abs() < 1e-14);
        let (lo, hi) = distortion_range(&setup);
        assert!(lo.abs() < 1e-14);
        assert!((hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_spectral_setup() {
        let spec = fixtures::diagonal_example();
        let setup = setup_of(&spec);
        assert!((setup.d[0] - 2.0).abs() < 1e-14);
        assert!((setup.d[1] - 4.0).abs() < 1e-14);
        let (lo, _) = distortion_range(&setup);
        assert!((lo - (setup.trace() - 0.3125)).abs() < 1e-14);
        let recon = &setup.v
            * DMatrix::from_diagonal(&DVector::from_vec(setup.d.clone()))
            * setup.u.transpose();
        assert!((recon - &setup.q_matrix).norm() < 1e-10);
        let i = DMatrix::<f64>::identity(2, 2);
        assert!((&setup.u * setup.u.transpose() - &i).norm() < 1e-10);
        assert!((&setup.v * setup.v.transpose() - &i).norm() < 1e-10);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let q = DMatrix::identity(3, 3);
        let spec = crate::gaussian::validate_spec(q, Dims::new(1, 1, 1)).unwrap();
        let err = spectral_setup(&conditional_stats(&spec).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::HypothesisViolated {
                hypothesis: Hypothesis::InvertibleCross,
                ..
            }
        ));
        let spec =
            crate::gaussian::validate_spec(DMatrix::identity(4, 4), Dims::new(1, 2, 1)).unwrap();
        let err = spectral_setup(&conditional_stats(&spec).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::HypothesisViolated {
                hypothesis: Hypothesis::SquareCross,
                ..
            }
        ));
    }

    #[test]
    fn scalar_waterfill() {
        let setup = setup_of(&fixtures::scalar_example());
        let sol = solve_waterfill(&setup, 0.375).unwrap();
        assert!((sol.lambda[0] - 0.125).abs() < 1e-14);
        assert!((sol.lambda[0] * 4.0 - 0.5).abs() < 1e-14);
        assert!((sol.rate - 0.5 * 2f64.ln()).abs() < 1e-14);
        assert!((sol.sigma_delta[(0, 0)] - 0.375).abs() < 1e-14);
        assert!(!sol.zero_rate);
    }

    #[test]
    fn upper_boundary_and_beyond() {
        let setup = setup_of(&fixtures::scalar_example());
        let sol = solve_waterfill(&setup, 0.5).unwrap();
        assert_eq!(sol.rate, 0.0);
        assert_eq!(sol.lambda, vec![0.0]);
        assert!(sol.zero_rate);
        let sol = solve_waterfill(&setup, 0.9).unwrap();
        assert_eq!(sol.rate, 0.0);
        assert!(sol.zero_rate);
    }

    #[test]
    fn lower_boundary() {
        let setup = setup_of(&fixtures::scalar_example());
        let (lo, _) = distortion_range(&setup);
        assert!(matches!(
            solve_waterfill(&setup, lo),
            Err(Error::BelowRange {
                at_boundary: true,
                ..
            })
        ));
        assert!(matches!(
            solve_waterfill(&setup, 0.1),
            Err(Error::BelowRange {
                at_boundary: false,
                ..
            })
        ));
    }

    #[test]
    fn wyner_value() {
        let setup = setup_of(&fixtures::wyner_spec(1.0, 0.3));
        let sol = solve_waterfill(&setup, 0.25).unwrap();
        assert!((sol.rate - 0.5 * 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn scalar_curve() {
        let spec = fixtures::scalar_example();
        let curve = rdf_curve(&spec, &[0.3, 0.375, 0.45, 0.5]).unwrap();
        let rates: Vec<f64> = curve.solved().iter().map(|p| p.1).collect();
        assert_eq!(rates.len(), 4);
        assert!(rates.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*rates.last().unwrap(), 0.0);

        let curve = rdf_curve(&spec, &[0.25 + 1e-6]).unwrap();
        assert!(curve.solved()[0].1 > 5.0);

        let curve = rdf_curve(&spec, &[0.2, 0.4]).unwrap();
        assert_eq!(
            curve.points[0].outcome.as_ref().unwrap_err().code(),
            "below_range"
        );
        assert!(curve.points[1].outcome.is_ok());

        assert_eq!(
            rdf_curve(&spec, &[0.4, 0.3]).unwrap_err(),
            Error::UnsortedGrid
        );
        assert_eq!(rdf_curve(&spec, &[]).unwrap_err(), Error::EmptyGrid);
    }

    #[test]
    fn parallel_curve_matches_sequential() {
        let spec = fixtures::diagonal_example();
        let setup = setup_of(&spec);
        let (lo, hi) = distortion_range(&setup);
        let grid: Vec<f64> = (1..=64).map(|k| lo + (hi - lo) * k as f64 / 64.0).collect();
        let curve = rdf_curve(&spec, &grid).unwrap();
        for p in &curve.points {
            let seq = solve_waterfill(&setup, p.delta).unwrap();
            let s = p.outcome.as_ref().unwrap();
            assert_eq!(s.rate.to_bits(), seq.rate.to_bits());
            assert_eq!(s.xi.to_bits(), seq.xi.to_bits());
        }
    }

    #[test]
    fn random_instances_keep_invariants() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..60 {
            let n = 1 + trial % 3;
            let spec = fixtures::random_feasible_spec(&mut rng, n, 1 + trial % 2);
            let setup = setup_of(&spec);
            let (lo, hi) = distortion_range(&setup);
            let tol = setup.water_tolerance();
            for k in 1..=20 {
                let delta = lo + (hi - lo) * k as f64 / 20.0;
                let sol = solve_waterfill(&setup, delta).unwrap();
                let mass: f64 = sol.lambda.iter().sum();
                assert!((mass - (hi - delta)).abs() <= tol);
                for (i, (&l, &d)) in sol.lambda.iter().zip(&sol.d).enumerate() {
                    assert!(l >= 0.0 && l * d * d <= 1.0);
                    assert_eq!(l > 0.0, sol.xi > d * d / 2.0, "component {i}");
                }
                assert!(sol.lambda.windows(2).all(|w| w[0] >= w[1]));
                let psd = crate::gaussian::psd_tolerance(&setup.q_x_given_y);
                assert!(min_eigenvalue(&sol.sigma_delta) >= -psd);
            }
        }
    }

    #[test]
    fn water_mass_is_monotone() {
        let setup = setup_of(&fixtures::diagonal_example());
        let mut prev = 0.0;
        for k in 0..500 {
            let xi = 0.5 * 1.02f64.powi(k);
            let m = setup.water_mass(xi);
            assert!(m >= prev);
            prev = m;
        }
    }
}

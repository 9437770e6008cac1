//! Independent reference values.
//!
//! [`brute_force_rdf`] minimizes the determinant-ratio objective over a grid
//! of reproduction covariances without any spectral reduction; the scalar
//! closed forms cover the degenerate cases `X = S` (with and without useful
//! side information). [`prior_channel_discrepancy`] tabulates the scalar
//! auxiliary channel `Z = X + N`, `var N = Δ/(q - Δ)`, used in earlier work
//! against the Wyner channel `Z = H·X + W`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{conditional_stats, eigenvalues, svd, GaussianSourceSpec, INV_TOL};

/// Grid density of the brute-force search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleResolution {
    /// Points on each eigenvalue axis, spanning `[0, λ_max(Q_{X|Y})]`.
    pub eigen_points: usize,
    /// Rotation angles in `[0, π/2)` (two-dimensional case only).
    pub angle_points: usize,
    /// Local zoom rounds around the best grid point (two-dimensional case only).
    pub refine_rounds: usize,
}

impl Default for OracleResolution {
    fn default() -> Self {
        OracleResolution {
            eigen_points: 400,
            angle_points: 180,
            refine_rounds: 6,
        }
    }
}

impl OracleResolution {
    pub fn with_eigen_points(eigen_points: usize) -> Self {
        OracleResolution {
            eigen_points,
            ..Default::default()
        }
    }

    /// Agreement tolerance (nats) expected between the grid minimum and the exact infimum.
    pub fn tolerance(&self) -> f64 {
        0.8 / self.eigen_points.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Grid,
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Nats; `f64::INFINITY` when nothing feasible has finite rate.
    pub rate: f64,
    /// Minimizing distortion covariance `Q_{X|Y} - Q_{X̂|Y}`.
    pub sigma_delta: DMatrix<f64>,
    /// Minimizing reproduction covariance `Q_{X̂|Y}`.
    pub reproduction: DMatrix<f64>,
    /// `(θ, a, b)` of the minimizer; scalar case uses `(0, a, 0)`.
    pub params: [f64; 3],
    pub method: OracleMethod,
    pub feasible_points: usize,
    pub resolution: Option<OracleResolution>,
}

/// Best grid point so far, ordered by rate then by lexicographic grid index.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    rate: f64,
    index: (usize, usize, usize),
    params: [f64; 3],
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if (a.rate, a.index) <= (b.rate, b.index) {
                Some(a)
            } else {
                Some(b)
            }
        }
    }
}

/// Smallest eigenvalue of a symmetric 2×2 `[[p, r], [r, s]]`.
fn min_eig2(p: f64, r: f64, s: f64) -> f64 {
    0.5 * (p + s - ((p - s) * (p - s) + 4.0 * r * r).sqrt())
}

/// Per-axis points of each local refinement round.
const REFINE_POINTS: usize = 16;
/// Window shrink factor between refinement rounds.
const REFINE_SHRINK: f64 = 0.25;

/// Two-dimensional feasibility and rate evaluation for `A = R(θ) diag(a, b) R(θ)ᵀ`.
struct Pair2<'a> {
    qx: &'a DMatrix<f64>,
    qs: &'a DMatrix<f64>,
    c: &'a DMatrix<f64>,
    det_qs: f64,
    required: f64,
    eps: f64,
}

impl Pair2<'_> {
    fn rate(&self, theta: f64, a: f64, b: f64) -> Option<f64> {
        let (qx, qs, c) = (self.qx, self.qs, self.c);
        if a < 0.0 || b < 0.0 || a + b < self.required - self.eps {
            return None;
        }
        let (sn, cs) = theta.sin_cos();
        let a00 = a * cs * cs + b * sn * sn;
        let a11 = a * sn * sn + b * cs * cs;
        let a01 = (a - b) * cs * sn;
        let e00 = qx[(0, 0)] - a00;
        let e11 = qx[(1, 1)] - a11;
        let e01 = qx[(0, 1)] - a01;
        if min_eig2(e00, e01, e11) < -self.eps {
            return None;
        }
        // K = Q_{S|Y} - C A Cᵀ
        let ca00 = c[(0, 0)] * a00 + c[(0, 1)] * a01;
        let ca01 = c[(0, 0)] * a01 + c[(0, 1)] * a11;
        let ca10 = c[(1, 0)] * a00 + c[(1, 1)] * a01;
        let ca11 = c[(1, 0)] * a01 + c[(1, 1)] * a11;
        let k00 = qs[(0, 0)] - (ca00 * c[(0, 0)] + ca01 * c[(0, 1)]);
        let k01 = qs[(0, 1)] - (ca00 * c[(1, 0)] + ca01 * c[(1, 1)]);
        let k11 = qs[(1, 1)] - (ca10 * c[(1, 0)] + ca11 * c[(1, 1)]);
        let det_k = k00 * k11 - k01 * k01;
        if min_eig2(k00, k01, k11) <= 0.0 || det_k <= 0.0 {
            return None;
        }
        Some(0.5 * (self.det_qs / det_k).ln())
    }

    /// Best point of a local grid around `center`, including the trace boundary for `b`.
    fn zoom(&self, center: [f64; 3], half: [f64; 3], tag: usize) -> Option<Candidate> {
        let step = |axis: usize, i: usize| {
            center[axis] + half[axis] * (2.0 * i as f64 / REFINE_POINTS as f64 - 1.0)
        };
        (0..=REFINE_POINTS)
            .into_par_iter()
            .map(|k| {
                let theta = step(0, k);
                let mut best = None;
                for i in 0..=REFINE_POINTS {
                    let a = step(1, i);
                    let bs = (0..=REFINE_POINTS)
                        .map(|j| step(2, j))
                        .chain([self.required - a]);
                    for (j, b) in bs.enumerate() {
                        if let Some(rate) = self.rate(theta, a, b) {
                            let cand = Candidate {
                                rate,
                                index: (tag, k * (REFINE_POINTS + 1) + i, j),
                                params: [theta, a, b],
                            };
                            best = better(best, Some(cand));
                        }
                    }
                }
                best
            })
            .reduce(|| None, better)
    }
}

pub fn brute_force_rdf(
    spec: &GaussianSourceSpec,
    delta: f64,
    resolution: OracleResolution,
) -> Result<OracleResult> {
    let dims = spec.dims();
    if dims.n_x != dims.n_s || dims.n_x > 2 {
        return Err(Error::DimensionUnsupported {
            n_x: dims.n_x,
            n_s: dims.n_s,
        });
    }
    let stats = conditional_stats(spec)?;
    let sv = svd(&stats.q_xs_given_y).singular_values;
    if sv.min() <= INV_TOL * sv.max().max(1.0) {
        return Err(Error::SingularCross {
            min_singular_value: sv.min(),
        });
    }
    let cross_inv = stats
        .q_xs_given_y
        .clone()
        .try_inverse()
        .ok_or(Error::SingularCross {
            min_singular_value: sv.min(),
        })?;
    // With H = A Q_{X,S|Y}^{-T}:  Q_{S|Y} Hᵀ A^† H Q_{S|Y} = C A Cᵀ,  C = Q_{S|Y} Q_{X,S|Y}^{-1}.
    let c = &stats.q_s_given_y * cross_inv;
    let qx = &stats.q_x_given_y;
    let qs = &stats.q_s_given_y;
    let required = qx.trace() - delta;
    let a_max = eigenvalues(qx).max();
    let eps = 1e-12 * qx.trace().max(1.0);
    let n_grid = resolution.eigen_points.max(2);
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| a_max * i as f64 / (n_grid - 1) as f64)
        .collect();

    let (best, feasible) = if dims.n_x == 1 {
        let (qx, qs, c) = (qx[(0, 0)], qs[(0, 0)], c[(0, 0)]);
        let mut best = None;
        let mut feasible = 0;
        let boundary = (0.0..=a_max).contains(&required).then_some(required);
        for (i, a) in grid.iter().copied().map(Some).chain([boundary]).enumerate() {
            let Some(a) = a else { continue };
            if a < required - eps || a > qx + eps {
                continue;
            }
            let k = qs - c * c * a;
            if k <= 0.0 {
                continue;
            }
            feasible += 1;
            let cand = Candidate {
                rate: 0.5 * (qs / k).ln(),
                index: (0, i, 0),
                params: [0.0, a, 0.0],
            };
            best = better(best, Some(cand));
        }
        (best, feasible)
    } else {
        let ctx = Pair2 {
            qx,
            qs,
            c: &c,
            det_qs: qs.determinant(),
            required,
            eps,
        };
        let m_angles = resolution.angle_points.max(1);
        let (coarse, feasible) = (0..m_angles)
            .into_par_iter()
            .map(|k| {
                let theta = FRAC_PI_2 * k as f64 / m_angles as f64;
                let mut best = None;
                let mut feasible = 0usize;
                for (i, &a) in grid.iter().enumerate() {
                    let boundary = required - a;
                    let extra = (0.0..=a_max).contains(&boundary).then_some(boundary);
                    for (j, b) in grid.iter().copied().map(Some).chain([extra]).enumerate() {
                        let Some(b) = b else { continue };
                        if let Some(rate) = ctx.rate(theta, a, b) {
                            feasible += 1;
                            let cand = Candidate {
                                rate,
                                index: (k, i, j),
                                params: [theta, a, b],
                            };
                            best = better(best, Some(cand));
                        }
                    }
                }
                (best, feasible)
            })
            .reduce(|| (None, 0), |x, y| (better(x.0, y.0), x.1 + y.1));

        let mut best = coarse;
        if feasible >= 10 {
            let mut half = [
                2.0 * FRAC_PI_2 / m_angles as f64,
                2.0 * a_max / (n_grid - 1) as f64,
                2.0 * a_max / (n_grid - 1) as f64,
            ];
            for round in 0..resolution.refine_rounds {
                let center = best.expect("feasible points exist").params;
                let local = ctx.zoom(center, half, m_angles + round);
                best = better(best, local);
                half = half.map(|h| h * REFINE_SHRINK);
            }
        }
        (best, feasible)
    };

    if feasible < 10 {
        return Err(Error::ResolutionTooCoarse {
            feasible_points: feasible,
        });
    }
    let best = best.expect("feasible points exist");
    let [theta, a, b] = best.params;
    let reproduction = if dims.n_x == 1 {
        DMatrix::from_element(1, 1, a)
    } else {
        let (sn, cs) = theta.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
        &r * DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b]) * r.transpose()
    };
    Ok(OracleResult {
        rate: best.rate.max(0.0),
        sigma_delta: qx - &reproduction,
        reproduction,
        params: best.params,
        method: OracleMethod::Grid,
        feasible_points: feasible,
        resolution: Some(resolution),
    })
}

/// Wyner's scalar side-information rate-distortion function and test channel `Z = H·X + W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WynerRdf {
    pub rate: f64,
    /// `H = (q - Δ)/q`, clamped at 0.
    pub gain: f64,
    /// `Q_W = H·Δ`.
    pub noise_variance: f64,
}

pub fn wyner_scalar_rdf(q_x_given_y: f64, delta: f64) -> WynerRdf {
    assert!(q_x_given_y > 0.0, "conditional variance must be positive");
    assert!(delta > 0.0, "distortion must be positive");
    if delta >= q_x_given_y {
        return WynerRdf {
            rate: 0.0,
            gain: 0.0,
            noise_variance: 0.0,
        };
    }
    let gain = (q_x_given_y - delta) / q_x_given_y;
    WynerRdf {
        rate: 0.5 * (q_x_given_y / delta).ln(),
        gain,
        noise_variance: gain * delta,
    }
}

impl WynerRdf {
    pub fn to_oracle_result(&self, q_x_given_y: f64) -> OracleResult {
        let repro = self.gain * q_x_given_y;
        OracleResult {
            rate: self.rate,
            sigma_delta: DMatrix::from_element(1, 1, q_x_given_y - repro),
            reproduction: DMatrix::from_element(1, 1, repro),
            params: [0.0, repro, 0.0],
            method: OracleMethod::ClosedForm,
            feasible_points: 1,
            resolution: None,
        }
    }
}

/// Classical Gaussian rate-distortion function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalRdf {
    pub rate: f64,
    /// `max(0, q - Δ)`.
    pub reproduction_variance: f64,
}

pub fn classical_scalar_rdf(q_x: f64, delta: f64) -> ClassicalRdf {
    assert!(q_x >= 0.0, "variance must be non-negative");
    assert!(delta > 0.0, "distortion must be positive");
    if delta >= q_x {
        return ClassicalRdf {
            rate: 0.0,
            reproduction_variance: 0.0,
        };
    }
    ClassicalRdf {
        rate: 0.5 * (q_x / delta).ln(),
        reproduction_variance: q_x - delta,
    }
}

/// Ratio above which the prior channel's noise is flagged as divergent.
pub const DIVERGENCE_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyRow {
    pub delta: f64,
    /// `Δ/(q - Δ)`; infinite at `Δ = q`.
    pub prior_noise_variance: f64,
    /// `q + Δ/(q - Δ)`, the variance of `Z = X + N` when `Y` is uninformative.
    pub prior_z_variance: f64,
    pub wyner_gain: f64,
    pub wyner_noise_variance: f64,
    /// `H²·q + H·Δ`.
    pub wyner_z_variance: f64,
    /// Prior noise variance exceeds `DIVERGENCE_RATIO` times the Wyner `Z` variance.
    pub divergent: bool,
}

pub fn prior_channel_discrepancy(q_x_given_y: f64, grid: &[f64]) -> Vec<DiscrepancyRow> {
    grid.iter()
        .map(|&delta| {
            let prior = if delta >= q_x_given_y {
                f64::INFINITY
            } else {
                delta / (q_x_given_y - delta)
            };
            let w = wyner_scalar_rdf(q_x_given_y, delta);
            let wyner_z = w.gain * w.gain * q_x_given_y + w.noise_variance;
            DiscrepancyRow {
                delta,
                prior_noise_variance: prior,
                prior_z_variance: q_x_given_y + prior,
                wyner_gain: w.gain,
                wyner_noise_variance: w.noise_variance,
                wyner_z_variance: wyner_z,
                divergent: prior > DIVERGENCE_RATIO * wyner_z,
            }
        })
        .collect()
}

//! Covariance algebra for the jointly Gaussian triple `(X, S, Y)`.
//!
//! `X` is the source, `S` the encoder's measurement and `Y` the decoder's
//! side information. The joint covariance is stored in that block order.
//! Everything here is a pure function of its inputs.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative symmetry tolerance, scaled by `‖Q‖_F`.
pub const SYM_REL_TOL: f64 = 1e-9;
/// Relative PSD tolerance, scaled by `max(λ_max, 1)`.
pub const PSD_REL_TOL: f64 = 1e-9;
/// Absolute threshold on the smallest eigenvalue of `Q_Y`.
pub const INV_TOL: f64 = 1e-10;
/// Relative singular-value cutoff for pseudoinverses and ranks.
pub const RANK_TOL: f64 = 1e-12;

/// Block dimensions of the joint vector `(X, S, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_x: usize,
    pub n_s: usize,
    pub n_y: usize,
}

impl Dims {
    pub fn new(n_x: usize, n_s: usize, n_y: usize) -> Self {
        Dims { n_x, n_s, n_y }
    }

    pub fn total(&self) -> usize {
        self.n_x + self.n_s + self.n_y
    }

    pub fn x(&self) -> Range<usize> {
        0..self.n_x
    }

    pub fn s(&self) -> Range<usize> {
        self.n_x..self.n_x + self.n_s
    }

    pub fn y(&self) -> Range<usize> {
        self.n_x + self.n_s..self.total()
    }
}

/// A validated joint covariance `Q_{(X,S,Y)}`.
#[derive(Debug, Clone)]
pub struct GaussianSourceSpec {
    dims: Dims,
    q: DMatrix<f64>,
    symmetry_residual: f64,
}

impl GaussianSourceSpec {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `‖Q - Qᵀ‖_F` of the raw input, before symmetrization.
    pub fn symmetry_residual(&self) -> f64 {
        self.symmetry_residual
    }

    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
        self.q
            .view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    pub fn q_x(&self) -> DMatrix<f64> {
        self.block(self.dims.x(), self.dims.x())
    }

    pub fn q_s(&self) -> DMatrix<f64> {
        self.block(self.dims.s(), self.dims.s())
    }

    pub fn q_y(&self) -> DMatrix<f64> {
        self.block(self.dims.y(), self.dims.y())
    }

    pub fn q_xs(&self) -> DMatrix<f64> {
        self.block(self.dims.x(), self.dims.s())
    }

    pub fn q_xy(&self) -> DMatrix<f64> {
        self.block(self.dims.x(), self.dims.y())
    }

    pub fn q_sy(&self) -> DMatrix<f64> {
        self.block(self.dims.s(), self.dims.y())
    }

    /// Largest diagonal entry of `Q`; used to make residual thresholds scale-free.
    pub fn scale(&self) -> f64 {
        self.q.diagonal().max()
    }
}

/// Schur-complement covariances and linear predictors derived from a spec.
#[derive(Debug, Clone)]
pub struct ConditionalStats {
    /// `Q_{X|Y}`
    pub q_x_given_y: DMatrix<f64>,
    /// `Q_{S|Y}`
    pub q_s_given_y: DMatrix<f64>,
    /// `Q_{X,S|Y}` (n_x × n_s)
    pub q_xs_given_y: DMatrix<f64>,
    /// `Q_{X|S,Y}`
    pub q_x_given_sy: DMatrix<f64>,
    /// `P_{X|Y} = Q_{X,Y} Q_Y^{-1}`
    pub gain_x_given_y: DMatrix<f64>,
    /// `P_{S|Y} = Q_{S,Y} Q_Y^{-1}`
    pub gain_s_given_y: DMatrix<f64>,
}

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `PSD_REL_TOL · max(λ_max, 1)` for a symmetric matrix.
pub fn psd_tolerance(m: &DMatrix<f64>) -> f64 {
    let lmax = if m.is_empty() {
        0.0
    } else {
        eigenvalues(m).max()
    };
    PSD_REL_TOL * lmax.max(1.0)
}

/// Eigenvalues of the symmetric part of `m`.
pub fn eigenvalues(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    SymmetricEigen::new(symmetrize(m)).eigenvalues
}

/// Smallest eigenvalue of the symmetric part of `m` (`+∞` for an empty matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    eigenvalues(m).min()
}

pub fn validate_spec(raw: DMatrix<f64>, dims: Dims) -> Result<GaussianSourceSpec> {
    if dims.n_x == 0 || dims.n_s == 0 || dims.n_y == 0 {
        return Err(Error::Dimension(format!(
            "block dimensions must be positive, got ({}, {}, {})",
            dims.n_x, dims.n_s, dims.n_y
        )));
    }
    let n = dims.total();
    if raw.nrows() != n || raw.ncols() != n {
        return Err(Error::Dimension(format!(
            "expected a {n}x{n} covariance for dims ({}, {}, {}), got {}x{}",
            dims.n_x,
            dims.n_s,
            dims.n_y,
            raw.nrows(),
            raw.ncols()
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }

    let residual = (&raw - raw.transpose()).norm();
    let sym_tol = SYM_REL_TOL * raw.norm();
    if residual > sym_tol {
        return Err(Error::NotSymmetric {
            residual,
            tolerance: sym_tol,
        });
    }
    let q = symmetrize(&raw);

    let eig = eigenvalues(&q);
    let psd_tol = PSD_REL_TOL * eig.max().max(1.0);
    if eig.min() < -psd_tol {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
            tolerance: psd_tol,
        });
    }

    let spec = GaussianSourceSpec {
        dims,
        q,
        symmetry_residual: residual,
    };
    let qy_min = min_eigenvalue(&spec.q_y());
    if qy_min <= INV_TOL {
        return Err(Error::SingularY {
            min_eigenvalue: qy_min,
        });
    }
    Ok(spec)
}

pub fn conditional_stats(spec: &GaussianSourceSpec) -> Result<ConditionalStats> {
    let q_y = spec.q_y();
    let chol = q_y.clone().cholesky().ok_or_else(|| Error::SingularY {
        min_eigenvalue: min_eigenvalue(&q_y),
    })?;

    let q_xy = spec.q_xy();
    let q_sy = spec.q_sy();
    // Q_Y^{-1} Q_{Y,X}, transposed below into the predictor gain.
    let gain_x_given_y = chol.solve(&q_xy.transpose()).transpose();
    let gain_s_given_y = chol.solve(&q_sy.transpose()).transpose();

    let q_x_given_y = symmetrize(&(spec.q_x() - &gain_x_given_y * q_xy.transpose()));
    let q_s_given_y = symmetrize(&(spec.q_s() - &gain_s_given_y * q_sy.transpose()));
    let q_xs_given_y = spec.q_xs() - &gain_x_given_y * q_sy.transpose();

    let q_x_given_sy = symmetrize(
        &(&q_x_given_y
            - &q_xs_given_y * pseudo_inverse(&q_s_given_y, RANK_TOL) * q_xs_given_y.transpose()),
    );

    Ok(ConditionalStats {
        q_x_given_y,
        q_s_given_y,
        q_xs_given_y,
        q_x_given_sy,
        gain_x_given_y,
        gain_s_given_y,
    })
}

/// Unique symmetric PSD square root.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let tol = PSD_REL_TOL * eig.eigenvalues.max().max(1.0);
    let min = eig.eigenvalues.min();
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tolerance: tol,
        });
    }
    let roots = eig
        .eigenvalues
        .map(|l| if l < tol { 0.0 } else { l.sqrt() });
    let v = &eig.eigenvectors;
    Ok(symmetrize(
        &(v * DMatrix::from_diagonal(&roots) * v.transpose()),
    ))
}

/// Moore–Penrose pseudoinverse; singular values below `rank_tol · σ_max` are dropped.
pub fn pseudo_inverse(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = svd(m);
    let smax = svd.singular_values.max();
    let mut out = DMatrix::zeros(c, r);
    if smax <= 0.0 {
        return out;
    }
    let cut = rank_tol * smax;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += (svd.v.column(k) * svd.u.column(k).transpose()) / s;
        }
    }
    out
}

/// Thin singular value decomposition `M = U diag(s) Vᵀ`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

const JACOBI_SWEEPS: usize = 80;

/// One-sided Jacobi SVD.
///
/// nalgebra's bidiagonal SVD can lose accuracy on nearly degenerate spectra,
/// so all decompositions in this crate go through here. `U` is completed to
/// orthonormal columns when `M` is rank deficient.
pub fn svd(m: &DMatrix<f64>) -> Svd {
    let (r, c) = m.shape();
    if r < c {
        let t = svd(&m.transpose());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(c, c);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut a, p, q, cs, sn);
                rotate_columns(&mut v, p, q, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..c).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms.iter().cloned().fold(0.0, f64::max);

    let mut u = DMatrix::zeros(r, c);
    let mut vs = DMatrix::zeros(c, c);
    let mut singular = DVector::zeros(c);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        singular[k] = norms[j];
        vs.set_column(k, &v.column(j));
        if norms[j] > f64::EPSILON * smax && norms[j] > 0.0 {
            u.set_column(k, &(a.column(j) / norms[j]));
        } else {
            deficient.push(k);
        }
    }
    complete_orthonormal(&mut u, &deficient);
    Svd {
        u,
        singular_values: singular,
        v: vs,
    }
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, cs: f64, sn: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = cs * x - sn * y;
        m[(i, q)] = sn * x + cs * y;
    }
}

fn complete_orthonormal(u: &mut DMatrix<f64>, missing: &[usize]) {
    let n = u.nrows();
    let mut candidate = 0;
    for &k in missing {
        while candidate < n {
            let mut e = DVector::zeros(n);
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.ncols() {
                    if j != k {
                        let proj = u.column(j).dot(&e);
                        e -= u.column(j) * proj;
                    }
                }
            }
            let norm = e.norm();
            if norm > 1e-6 {
                u.set_column(k, &(e / norm));
                break;
            }
        }
    }
}

/// `½·log(det Q_prior / det Q_posterior)` in nats, restricted to the range of `Q_prior`.
///
/// Returns `f64::INFINITY` when the posterior is singular on that range.
pub fn gaussian_cmi(prior: &DMatrix<f64>, posterior: &DMatrix<f64>) -> Result<f64> {
    if prior.shape() != posterior.shape() || !prior.is_square() {
        return Err(Error::Dimension(format!(
            "prior {:?} and posterior {:?} must be equal-size square matrices",
            prior.shape(),
            posterior.shape()
        )));
    }
    if prior.is_empty() {
        return Ok(0.0);
    }
    let prior = symmetrize(prior);
    let posterior = symmetrize(posterior);

    let gap = min_eigenvalue(&(&prior - &posterior));
    let tol = psd_tolerance(&prior);
    if gap < -tol {
        return Err(Error::NotNested {
            min_eigenvalue: gap,
        });
    }

    let eig = SymmetricEigen::new(prior);
    let lmax = eig.eigenvalues.max();
    if lmax <= 0.0 {
        return Ok(0.0);
    }
    let cut = RANK_TOL * lmax;
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > cut)
        .collect();
    let basis = eig.eigenvectors.select_columns(&keep);

    let log_det_prior: f64 = keep.iter().map(|&i| eig.eigenvalues[i].ln()).sum();
    let restricted = symmetrize(&(basis.transpose() * &posterior * &basis));
    let post_eig = eigenvalues(&restricted);
    if post_eig.iter().any(|&l| l <= cut) {
        return Ok(f64::INFINITY);
    }
    let log_det_post: f64 = post_eig.iter().map(|l| l.ln()).sum();
    Ok((0.5 * (log_det_prior - log_det_post)).max(0.0))
}

/// Submatrix on arbitrary row/column index sets.
pub(crate) fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `cov(A, B | G)` from a joint covariance, via the pseudoinverse of `cov(G)`.
pub(crate) fn partial_covariance(
    joint: &DMatrix<f64>,
    a: &[usize],
    b: &[usize],
    given: &[usize],
) -> DMatrix<f64> {
    let ab = select(joint, a, b);
    if given.is_empty() {
        return ab;
    }
    let ag = select(joint, a, given);
    let gg = select(joint, given, given);
    let gb = select(joint, given, b);
    ab - ag * pseudo_inverse(&gg, RANK_TOL) * gb
}

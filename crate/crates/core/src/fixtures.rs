//! Reference sources used by tests, the acceptance suite and the CLI examples.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::gaussian::{
    conditional_stats, eigenvalues, svd, validate_spec, Dims, GaussianSourceSpec,
};
use crate::waterfill::spectral_setup;

/// Scalar source with rows `[1, 1, 1]`, `[1, 1.5, 1]`, `[1, 1, 2]`:
/// `Q_{X|Y} = 0.5`, `Q_{S|Y} = 1`, `Q_{X,S|Y} = 0.5`.
pub fn scalar_example() -> GaussianSourceSpec {
    let q = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 1.5, 1.0, 1.0, 1.0, 2.0]);
    validate_spec(q, Dims::new(1, 1, 1)).expect("valid fixture")
}

/// Build `Q_{(X,S,Y)}` from conditional covariances given `Y` and linear
/// dependence `X = X₀ + a·Y`, `S = S₀ + b·Y` with `(X₀, S₀)` independent of `Y`.
pub fn spec_from_conditionals(
    q_x_given_y: &DMatrix<f64>,
    q_s_given_y: &DMatrix<f64>,
    q_xs_given_y: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q_y: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (n_x, n_s, n_y) = (q_x_given_y.nrows(), q_s_given_y.nrows(), q_y.nrows());
    let n = n_x + n_s + n_y;
    let mut q = DMatrix::zeros(n, n);
    let xs = q_xs_given_y + a * q_y * b.transpose();
    q.view_mut((0, 0), (n_x, n_x))
        .copy_from(&(q_x_given_y + a * q_y * a.transpose()));
    q.view_mut((n_x, n_x), (n_s, n_s))
        .copy_from(&(q_s_given_y + b * q_y * b.transpose()));
    q.view_mut((n_x + n_s, n_x + n_s), (n_y, n_y))
        .copy_from(q_y);
    q.view_mut((0, n_x), (n_x, n_s)).copy_from(&xs);
    q.view_mut((n_x, 0), (n_s, n_x)).copy_from(&xs.transpose());
    let ay = a * q_y;
    let by = b * q_y;
    q.view_mut((0, n_x + n_s), (n_x, n_y)).copy_from(&ay);
    q.view_mut((n_x + n_s, 0), (n_y, n_x))
        .copy_from(&ay.transpose());
    q.view_mut((n_x, n_x + n_s), (n_s, n_y)).copy_from(&by);
    q.view_mut((n_x + n_s, n_x), (n_y, n_s))
        .copy_from(&by.transpose());
    q
}

/// `X = S` almost surely with `Q_{X|Y} = q`; `Y` enters with gain `side_gain`.
pub fn wyner_spec(q: f64, side_gain: f64) -> GaussianSourceSpec {
    let c = DMatrix::from_element(1, 1, q);
    let g = DMatrix::from_element(1, 1, side_gain);
    let raw = spec_from_conditionals(&c, &c, &c, &g, &g, &DMatrix::from_element(1, 1, 1.0));
    validate_spec(raw, Dims::new(1, 1, 1)).expect("valid fixture")
}

/// `X = S` almost surely with variance `q`, independent of `Y`.
pub fn classical_spec(q: f64) -> GaussianSourceSpec {
    wyner_spec(q, 0.0)
}

/// Two-dimensional source with `Q_{S|Y} = I`, `Q_{X,S|Y} = diag(0.5, 0.25)`,
/// `Q_{X|Y} = diag(0.5, 0.25)` and a scalar side-information channel.
pub fn diagonal_example() -> GaussianSourceSpec {
    let diag = |a: f64, b: f64| DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b]);
    let raw = spec_from_conditionals(
        &diag(0.5, 0.25),
        &DMatrix::identity(2, 2),
        &diag(0.5, 0.25),
        &DMatrix::from_column_slice(2, 1, &[0.3, -0.2]),
        &DMatrix::from_column_slice(2, 1, &[0.5, 0.1]),
        &DMatrix::from_element(1, 1, 1.5),
    );
    validate_spec(raw, Dims::new(2, 2, 1)).expect("valid fixture")
}

/// Random source with `n_x = n_s = n`, normalized to unit max diagonal,
/// condition number at most 1e4, and satisfying the spectral-reduction hypotheses.
pub fn random_feasible_spec<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    n_y: usize,
) -> GaussianSourceSpec {
    let total = 2 * n + n_y;
    loop {
        let l = DMatrix::from_fn(total, total, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut q = &l * l.transpose() + DMatrix::identity(total, total) * 0.05;
        let scale = q.diagonal().max();
        q /= scale;
        let eig = eigenvalues(&q);
        if eig.max() / eig.min() > 1e4 {
            continue;
        }
        let Ok(spec) = validate_spec(q, Dims::new(n, n, n_y)) else {
            continue;
        };
        let Ok(stats) = conditional_stats(&spec) else {
            continue;
        };
        let sv = svd(&stats.q_xs_given_y).singular_values;
        if sv.min() < 1e-2 * sv.max() {
            continue;
        }
        if spectral_setup(&stats).is_ok() {
            return spec;
        }
    }
}

//! Conditional rate-distortion functions for jointly Gaussian sources observed
//! remotely at the encoder, with side information at the decoder.
//!
//! The source `X` is seen only through a measurement `S` at the encoder; the
//! decoder also has `Y`. Distortion is mean squared error. The crate covers
//!
//! - [`gaussian`]: covariance validation, Schur complements, PSD roots,
//!   pseudoinverses and Gaussian conditional mutual information;
//! - [`channel`]: synthesis of the linear test channel for a distortion
//!   covariance, its decoder-only split, structural checks and simulation;
//! - [`waterfill`]: the spectral reduction and water-filling evaluation of
//!   `R(Δ)` over the achievable distortion range;
//! - [`oracle`]: brute-force and closed-form reference values.
//!
//! All rates are in nats.
//!
//! ```
//! use remote_rdf::{conditional_stats, fixtures, solve_waterfill, spectral_setup};
//!
//! let spec = fixtures::scalar_example();
//! let setup = spectral_setup(&conditional_stats(&spec).unwrap()).unwrap();
//! let sol = solve_waterfill(&setup, 0.375).unwrap();
//! assert!((sol.rate - 0.5 * 2f64.ln()).abs() < 1e-12);
//! ```

pub mod channel;
pub mod error;
pub mod fixtures;
pub mod gaussian;
pub mod oracle;
pub mod waterfill;

pub use channel::{
    analytic_distortion, build_channel, decoder_only_form, rate_of_channel, simulate_channel,
    verify_structure, ChannelRate, DecoderOnlyForm, SimulationSummary, StructuralReport,
    TestChannel, STRUCT_TOL,
};
pub use error::{Error, Hypothesis, Result};
pub use gaussian::{
    conditional_stats, gaussian_cmi, pseudo_inverse, svd, symmetric_sqrt, validate_spec,
    ConditionalStats, Dims, GaussianSourceSpec, Svd, RANK_TOL,
};
pub use oracle::{
    brute_force_rdf, classical_scalar_rdf, prior_channel_discrepancy, wyner_scalar_rdf,
    OracleResolution, OracleResult,
};
pub use waterfill::{
    distortion_range, rdf_curve, solve_waterfill, spectral_setup, RdfCurve, SpectralSetup,
    WaterfillSolution,
};

/// Convert nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

//! Simulation of rank-one-spiked Gaussian random matrices: spectral phase
//! transitions, closed-form limit predictors, and box-constrained gradient
//! descent recovery of the planted signal, with a reproducible Monte-Carlo
//! harness.
//!
//! The data model is `X = lambda * x1 x1^T + G` with `x1` a unit vector
//! supported on a small block and `G` drawn from the Gaussian Orthogonal
//! Ensemble scaled so the bulk spectrum fills `[-2, 2]`. Everything is
//! deterministic per [`Seed`]; Monte-Carlo trials run on independent
//! sub-streams so results do not depend on the worker count.

pub mod eig;
pub mod error;
pub mod experiments;
pub mod io;
pub mod matgen;
pub mod recover;
pub mod spectral;

pub use eig::{
    full_spectrum, full_spectrum_capped, leading_eigenpair, leading_eigenpair_seeded, overlap,
    sign_align, EigenPair, Spectrum,
};
pub use error::{Error, Result};
pub use matgen::{
    assemble_spiked, make_signal_block, sample_goe, sample_spiked_covariance, CovarianceModel,
    Seed, SignalVector, SymmetricMatrix,
};
pub use recover::{
    gd_step, init_iterate, project_box_sphere, relative_error, run_descent, PenaltyVariant,
    RecoveryConfig, RecoveryResult,
};
pub use spectral::{
    bbp_covariance_prediction, bbp_wigner_prediction, esd_of, inverse_semicircle_stieltjes,
    ks_distance_to_semicircle, secular_largest_root, semicircle_cdf, semicircle_density,
    semicircle_stieltjes, CovariancePrediction, Esd, WeightedSpectralMeasure, WignerPrediction,
};

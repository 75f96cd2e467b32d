//! Gaussian-mixture estimators and detectors.

pub mod covariance;
pub mod estimators;
pub mod family;
pub mod model;

pub use covariance::{CovarianceJson, CovarianceSpec};
pub use estimators::{
    cov_y, dts, lmmse, log_likelihoods, map_detect, mmse, posterior, psi, psi_detect, softmax_log_domain,
    stationary_lmmse_fft, tdc_gap, Analysis, GapEstimate, SeparationResult,
};
pub use family::{CovarianceShape, ModelFamily};
pub use model::{Backend, ComputePath, MixtureModel, MixtureModelJson, ModelOptions};

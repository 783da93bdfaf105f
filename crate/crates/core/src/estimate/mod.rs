//! Executing recovery plans on data.
//!
//! [`discrete`] performs the exact weighted-sum adjustment on count tables;
//! [`continuous`] performs the binned kernel-density version on samples and
//! provides the closed-form linear-Gaussian ground truth.

pub mod continuous;
pub mod discrete;

pub use continuous::{
    density_of_gaussian, gaussian_kde, recover_continuous, recover_continuous_opts,
    recover_continuous_two_covariates, silverman_bandwidth, theoretical_gaussian, BandwidthPolicy,
    ContinuousRecovery, DensityError, GaussianSpec, GridSpec, GriddedDensity, RecoverDiagnostics,
    RecoverOptions,
};
pub use discrete::{biased_discrete, recover_discrete, relative_error, DiscreteTable, EstimateError};

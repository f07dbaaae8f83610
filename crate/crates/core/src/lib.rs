//! Inference for spectral projectors of high-dimensional covariance operators.
//!
//! The crate is organised bottom-up:
//!
//! - [`operator`]: dense symmetric operators, norms, spectral decomposition
//!   with eigenvalue clustering, effective rank and the variance functionals
//!   `A_r`, `B_r`.
//! - [`perturbation`]: the operator `C_r`, the linear term `L_r(E)`, the
//!   resolvent series for the remainder `S_r(E)` and empirical projectors
//!   matched to a known cluster.
//! - [`estimators`]: sample covariance, sample-split bias estimators,
//!   bias-corrected eigenvectors, studentized pivots and confidence intervals.
//! - [`limit`]: the symmetric two-component Cauchy mixture `Y(α, β)` and the
//!   standard normal CDF.
//! - [`simulation`]: ground-truth covariance models, Gaussian sampling, a
//!   seeded parallel trial runner and Kolmogorov–Smirnov based verification.
//! - [`cli`]: JSON run configuration and the command implementations behind
//!   the `spectral-pivot` binary.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod estimators;
pub mod limit;
pub mod operator;
pub mod perturbation;
pub mod simulation;

pub use error::{Error, Result};
pub use estimators::{Interval, PivotSet};
pub use limit::CauchyMixture;
pub use operator::{Eigenspace, SpectralData, SymOperator};
pub use perturbation::{EmpiricalProjector, PerturbationSplit, SeriesConfig};

//! Norm-weighted linear regression for predictors with thick tails.
//!
//! Each observation enters the normal equations through the bounded
//! instrument `G_j = X_j/‖X_j‖₂`, so `β̂ = S_GX⁻¹ S_GY` stays well behaved
//! when the predictor has no finite variance. Standard errors come from a
//! sandwich whose meat drops rows with extreme predictors.
//!
//! - [`estimator`], [`covariance`]: the estimator, least squares, and their sandwiches.
//! - [`quantile`]: the norm-weighted check-loss fit with kernel standard errors.
//! - [`simlab`]: Student-t designs, pivot replications, Cramér-von Mises scoring.
//! - [`finlab`]: weekly returns, rolling betas, high/low beta portfolios.
//! - [`cli`]: the `normreg` command line.

pub mod cli;
pub mod covariance;
pub mod design;
pub mod error;
pub mod estimator;
pub mod finlab;
mod linalg;
pub mod quantile;
mod serde_f64;
pub mod simlab;
pub mod stats;

//! Sandwich covariances for the two linear estimators.
//!
//! The norm-weighted covariance is `(1/n)·S_GX⁻¹·S_clip·S_GX⁻¹` with
//! `S_clip = (1/n) Σ w_j Û_j² G_j G_jᵀ`. The weight `w_j` drops rows whose
//! largest scaled predictor `|x_{j,i}|/ĉ_i` reaches `d·n^exponent`, which
//! keeps the meat consistent even when the predictors have infinite
//! variance. Least squares uses the classic White form with no
//! degrees-of-freedom correction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::estimator::{gram_gx, gram_xx, FitResult};
use crate::linalg::{checked_inverse, sandwich};

/// Clipping rule for the norm-weighted covariance meat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipPolicy {
    /// `f64::INFINITY` disables clipping.
    #[serde(with = "crate::serde_f64")]
    pub d: f64,
    pub exponent: f64,
    /// Per-predictor reference scales `ĉ_i`. `None` means the mean absolute
    /// centered deviation of each predictor column, computed from the design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<f64>>,
}

impl Default for ClipPolicy {
    fn default() -> Self {
        Self {
            d: 10.0,
            exponent: 0.2,
            scale: None,
        }
    }
}

impl ClipPolicy {
    pub fn new(d: f64, exponent: f64) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::InvalidInput(format!("clip constant d must be positive, got {d}")));
        }
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidInput(format!(
                "clip exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self {
            d,
            exponent,
            scale: None,
        })
    }

    /// A policy that never clips (`d = ∞`).
    pub fn disabled() -> Self {
        Self {
            d: f64::INFINITY,
            ..Self::default()
        }
    }

    /// `t_n = d·n^exponent`.
    pub fn threshold(&self, n: usize) -> f64 {
        self.d * (n as f64).powf(self.exponent)
    }

    /// Reference scales, either the configured ones or `(1/n) Σ |x_{j,i}|`
    /// over the centered predictor columns.
    pub fn scales(&self, des: &Design) -> Vec<f64> {
        if let Some(s) = &self.scale {
            return s.clone();
        }
        let off = des.predictor_offset();
        let n = des.n() as f64;
        (off..des.k())
            .map(|i| des.x.column(i).iter().map(|v| v.abs()).sum::<f64>() / n)
            .collect()
    }

    /// Inclusion flag per observation; the intercept column never clips.
    pub fn weights(&self, des: &Design) -> Vec<bool> {
        let scales = self.scales(des);
        let threshold = self.threshold(des.n());
        let off = des.predictor_offset();
        (0..des.n())
            .map(|j| {
                let ratio = scales
                    .iter()
                    .enumerate()
                    .map(|(i, c)| des.x[(j, i + off)].abs() / c)
                    .fold(0.0_f64, f64::max);
                ratio < threshold
            })
            .collect()
    }
}

/// Clipped meat `(1/n) Σ w_j Û_j² G_j G_jᵀ` and the number of dropped rows.
pub fn clipped_meat(des: &Design, residuals: &DVector<f64>, clip: &ClipPolicy) -> (DMatrix<f64>, usize) {
    let k = des.k();
    let keep = clip.weights(des);
    let mut meat = DMatrix::<f64>::zeros(k, k);
    let mut clipped = 0;
    for (j, &kept) in keep.iter().enumerate() {
        if !kept {
            clipped += 1;
            continue;
        }
        let gj = des.g.row(j).transpose();
        meat.ger(residuals[j] * residuals[j], &gj, &gj, 1.0);
    }
    (meat / des.n() as f64, clipped)
}

/// Covariance of the norm-weighted estimator and the clip count.
pub fn cov_norm_weighted(des: &Design, fit: &FitResult, clip: &ClipPolicy) -> Result<(DMatrix<f64>, usize)> {
    let bread_inv = checked_inverse(&gram_gx(des), "S_GX")?;
    let (meat, clipped) = clipped_meat(des, &fit.residuals, clip);
    Ok((sandwich(&bread_inv, &meat, des.n()), clipped))
}

/// Eicker–Huber–White covariance `(1/n) S_XX⁻¹ S_{Û²X,X} S_XX⁻¹`.
pub fn cov_least_squares(des: &Design, fit: &FitResult) -> Result<DMatrix<f64>> {
    let k = des.k();
    let bread_inv = checked_inverse(&gram_xx(des), "S_XX")?;
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for j in 0..des.n() {
        let xj = des.x.row(j).transpose();
        let u = fit.residuals[j];
        meat.ger(u * u, &xj, &xj, 1.0);
    }
    meat /= des.n() as f64;
    Ok(sandwich(&bread_inv, &meat, des.n()))
}

/// Exact conditional variances for one predictor with intercept, given the
/// per-observation noise variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondVariances {
    pub nw_intercept: f64,
    pub nw_slope: f64,
    pub ls_intercept: f64,
    pub ls_slope: f64,
}

pub fn cond_variance_formulas_p1(des: &Design, sigma2: &[f64]) -> Result<CondVariances> {
    if !des.intercept || des.k() != 2 {
        return Err(Error::InvalidInput(
            "closed-form variances need one predictor plus intercept".into(),
        ));
    }
    let n = des.n();
    if sigma2.len() != n {
        return Err(Error::InvalidInput("one noise variance per observation required".into()));
    }
    if sigma2.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput("noise variances must be positive".into()));
    }
    let dz: Vec<f64> = des.x.column(1).iter().copied().collect(); // Z_j − Z̄
    let inv_root: Vec<f64> = dz.iter().map(|d| 1.0 / (1.0 + d * d).sqrt()).collect();
    let inv_sum: f64 = inv_root.iter().sum();
    let w: Vec<f64> = inv_root.iter().map(|r| r / inv_sum).collect();
    let shift: f64 = w.iter().zip(&dz).map(|(a, b)| a * b).sum(); // Z̃ − Z̄
    let dt: Vec<f64> = dz.iter().map(|d| d - shift).collect(); // Z_j − Z̃

    let denom: f64 = dt.iter().zip(&inv_root).map(|(d, r)| d * d * r).sum();
    let nw_slope = dt
        .iter()
        .zip(&dz)
        .zip(sigma2)
        .map(|((t, z), s)| t * t * s / (1.0 + z * z))
        .sum::<f64>()
        / (denom * denom);
    let nw_intercept = (0..n)
        .map(|j| {
            let w_prime = dt[j] * inv_root[j] / denom;
            let lambda = w[j] - shift * w_prime;
            sigma2[j] * lambda * lambda
        })
        .sum();

    let ss: f64 = dz.iter().map(|d| d * d).sum();
    let ls_slope = dz.iter().zip(sigma2).map(|(d, s)| d * d * s).sum::<f64>() / (ss * ss);
    let ls_intercept = sigma2.iter().sum::<f64>() / (n * n) as f64;
    Ok(CondVariances {
        nw_intercept,
        nw_slope,
        ls_intercept,
        ls_slope,
    })
}

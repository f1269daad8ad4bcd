//! Median and general-τ predictive regression.
//!
//! The estimator minimises `Σ ‖X_j‖₂⁻¹ ρ_τ(y_j − X_jᵀb)`, which is plain
//! check-loss regression on the rescaled data `y*_j = y_j/‖X_j‖₂`,
//! `X*_j = G_j`. Inference uses the sandwich
//! `(1/n) D̂⁻¹ M̂ D̂⁻ᵀ` with `M̂ = S_GG` and a rectangular-kernel
//! estimate `D̂ = (1/(n h)) Σ G_j X_jᵀ 1{|Û_j| < h}`.

mod solver;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, sandwich, to_rows};

/// Iteration budget for the vertex-descent solver.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// The check function `ρ_τ(u) = u(τ − 1{u<0})`.
pub fn check_fn(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Rescales each row by `1/‖X_j‖₂`. Rows of zero norm map to zero.
pub fn preprocess(des: &Design, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let y_star = DVector::from_fn(des.n(), |j, _| {
        let r = des.row_norm[j];
        if r > 0.0 {
            y[j] / r
        } else {
            0.0
        }
    });
    (y_star, des.g.clone())
}

/// `Σ_j ‖X_j‖₂⁻¹ ρ_τ(y_j − X_jᵀb)` evaluated directly on the design.
pub fn objective(des: &Design, y: &DVector<f64>, b: &DVector<f64>, tau: f64) -> f64 {
    (0..des.n())
        .filter(|&j| des.row_norm[j] > 0.0)
        .map(|j| check_fn(y[j] - des.x.row(j).transpose().dot(b), tau) / des.row_norm[j])
        .sum()
}

/// Which matrix sits in the middle of the median sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiddleMatrix {
    /// `S_GG = (1/n) Σ G_j G_jᵀ`, the variance of the score.
    #[default]
    Gg,
    /// `S_GX = (1/n) Σ G_j X_jᵀ`, as written in some presentations.
    Gx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    pub tau: f64,
    pub beta: DVector<f64>,
    /// `y_j − X_jᵀβ̂` on the original scale.
    pub residuals: DVector<f64>,
    /// Attained value of the weighted check loss.
    pub objective: f64,
    pub iterations: usize,
    /// Sup-norm of the subgradient that certifies optimality.
    pub certificate: f64,
    pub cov: Option<DMatrix<f64>>,
    pub se: Option<DVector<f64>>,
    pub bandwidth: Option<f64>,
    pub in_band_count: usize,
}

impl QuantileFit {
    pub fn attach_covariance(&mut self, cov: DMatrix<f64>, bandwidth: f64) {
        self.in_band_count = in_band(&self.residuals, bandwidth);
        self.se = Some(DVector::from_fn(cov.nrows(), |i, _| cov[(i, i)].max(0.0).sqrt()));
        self.cov = Some(cov);
        self.bandwidth = Some(bandwidth);
    }

    pub fn report(&self) -> Option<QuantileReport> {
        Some(QuantileReport {
            beta: self.beta.iter().copied().collect(),
            se: self.se.as_ref()?.iter().copied().collect(),
            cov: to_rows(self.cov.as_ref()?),
            tau: self.tau,
            bandwidth: self.bandwidth?,
            in_band_count: self.in_band_count,
            objective: self.objective,
        })
    }
}

/// JSON shape of a quantile fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileReport {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub tau: f64,
    pub bandwidth: f64,
    pub in_band_count: usize,
    pub objective: f64,
}

fn in_band(residuals: &DVector<f64>, h: f64) -> usize {
    residuals.iter().filter(|u| u.abs() < h).count()
}

/// Minimises the norm-weighted check loss at quantile level `tau`.
pub fn fit_quantile(des: &Design, y: &DVector<f64>, tau: f64) -> Result<QuantileFit> {
    fit_quantile_with_budget(des, y, tau, DEFAULT_MAX_ITER)
}

pub fn fit_quantile_with_budget(des: &Design, y: &DVector<f64>, tau: f64, max_iter: usize) -> Result<QuantileFit> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidInput(format!("tau must lie in (0, 1), got {tau}")));
    }
    if y.len() != des.n() {
        return Err(Error::InvalidInput("outcome and design differ in length".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "outcome" });
    }
    let (y_star, x_star) = preprocess(des, y);
    let sol = solver::solve(&x_star, &y_star, tau, max_iter)?;
    let residuals = y - &des.x * &sol.beta;
    let objective = objective(des, y, &sol.beta, tau);
    Ok(QuantileFit {
        tau,
        beta: sol.beta,
        residuals,
        objective,
        iterations: sol.iterations,
        certificate: sol.certificate,
        cov: None,
        se: None,
        bandwidth: None,
        in_band_count: 0,
    })
}

/// Rectangular-kernel sandwich covariance for a quantile fit.
pub fn cov_median(des: &Design, qf: &QuantileFit, h: f64, middle: MiddleMatrix) -> Result<DMatrix<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    let n = des.n();
    let k = des.k();
    let required = k - des.predictor_offset() + 2;
    let count = in_band(&qf.residuals, h);
    if count < required {
        return Err(Error::EmptyBand {
            in_band: count,
            required,
        });
    }
    let d_hat = kernel_jacobian(des, &qf.residuals, h);
    let mid = match middle {
        MiddleMatrix::Gg => des.g.tr_mul(&des.g) / n as f64,
        MiddleMatrix::Gx => des.g.tr_mul(&des.x) / n as f64,
    };
    let d_inv = checked_inverse(&d_hat, "D_1")?;
    Ok(sandwich(&d_inv, &mid, n))
}

/// `(1/(n h)) Σ G_j X_jᵀ 1{|u_j| < h}`, the kernel estimate of the score Jacobian.
pub fn kernel_jacobian(des: &Design, residuals: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = des.n();
    let k = des.k();
    let mut d_hat = DMatrix::<f64>::zeros(k, k);
    for j in 0..n {
        if residuals[j].abs() < h {
            let g = des.g.row(j).transpose();
            let x = des.x.row(j).transpose();
            d_hat.ger(1.0, &g, &x, 1.0);
        }
    }
    d_hat / (n as f64 * h)
}

/// Robust-scale bandwidth `MAD/0.6745 · n^{-1/5}`, floored at the
/// `2(p+2)`-th smallest absolute residual so the band is never empty.
pub fn default_bandwidth(residuals: &DVector<f64>, p: usize) -> Result<f64> {
    let n = residuals.len();
    if n < 10 {
        return Err(Error::InvalidInput(format!("bandwidth needs n >= 10, got {n}")));
    }
    let values: Vec<f64> = residuals.iter().copied().collect();
    let med = median(&values);
    let abs_dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&abs_dev);
    let h = mad / 0.6745 * (n as f64).powf(-0.2);
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let floor = abs[(2 * (p + 2)).min(n) - 1];
    Ok(h.max(floor))
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Fit plus covariance with the default bandwidth.
pub fn fit_quantile_with_cov(des: &Design, y: &DVector<f64>, tau: f64, bandwidth: Option<f64>, middle: MiddleMatrix) -> Result<QuantileFit> {
    let mut qf = fit_quantile(des, y, tau)?;
    let h = match bandwidth {
        Some(h) => h,
        None => default_bandwidth(&qf.residuals, des.k() - des.predictor_offset())?,
    };
    let cov = cov_median(des, &qf, h, middle)?;
    qf.attach_covariance(cov, h);
    Ok(qf)
}

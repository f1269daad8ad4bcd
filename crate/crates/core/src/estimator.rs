//! Point estimators: the norm-weighted estimator `β̂ = S_GX⁻¹ S_GY`, its
//! least-squares baseline, and the scalar sign estimator they reduce to.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::linalg::{checked_solve, to_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    NormWeighted,
    LeastSquares,
}

/// Coefficients and residuals of a fit, plus the covariance once attached.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Element 0 is the intercept when the design has one.
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub estimator_kind: EstimatorKind,
    pub cov: Option<DMatrix<f64>>,
    pub se: Option<DVector<f64>>,
    /// Observations excluded from the covariance meat by the clipping weight.
    pub clip_count: usize,
}

impl FitResult {
    fn new(beta: DVector<f64>, des: &Design, y: &DVector<f64>, kind: EstimatorKind) -> Self {
        let residuals = y - &des.x * &beta;
        Self {
            beta,
            residuals,
            estimator_kind: kind,
            cov: None,
            se: None,
            clip_count: 0,
        }
    }

    /// Stores `cov` and the standard errors derived from its diagonal.
    pub fn attach_covariance(&mut self, cov: DMatrix<f64>, clip_count: usize) {
        let se = DVector::from_fn(cov.nrows(), |i, _| cov[(i, i)].max(0.0).sqrt());
        self.cov = Some(cov);
        self.se = Some(se);
        self.clip_count = clip_count;
    }

    /// Standard error of coefficient `i`, if a covariance has been attached.
    pub fn se_of(&self, i: usize) -> Option<f64> {
        self.se.as_ref().map(|se| se[i])
    }

    /// Flat serializable view. Requires an attached covariance.
    pub fn report(&self) -> Option<FitReport> {
        let cov = self.cov.as_ref()?;
        let se = self.se.as_ref()?;
        Some(FitReport {
            beta: self.beta.iter().copied().collect(),
            se: se.iter().copied().collect(),
            cov: to_rows(cov),
            clip_count: self.clip_count,
            estimator_kind: self.estimator_kind,
        })
    }
}

/// JSON shape of a fitted linear predictive regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub clip_count: usize,
    pub estimator_kind: EstimatorKind,
}

fn check_outcome(des: &Design, y: &DVector<f64>) -> Result<()> {
    if y.len() != des.n() {
        return Err(Error::InvalidInput(format!(
            "outcome has {} rows, design has {}",
            y.len(),
            des.n()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "outcome" });
    }
    Ok(())
}

/// `S_GX = (1/n) Σ G_j X_jᵀ`.
pub fn gram_gx(des: &Design) -> DMatrix<f64> {
    des.g.tr_mul(&des.x) / des.n() as f64
}

/// `S_XX = (1/n) Σ X_j X_jᵀ`.
pub fn gram_xx(des: &Design) -> DMatrix<f64> {
    des.x.tr_mul(&des.x) / des.n() as f64
}

/// Norm-weighted estimator: solves `S_GX β = S_GY`, i.e. weighted least
/// squares with weights `‖X_j‖₂⁻¹`.
pub fn fit_norm_weighted(des: &Design, y: &DVector<f64>) -> Result<FitResult> {
    check_outcome(des, y)?;
    let n = des.n() as f64;
    let s_gx = gram_gx(des);
    let s_gy = des.g.tr_mul(y) / n;
    let beta = checked_solve(&s_gx, &s_gy, "S_GX")?;
    Ok(FitResult::new(beta, des, y, EstimatorKind::NormWeighted))
}

/// Ordinary least squares on the same centered design.
pub fn fit_least_squares(des: &Design, y: &DVector<f64>) -> Result<FitResult> {
    check_outcome(des, y)?;
    let n = des.n() as f64;
    let s_xx = gram_xx(des);
    let s_xy = des.x.tr_mul(y) / n;
    let beta = checked_solve(&s_xx, &s_xy, "S_XX")?;
    Ok(FitResult::new(beta, des, y, EstimatorKind::LeastSquares))
}

/// `Σ sign(x_j) y_j / Σ |x_j|` with `sign(0) = 0`.
pub fn scalar_sign_estimate(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y differ in length".into()));
    }
    let denom: f64 = x.iter().map(|v| v.abs()).sum();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let num: f64 = x
        .iter()
        .zip(y)
        .map(|(&xj, &yj)| if xj == 0.0 { 0.0 } else { xj.signum() * yj })
        .sum();
    Ok(num / denom)
}

/// The norm-weighted fit written through weighted averages.
#[derive(Debug, Clone, PartialEq)]
pub struct Unpacked {
    pub beta0: f64,
    pub slopes: DVector<f64>,
    /// `w_j = ‖X_j‖⁻¹ / Σ ‖X_i‖⁻¹`.
    pub weights: DVector<f64>,
    /// `Ỹ = Σ w_j Y_j`.
    pub y_tilde: f64,
    /// `Z̃ = Σ w_j Z_j` on the original (uncentered) predictor scale.
    pub z_tilde: DVector<f64>,
}

impl Unpacked {
    pub fn beta(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.slopes.len() + 1);
        b[0] = self.beta0;
        b.rows_mut(1, self.slopes.len()).copy_from(&self.slopes);
        b
    }
}

/// Computes the slopes from the `w`-weighted scatter of `Z − Z̃` and the
/// intercept as `Ỹ − (Z̃ − Z̄)ᵀ β̂_{1:p}`.
pub fn unpack_weighted(des: &Design, y: &DVector<f64>) -> Result<Unpacked> {
    check_outcome(des, y)?;
    if !des.intercept {
        return Err(Error::InvalidInput("unpacking needs a design with intercept".into()));
    }
    let n = des.n();
    let p = des.k() - 1;
    let inv_norm = des.row_norm.map(|r| 1.0 / r);
    let weights = &inv_norm / inv_norm.sum();
    let y_tilde = weights.dot(y);

    // Z_j − Z̄ are the centered columns of x.
    let centered = des.x.columns(1, p);
    let shift: DVector<f64> = centered.tr_mul(&weights); // Z̃ − Z̄

    let mut scatter = DMatrix::<f64>::zeros(p, p);
    let mut cross = DVector::<f64>::zeros(p);
    for j in 0..n {
        let dz: DVector<f64> = centered.row(j).transpose() - &shift;
        let dy = y[j] - y_tilde;
        scatter.ger(weights[j], &dz, &dz, 1.0);
        cross.axpy(weights[j] * dy, &dz, 1.0);
    }
    let slopes = checked_solve(&scatter, &cross, "weighted scatter")?;
    let beta0 = y_tilde - shift.dot(&slopes);
    Ok(Unpacked {
        beta0,
        slopes,
        weights,
        y_tilde,
        z_tilde: &des.psi_hat + shift,
    })
}

/// Approximate pivot `(β̂ − β₀)/SE`.
pub fn pivot(beta_hat: f64, beta_null: f64, se: f64) -> Result<f64> {
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::ZeroSE(se));
    }
    Ok((beta_hat - beta_null) / se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_design, build_design_no_intercept, Dataset};

    fn linear(a: f64, b: f64, z: &[f64]) -> Dataset {
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let y: Vec<f64> = z.iter().map(|v| a + b * (v - mean)).collect();
        Dataset::univariate(&y, z).unwrap()
    }

    #[test]
    fn exact_linear_data_is_a_fixed_point() {
        let ds = linear(0.7, -1.3, &[0.1, 4.0, -2.5, 9.0, 3.3]);
        let des = build_design(&ds).unwrap();
        for fit in [
            fit_norm_weighted(&des, &ds.y).unwrap(),
            fit_least_squares(&des, &ds.y).unwrap(),
        ] {
            assert!((fit.beta[0] - 0.7).abs() < 1e-10);
            assert!((fit.beta[1] + 1.3).abs() < 1e-10);
            assert!(fit.residuals.amax() < 1e-10);
        }
    }

    #[test]
    fn sign_estimator_examples() {
        assert_eq!(scalar_sign_estimate(&[1.0, -2.0, 3.0], &[2.0, -4.0, 6.0]).unwrap(), 2.0);
        let v = scalar_sign_estimate(&[1.0, -2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        for c in [-3.0, 0.0, 17.5] {
            assert_eq!(scalar_sign_estimate(&[-1.0, 1.0], &[c, c]).unwrap(), 0.0);
        }
        assert!(matches!(
            scalar_sign_estimate(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::ZeroDenominator)
        ));
        // sign(0) = 0: a zero predictor contributes to neither sum
        assert_eq!(scalar_sign_estimate(&[0.0, 2.0], &[5.0, 4.0]).unwrap(), 2.0);
    }

    #[test]
    fn no_intercept_fit_is_sign_estimator() {
        let z = [0.3, -1.2, 2.2, 5.0, -0.4, 1.9];
        let y = [1.0, -2.0, 0.5, 3.0, 0.2, -0.7];
        let ds = Dataset::univariate(&y, &z).unwrap();
        let des = build_design_no_intercept(&ds).unwrap();
        let fit = fit_norm_weighted(&des, &ds.y).unwrap();
        let xc: Vec<f64> = des.x.column(0).iter().copied().collect();
        let oracle = scalar_sign_estimate(&xc, &y).unwrap();
        assert!((fit.beta[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn least_squares_slope_textbook_identity() {
        let z = [1.0, 2.0, 4.0, 7.0, 11.0];
        let y = [2.0, 1.0, 5.0, 4.0, 9.0];
        let ds = Dataset::univariate(&y, &z).unwrap();
        let des = build_design(&ds).unwrap();
        let fit = fit_least_squares(&des, &ds.y).unwrap();
        let zbar = z.iter().sum::<f64>() / 5.0;
        let num: f64 = z.iter().zip(&y).map(|(a, b)| (a - zbar) * b).sum();
        let den: f64 = z.iter().map(|a| (a - zbar).powi(2)).sum();
        assert!((fit.beta[1] - num / den).abs() < 1e-12);
        assert!((fit.beta[0] - y.iter().sum::<f64>() / 5.0).abs() < 1e-12);
        // residuals orthogonal to the design columns
        let ortho = des.x.tr_mul(&fit.residuals);
        assert!(ortho.amax() < 1e-9);
    }

    #[test]
    fn norm_weighted_minimizes_weighted_squares() {
        let ds = Dataset::univariate(&[1.0, 0.0, 2.0, 3.0, -1.0], &[0.0, 1.0, 2.0, 5.0, -3.0]).unwrap();
        let des = build_design(&ds).unwrap();
        let fit = fit_norm_weighted(&des, &ds.y).unwrap();
        let objective = |b: &DVector<f64>| -> f64 {
            (0..des.n())
                .map(|j| 0.5 / des.row_norm[j] * (ds.y[j] - des.x.row(j).dot(&b.transpose())).powi(2))
                .sum()
        };
        let best = objective(&fit.beta);
        for (d0, d1) in [(1e-4, 0.0), (-1e-4, 0.0), (0.0, 1e-4), (0.0, -1e-4), (1e-3, -1e-3)] {
            let b = &fit.beta + DVector::from_vec(vec![d0, d1]);
            assert!(objective(&b) > best);
        }
    }

    #[test]
    fn unpacking_with_equal_norms_is_plain_least_squares() {
        // symmetric two-point design: every |z_j − z̄| equals 1
        let z = [-1.0, 1.0, -1.0, 1.0, 1.0, -1.0];
        let y = [0.3, 2.0, -0.5, 1.1, 1.7, 0.2];
        let ds = Dataset::univariate(&y, &z).unwrap();
        let des = build_design(&ds).unwrap();
        let un = unpack_weighted(&des, &ds.y).unwrap();
        for w in un.weights.iter() {
            assert!((w - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((un.y_tilde - y.iter().sum::<f64>() / 6.0).abs() < 1e-14);
        assert!(un.z_tilde[0].abs() < 1e-15);
        let ls = fit_least_squares(&des, &ds.y).unwrap();
        assert!((un.beta() - ls.beta).amax() < 1e-12);
    }

    #[test]
    fn pivot_arithmetic() {
        assert_eq!(pivot(1.0, 1.0, 0.5).unwrap(), 0.0);
        assert!((pivot(2.0, 1.4, 0.2).unwrap() - 3.0).abs() < 1e-12);
        assert!((pivot(0.5, 0.8, 0.15).unwrap() + 2.0).abs() < 1e-12);
        assert!(matches!(pivot(1.0, 0.0, 0.0), Err(Error::ZeroSE(_))));
        assert!(matches!(pivot(1.0, 0.0, -1.0), Err(Error::ZeroSE(_))));
    }

    #[test]
    fn report_needs_covariance() {
        let ds = linear(1.0, 2.0, &[1.0, 2.0, 3.0, 5.0]);
        let des = build_design(&ds).unwrap();
        let mut fit = fit_least_squares(&des, &ds.y).unwrap();
        assert!(fit.report().is_none());
        fit.attach_covariance(DMatrix::identity(2, 2) * 4.0, 0);
        let rep = fit.report().unwrap();
        assert_eq!(rep.se, vec![2.0, 2.0]);
        let json = serde_json::to_value(&rep).unwrap();
        for key in ["beta", "se", "cov", "clip_count", "estimator_kind"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}

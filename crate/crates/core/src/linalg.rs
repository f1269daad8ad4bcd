//! Small dense helpers shared by the estimators.
//!
//! Every system solved here is `(p+1)×(p+1)`, so the condition number is
//! taken from a full SVD rather than an estimate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Systems whose 2-norm condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub(crate) fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a small square matrix, refusing ill-conditioned input.
pub(crate) fn checked_inverse(a: &DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>> {
    let condition = condition_number(a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularGram { which, condition });
    }
    a.clone()
        .try_inverse()
        .ok_or(Error::SingularGram { which, condition })
}

pub(crate) fn checked_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    which: &'static str,
) -> Result<DVector<f64>> {
    let condition = condition_number(a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularGram { which, condition });
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularGram { which, condition })
}

/// `(1/n) · bread · meat · breadᵀ`, symmetrised to remove rounding asymmetry.
pub(crate) fn sandwich(bread_inv: &DMatrix<f64>, meat: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let raw = bread_inv * meat * bread_inv.transpose() / n as f64;
    symmetrize(raw)
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

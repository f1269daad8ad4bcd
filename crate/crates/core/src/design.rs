//! Raw samples and the centered regression design built from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Outcome vector plus `n×p` predictor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DVector<f64>,
    pub z: DMatrix<f64>,
}

impl Dataset {
    /// Checks shapes and finiteness. Constant predictor columns are caught
    /// later by [`build_design`].
    pub fn new(y: DVector<f64>, z: DMatrix<f64>) -> Result<Self> {
        if y.len() != z.nrows() {
            return Err(Error::InvalidInput(format!(
                "outcome has {} rows but predictors have {}",
                y.len(),
                z.nrows()
            )));
        }
        if z.ncols() == 0 {
            return Err(Error::InvalidInput("at least one predictor is required".into()));
        }
        if y.len() < z.ncols() + 2 {
            return Err(Error::InvalidInput(format!(
                "need n >= p + 2 observations, got n = {} with p = {}",
                y.len(),
                z.ncols()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "outcome" });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "predictors" });
        }
        Ok(Self { y, z })
    }

    /// Convenience constructor for a single predictor.
    pub fn univariate(y: &[f64], z: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(y),
            DMatrix::from_column_slice(z.len(), 1, z),
        )
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }
}

/// Centered design `X_j = (1, (z_j − ψ̂)ᵀ)ᵀ` together with the row norms and
/// the bounded instruments `G_j = X_j/‖X_j‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    /// Column means of the predictors.
    pub psi_hat: DVector<f64>,
    /// `n×(p+1)` with a leading column of ones (or `n×p` without intercept).
    pub x: DMatrix<f64>,
    pub row_norm: DVector<f64>,
    pub g: DMatrix<f64>,
    pub intercept: bool,
}

impl Design {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of coefficients (`p + 1` with intercept).
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Columns of `x` that carry predictors, i.e. everything but the intercept.
    pub fn predictor_offset(&self) -> usize {
        usize::from(self.intercept)
    }

    /// Builds a design from explicit rows. Row norms and instruments are
    /// derived from `x`; rows of zero norm get a zero instrument.
    pub fn from_rows(x: DMatrix<f64>, psi_hat: DVector<f64>, intercept: bool) -> Self {
        let (row_norm, g) = instruments(&x);
        Self {
            psi_hat,
            x,
            row_norm,
            g,
            intercept,
        }
    }
}

fn instruments(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let row_norm = DVector::from_fn(n, |j, _| x.row(j).norm());
    let mut g = x.clone();
    for j in 0..n {
        let norm = row_norm[j];
        if norm > 0.0 {
            g.row_mut(j).scale_mut(1.0 / norm);
        } else {
            g.row_mut(j).fill(0.0);
        }
    }
    (row_norm, g)
}

fn centered_predictors(ds: &Dataset) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = ds.n();
    let p = ds.p();
    let mut psi = DVector::zeros(p);
    let mut centered = DMatrix::zeros(n, p);
    for i in 0..p {
        let col = ds.z.column(i);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::DegenerateColumn { column: i });
        }
        let mean = col.sum() / n as f64;
        psi[i] = mean;
        for j in 0..n {
            centered[(j, i)] = col[j] - mean;
        }
    }
    Ok((psi, centered))
}

/// Centers the predictors at their sample means and prepends an intercept.
pub fn build_design(ds: &Dataset) -> Result<Design> {
    let (psi_hat, centered) = centered_predictors(ds)?;
    let n = ds.n();
    let p = ds.p();
    let x = DMatrix::from_fn(n, p + 1, |j, i| if i == 0 { 1.0 } else { centered[(j, i - 1)] });
    Ok(Design::from_rows(x, psi_hat, true))
}

/// Centered design without the intercept column.
///
/// With one predictor the norm-weighted fit on this design is the scalar
/// sign estimator and the median fit is the median of slopes, which is what
/// the oracle tests rely on. Row norms may be zero here.
pub fn build_design_no_intercept(ds: &Dataset) -> Result<Design> {
    let (psi_hat, centered) = centered_predictors(ds)?;
    Ok(Design::from_rows(centered, psi_hat, false))
}

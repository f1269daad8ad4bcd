//! Student-t predictor designs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::covariance::ClipPolicy;
use crate::design::Dataset;
use crate::error::{Error, Result};

/// How the t draws are scaled into predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMode {
    /// `x = ψ + σ_X √((ν−2)/ν) V`, so `Var(x) = σ_X²` (needs ν > 2).
    VarianceScaled,
    /// `x = ψ + σ_X V / E|V|`, so `E|x − ψ| = σ_X` (needs ν > 1).
    AbsMeanScaled,
}

/// Simulation design for one cell of the pivot study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub nu: f64,
    pub sigma_x: f64,
    pub psi: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    pub scale_mode: ScaleMode,
    pub reps: usize,
    pub seed: u64,
    /// Clipping used for the norm-weighted standard error.
    #[serde(default)]
    pub clip: ClipPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 100,
            nu: 2.4,
            sigma_x: 3.24,
            psi: 0.21,
            beta0: 0.0,
            beta1: 1.0,
            sigma: 2.0,
            scale_mode: ScaleMode::VarianceScaled,
            reps: 50_000,
            seed: 0,
            clip: ClipPolicy::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        match self.scale_mode {
            ScaleMode::VarianceScaled if !(self.nu > 2.0) => return Err(Error::ModeMismatch { nu: self.nu }),
            ScaleMode::AbsMeanScaled if !(self.nu > 1.0) => {
                return Err(Error::InvalidInput(format!(
                    "abs-mean scaling needs nu > 1, got {}",
                    self.nu
                )))
            }
            _ => {}
        }
        if self.n < 3 {
            return Err(Error::InvalidInput(format!("n must be at least 3, got {}", self.n)));
        }
        if !(self.sigma_x > 0.0) || !(self.sigma >= 0.0) {
            return Err(Error::InvalidInput("scales must be positive".into()));
        }
        Ok(())
    }
}

/// `count` independent Student-t(ν) draws.
pub fn sample_t<R: Rng + ?Sized>(nu: f64, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    let dist = StudentT::new(nu).map_err(|e| Error::InvalidInput(format!("t({nu}): {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// `E|V|` for `V ~ t_ν`, `2√ν Γ((ν+1)/2) / (√π (ν−1) Γ(ν/2))`.
pub fn abs_mean_t(nu: f64) -> Result<f64> {
    if !(nu > 1.0) {
        return Err(Error::InvalidInput(format!("E|t_nu| is finite only for nu > 1, got {nu}")));
    }
    let log_ratio = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0);
    Ok(2.0 * nu.sqrt() * log_ratio.exp() / (std::f64::consts::PI.sqrt() * (nu - 1.0)))
}

/// Draws one `(Z, Y)` sample from the configured design.
pub fn draw_dataset<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Dataset> {
    cfg.validate()?;
    let scale = match cfg.scale_mode {
        ScaleMode::VarianceScaled => cfg.sigma_x * ((cfg.nu - 2.0) / cfg.nu).sqrt(),
        ScaleMode::AbsMeanScaled => cfg.sigma_x / abs_mean_t(cfg.nu)?,
    };
    let v = sample_t(cfg.nu, cfg.n, rng)?;
    let x: Vec<f64> = v.iter().map(|vj| cfg.psi + scale * vj).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&xj| {
            let eps: f64 = StandardNormal.sample(rng);
            cfg.beta0 + cfg.beta1 * (xj - cfg.psi) + cfg.sigma * eps
        })
        .collect();
    Dataset::new(DVector::from_vec(y), DMatrix::from_vec(cfg.n, 1, x))
}

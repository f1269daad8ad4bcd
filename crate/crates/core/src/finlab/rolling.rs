//! Rolling-window market regressions and the high/low beta tests.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{cov_least_squares, cov_norm_weighted, ClipPolicy};
use crate::design::{build_design, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{fit_least_squares, fit_norm_weighted, EstimatorKind};
use crate::finlab::returns::ReturnPanel;

/// One-sided 5% normal critical value.
pub const Z_CRIT_5: f64 = 1.6449;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollConfig {
    /// Weekly returns per regression.
    pub window: usize,
    /// Null bound for the high-beta test, `H₀: β ≤ high`.
    pub high: f64,
    /// Null bound for the low-beta test, `H₀: β ≥ low`.
    pub low: f64,
    pub crit: f64,
    #[serde(default)]
    pub clip: ClipPolicy,
}

impl Default for RollConfig {
    fn default() -> Self {
        Self {
            window: 100,
            high: 1.4,
            low: 0.8,
            crit: Z_CRIT_5,
            clip: ClipPolicy::default(),
        }
    }
}

impl RollConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 30 {
            return Err(Error::InvalidInput(format!("window must be at least 30, got {}", self.window)));
        }
        if !self.high.is_finite() || !self.low.is_finite() || !(self.crit > 0.0) {
            return Err(Error::InvalidInput("test bounds and critical value must be finite, crit > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaTest {
    /// Rejects `β ≤ high` when `t_high > crit`.
    High,
    /// Rejects `β ≥ low` when `t_low < −crit`.
    Low,
}

/// Fit of one ticker on one window. Alphas are intercepts at a zero index
/// return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingRow {
    pub window_end: NaiveDate,
    pub ticker: String,
    pub beta_nw: f64,
    pub beta_ls: f64,
    pub se_nw: f64,
    pub se_ls: f64,
    pub alpha_nw: f64,
    pub alpha_ls: f64,
    pub se_alpha_nw: f64,
    pub se_alpha_ls: f64,
    pub t_high_nw: f64,
    pub t_high_ls: f64,
    pub t_low_nw: f64,
    pub t_low_ls: f64,
}

impl RollingRow {
    pub fn rejects(&self, test: BetaTest, kind: EstimatorKind, crit: f64) -> bool {
        match (test, kind) {
            (BetaTest::High, EstimatorKind::NormWeighted) => self.t_high_nw > crit,
            (BetaTest::High, EstimatorKind::LeastSquares) => self.t_high_ls > crit,
            (BetaTest::Low, EstimatorKind::NormWeighted) => self.t_low_nw < -crit,
            (BetaTest::Low, EstimatorKind::LeastSquares) => self.t_low_ls < -crit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub window_end: NaiveDate,
    pub ticker: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingPanel {
    pub config: RollConfig,
    /// Every window end attempted, in order, whether or not anything fitted.
    pub window_ends: Vec<NaiveDate>,
    /// Tickers excluding the index.
    pub universe: Vec<String>,
    /// Sorted by window end, then ticker.
    pub rows: Vec<RollingRow>,
    pub skips: Vec<Skip>,
}

impl RollingPanel {
    pub fn rows_at(&self, window_end: NaiveDate) -> &[RollingRow] {
        let lo = self.rows.partition_point(|r| r.window_end < window_end);
        let hi = self.rows.partition_point(|r| r.window_end <= window_end);
        &self.rows[lo..hi]
    }
}

/// Slope, intercept at zero and their standard errors from a single-index
/// regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketFit {
    pub alpha: f64,
    pub alpha_se: f64,
    pub beta: f64,
    pub beta_se: f64,
}

/// Regresses `asset` on `(1, index)`. The centered design puts the
/// intercept at the mean index return, so it is shifted back to zero:
/// `α = β̂₀ − β̂₁ψ̂` with variance `cᵀ cov c`, `c = (1, −ψ̂)`.
pub fn market_fit(index: &[f64], asset: &[f64], kind: EstimatorKind, clip: &ClipPolicy) -> Result<MarketFit> {
    let ds = Dataset::univariate(asset, index)?;
    let des = build_design(&ds)?;
    let (beta, cov) = match kind {
        EstimatorKind::NormWeighted => {
            let fit = fit_norm_weighted(&des, &ds.y)?;
            let (cov, _) = cov_norm_weighted(&des, &fit, clip)?;
            (fit.beta, cov)
        }
        EstimatorKind::LeastSquares => {
            let fit = fit_least_squares(&des, &ds.y)?;
            let cov = cov_least_squares(&des, &fit)?;
            (fit.beta, cov)
        }
    };
    let psi = des.psi_hat[0];
    let var_alpha = cov[(0, 0)] - 2.0 * psi * cov[(0, 1)] + psi * psi * cov[(1, 1)];
    Ok(MarketFit {
        alpha: beta[0] - beta[1] * psi,
        alpha_se: var_alpha.max(0.0).sqrt(),
        beta: beta[1],
        beta_se: cov[(1, 1)].max(0.0).sqrt(),
    })
}

/// `(β̂ − bound)/SE`, with a zero SE mapped to ±∞ (or 0 on the bound).
fn t_stat(beta: f64, bound: f64, se: f64) -> f64 {
    let diff = beta - bound;
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn fit_window(index: &[f64], asset: &[f64], cfg: &RollConfig, window_end: NaiveDate, ticker: &str) -> Result<RollingRow> {
    let nw = market_fit(index, asset, EstimatorKind::NormWeighted, &cfg.clip)?;
    let ls = market_fit(index, asset, EstimatorKind::LeastSquares, &cfg.clip)?;
    Ok(RollingRow {
        window_end,
        ticker: ticker.to_string(),
        beta_nw: nw.beta,
        beta_ls: ls.beta,
        se_nw: nw.beta_se,
        se_ls: ls.beta_se,
        alpha_nw: nw.alpha,
        alpha_ls: ls.alpha,
        se_alpha_nw: nw.alpha_se,
        se_alpha_ls: ls.alpha_se,
        t_high_nw: t_stat(nw.beta, cfg.high, nw.beta_se),
        t_high_ls: t_stat(ls.beta, cfg.high, ls.beta_se),
        t_low_nw: t_stat(nw.beta, cfg.low, nw.beta_se),
        t_low_ls: t_stat(ls.beta, cfg.low, ls.beta_se),
    })
}

/// Fits every ticker on every trailing window of `cfg.window` weekly returns.
/// A window ending at week `e` uses weeks `e−window+1 ..= e`; tickers with a
/// missing return in the window, or whose fit is numerically degenerate,
/// are recorded in `skips`.
pub fn roll_fit(rp: &ReturnPanel, cfg: &RollConfig) -> Result<RollingPanel> {
    cfg.validate()?;
    let ix = rp.index_column();
    let universe: Vec<(usize, &str)> = rp.universe().collect();
    let first_end = cfg.window; // week 0 carries no return
    let ends: Vec<usize> = (first_end..rp.weeks()).collect();

    let per_end: Vec<Result<(Vec<RollingRow>, Vec<Skip>)>> = ends
        .par_iter()
        .map(|&e| {
            let weeks = e + 1 - cfg.window..=e;
            let date = rp.week_ends[e];
            let mut rows = Vec::new();
            let mut skips = Vec::new();
            let skip = |ticker: &str, reason: String| Skip {
                window_end: date,
                ticker: ticker.to_string(),
                reason,
            };
            let index: Option<Vec<f64>> = weeks.clone().map(|w| rp.r[w][ix]).collect();
            let Some(index) = index else {
                skips.extend(universe.iter().map(|(_, t)| skip(t, "index return missing in window".into())));
                return Ok((rows, skips));
            };
            for &(s, ticker) in &universe {
                let asset: Option<Vec<f64>> = weeks.clone().map(|w| rp.r[w][s]).collect();
                let Some(asset) = asset else {
                    skips.push(skip(ticker, "incomplete window".into()));
                    continue;
                };
                match fit_window(&index, &asset, cfg, date, ticker) {
                    Ok(row) => rows.push(row),
                    Err(e) if e.is_numeric() => skips.push(skip(ticker, e.to_string())),
                    Err(e) => return Err(e),
                }
            }
            Ok((rows, skips))
        })
        .collect();

    let mut rows = Vec::new();
    let mut skips = Vec::new();
    for part in per_end {
        let (r, s) = part?;
        rows.extend(r);
        skips.extend(s);
    }
    Ok(RollingPanel {
        config: cfg.clone(),
        window_ends: ends.iter().map(|&e| rp.week_ends[e]).collect(),
        universe: universe.iter().map(|(_, t)| t.to_string()).collect(),
        rows,
        skips,
    })
}

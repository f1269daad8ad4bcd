//! Cramér–von Mises distance to N(0, 1) and QQ tables.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simlab::rng_for;
use crate::stats::{normal_cdf, normal_quantile, quantile_sorted};

/// `W² = 1/(12m) + Σ (Φ(x_(i)) − (2i−1)/(2m))²`.
pub fn cvm_statistic(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("CvM statistic of an empty sample".into()));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "CvM sample" });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let target = (2.0 * i as f64 + 1.0) / (2.0 * m);
            (normal_cdf(x) - target).powi(2)
        })
        .sum();
    Ok(1.0 / (12.0 * m) + sum)
}

/// Empirical quantiles of `W²` under i.i.d. N(0,1) samples of size `m`.
/// Trial `t` draws from stream `t` of `seed`, so the result does not depend
/// on how trials are scheduled.
pub fn cvm_null_quantiles(m: usize, trials: usize, probs: &[f64], seed: u64) -> Result<Vec<f64>> {
    if trials < 1000 {
        return Err(Error::InvalidInput(format!("need at least 1000 trials, got {trials}")));
    }
    if m == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let mut stats: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, t as u64);
            let sample: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            cvm_statistic(&sample).expect("finite normal draws")
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok(probs.iter().map(|&p| quantile_sorted(&stats, p)).collect())
}

/// One point of a normal QQ plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub probability: f64,
    pub theoretical: f64,
    pub empirical: f64,
}

/// QQ pairs at probabilities `(i − 0.5)/grid`. Empirical quantiles
/// interpolate the order statistics placed at the same plotting positions,
/// so a sample of exact normal quantiles lands on the diagonal.
pub fn qq_export(sample: &[f64], grid: usize) -> Result<Vec<QqPoint>> {
    if grid == 0 || sample.len() < grid {
        return Err(Error::InvalidInput(format!(
            "QQ grid of {grid} needs at least that many sample points, got {}",
            sample.len()
        )));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    Ok((1..=grid)
        .map(|i| {
            let p = (i as f64 - 0.5) / grid as f64;
            // 1-based position m·p + 1/2, clamped to the sample range
            let h = (m as f64 * p + 0.5).clamp(1.0, m as f64) - 1.0;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(m - 1);
            let empirical = sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]);
            QqPoint {
                probability: p,
                theoretical: normal_quantile(p),
                empirical,
            }
        })
        .collect())
}

/// Linear-interpolation quantile helper re-exported for callers holding
/// unsorted draws.
pub fn sample_quantiles(sample: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

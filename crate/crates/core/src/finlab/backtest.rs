//! Test-selected equal-weight portfolios and the summaries reported on them.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::covariance::ClipPolicy;
use crate::error::{Error, Result};
use crate::estimator::EstimatorKind;
use crate::finlab::returns::ReturnPanel;
use crate::finlab::rolling::{market_fit, BetaTest, RollingPanel, RollingRow};
use crate::stats::{mean, quantile, sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    LowNW,
    LowLS,
    HighNW,
    HighLS,
    Index,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::LowNW,
        Strategy::LowLS,
        Strategy::HighNW,
        Strategy::HighLS,
        Strategy::Index,
    ];

    /// The test and estimator that pick members; `None` for the index.
    pub fn selection(self) -> Option<(BetaTest, EstimatorKind)> {
        match self {
            Strategy::LowNW => Some((BetaTest::Low, EstimatorKind::NormWeighted)),
            Strategy::LowLS => Some((BetaTest::Low, EstimatorKind::LeastSquares)),
            Strategy::HighNW => Some((BetaTest::High, EstimatorKind::NormWeighted)),
            Strategy::HighLS => Some((BetaTest::High, EstimatorKind::LeastSquares)),
            Strategy::Index => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestOptions {
    /// Estimator for the portfolio alpha/beta regressions.
    pub summary_estimator: EstimatorKind,
    #[serde(default)]
    pub clip: ClipPolicy,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        Self {
            summary_estimator: EstimatorKind::NormWeighted,
            clip: ClipPolicy::default(),
        }
    }
}

/// One formation date and the week its portfolios are held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub formed: NaiveDate,
    pub held: NaiveDate,
    /// Tickers fitted at the formation date.
    pub universe: usize,
    pub members: BTreeMap<Strategy, Vec<String>>,
    /// Percentage returns over the holding week.
    pub returns: BTreeMap<Strategy, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: Strategy,
    pub mean: f64,
    pub sd: f64,
    /// `mean/sd`; `None` when the return series is constant.
    pub sharpe: Option<f64>,
    pub alpha: f64,
    pub alpha_se: f64,
    pub beta: f64,
    /// Average fraction of the fitted universe held.
    pub share: f64,
    /// Average symmetric-difference turnover as a fraction of the universe.
    pub delta_share: f64,
}

/// RMS of 100× step-to-step changes of the rolling estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roughness {
    pub beta_nw: f64,
    pub beta_ls: f64,
    pub se_nw: f64,
    pub se_ls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestSettings {
    pub window: usize,
    pub high: f64,
    pub low: f64,
    pub crit: f64,
    pub summary_estimator: EstimatorKind,
    /// What an empty selection earns.
    pub empty_selection: String,
    /// Denominator of `share` and `delta_share`.
    pub share_denominator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub settings: BacktestSettings,
    pub strategies: Vec<StrategyStats>,
    pub roughness: Roughness,
    pub periods: Vec<Period>,
}

impl BacktestReport {
    pub fn stats(&self, strategy: Strategy) -> &StrategyStats {
        self.strategies
            .iter()
            .find(|s| s.strategy == strategy)
            .expect("every strategy is reported")
    }
}

pub fn sharpe(mean: f64, sd: f64) -> Option<f64> {
    (sd > 0.0).then(|| mean / sd)
}

/// `|prev Δ cur| / universe`.
pub fn symmetric_difference_share(prev: &BTreeSet<&str>, cur: &BTreeSet<&str>, universe: usize) -> f64 {
    prev.symmetric_difference(cur).count() as f64 / universe as f64
}

/// `sqrt(mean((100·(θ_t − θ_{t−1}))²))`.
pub fn rms_step_change(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InvalidInput("need at least two points for step changes".into()));
    }
    let sq: Vec<f64> = series.windows(2).map(|w| (100.0 * (w[1] - w[0])).powi(2)).collect();
    Ok(mean(&sq).sqrt())
}

/// Renders `x` with `digits` significant digits, truncating toward zero.
/// The value is first taken to 15 significant digits so that decimal
/// literals such as 0.29 are not cut below themselves.
pub fn display_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1, "at least one significant digit");
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.14e}", x.abs());
    let (mantissa, exp) = s.split_once('e').expect("scientific format");
    let exp: i64 = exp.parse().expect("integer exponent");
    let all: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let keep = &all[..digits.min(all.len())];
    let d = keep.len() as i64;
    let body = if exp >= d - 1 {
        format!("{keep}{}", "0".repeat((exp - d + 1) as usize))
    } else if exp >= 0 {
        let split = (exp + 1) as usize;
        format!("{}.{}", &keep[..split], &keep[split..])
    } else {
        format!("0.{}{keep}", "0".repeat((-exp - 1) as usize))
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

fn members(rows: &[RollingRow], test: BetaTest, kind: EstimatorKind, crit: f64) -> BTreeSet<&str> {
    rows.iter()
        .filter(|r| r.rejects(test, kind, crit))
        .map(|r| r.ticker.as_str())
        .collect()
}

/// Forms the four test-selected portfolios at every window end and holds
/// each for the following week. A portfolio formed at week `t` depends only
/// on rolling fits through week `t`.
///
/// Members without a return in the holding week are dropped from that
/// week's average; a portfolio with no holdings earns 0. Formation dates
/// with no fitted tickers or no index return in the holding week are not
/// used.
pub fn select_and_backtest(rpanel: &RollingPanel, rp: &ReturnPanel, opts: &BacktestOptions) -> Result<BacktestReport> {
    if rpanel.window_ends.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "backtest needs at least two window ends, got {}",
            rpanel.window_ends.len()
        )));
    }
    let crit = rpanel.config.crit;
    let ix = rp.index_column();

    let mut periods = Vec::new();
    let mut selections: Vec<BTreeMap<Strategy, BTreeSet<&str>>> = Vec::new();
    for &formed in &rpanel.window_ends {
        let Ok(e) = rp.week_ends.binary_search(&formed) else {
            return Err(Error::InvalidInput(format!("window end {formed} is not a week end of the return panel")));
        };
        if e + 1 >= rp.weeks() {
            continue;
        }
        let rows = rpanel.rows_at(formed);
        let Some(index_ret) = rp.r[e + 1][ix] else { continue };
        if rows.is_empty() {
            continue;
        }
        let mut sel = BTreeMap::new();
        let mut returns = BTreeMap::new();
        for strategy in Strategy::ALL {
            let Some((test, kind)) = strategy.selection() else {
                returns.insert(strategy, index_ret);
                continue;
            };
            let m = members(rows, test, kind, crit);
            let held: Vec<f64> = m
                .iter()
                .filter_map(|t| rp.column(t).and_then(|c| rp.r[e + 1][c]))
                .collect();
            returns.insert(strategy, if held.is_empty() { 0.0 } else { mean(&held) });
            sel.insert(strategy, m);
        }
        periods.push(Period {
            formed,
            held: rp.week_ends[e + 1],
            universe: rows.len(),
            members: sel
                .iter()
                .map(|(s, m)| (*s, m.iter().map(|t| t.to_string()).collect()))
                .collect(),
            returns,
        });
        selections.push(sel);
    }

    let index_series: Vec<f64> = periods.iter().map(|p| p.returns[&Strategy::Index]).collect();
    let mut strategies = Vec::new();
    for strategy in Strategy::ALL {
        let series: Vec<f64> = periods.iter().map(|p| p.returns[&strategy]).collect();
        let (share, delta_share) = if strategy == Strategy::Index {
            (0.0, 0.0)
        } else {
            let shares: Vec<f64> = periods
                .iter()
                .zip(&selections)
                .map(|(p, s)| s[&strategy].len() as f64 / p.universe as f64)
                .collect();
            let deltas: Vec<f64> = (1..periods.len())
                .map(|t| {
                    symmetric_difference_share(&selections[t - 1][&strategy], &selections[t][&strategy], periods[t].universe)
                })
                .collect();
            (mean(&shares), if deltas.is_empty() { 0.0 } else { mean(&deltas) })
        };
        let fit = market_fit(&index_series, &series, opts.summary_estimator, &opts.clip)?;
        let (m, s) = (mean(&series), sd(&series));
        strategies.push(StrategyStats {
            strategy,
            mean: m,
            sd: s,
            sharpe: sharpe(m, s),
            alpha: fit.alpha,
            alpha_se: fit.alpha_se,
            beta: fit.beta,
            share,
            delta_share,
        });
    }

    Ok(BacktestReport {
        settings: BacktestSettings {
            window: rpanel.config.window,
            high: rpanel.config.high,
            low: rpanel.config.low,
            crit,
            summary_estimator: opts.summary_estimator,
            empty_selection: "cash".into(),
            share_denominator: "fitted tickers".into(),
        },
        strategies,
        roughness: roughness(rpanel)?,
        periods,
    })
}

/// Step changes are taken per ticker between consecutive window ends at
/// which it was fitted on both sides.
pub fn roughness(rpanel: &RollingPanel) -> Result<Roughness> {
    let mut acc = [0.0f64; 4];
    let mut count = 0usize;
    for pair in rpanel.window_ends.windows(2) {
        let prev = rpanel.rows_at(pair[0]);
        let cur = rpanel.rows_at(pair[1]);
        let mut i = 0;
        for c in cur {
            while i < prev.len() && prev[i].ticker < c.ticker {
                i += 1;
            }
            if i == prev.len() || prev[i].ticker != c.ticker {
                continue;
            }
            let p = &prev[i];
            let steps = [c.beta_nw - p.beta_nw, c.beta_ls - p.beta_ls, c.se_nw - p.se_nw, c.se_ls - p.se_ls];
            for (a, d) in acc.iter_mut().zip(steps) {
                *a += (100.0 * d).powi(2);
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput("no ticker is fitted at two consecutive window ends".into()));
    }
    let rms = |a: f64| (a / count as f64).sqrt();
    Ok(Roughness {
        beta_nw: rms(acc[0]),
        beta_ls: rms(acc[1]),
        se_nw: rms(acc[2]),
        se_ls: rms(acc[3]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub statistic: String,
    pub mean: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

/// Rejection counts of one test across the cross-section; `agree` counts
/// tickers rejected by both estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCounts {
    pub test: BetaTest,
    pub reject_nw: usize,
    pub reject_ls: usize,
    pub agree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub window_end: NaiveDate,
    pub fitted: usize,
    pub rows: Vec<QuantileRow>,
    pub tests: Vec<TestCounts>,
}

pub fn test_counts(rows: &[RollingRow], test: BetaTest, crit: f64) -> TestCounts {
    let mut c = TestCounts {
        test,
        reject_nw: 0,
        reject_ls: 0,
        agree: 0,
    };
    for r in rows {
        let nw = r.rejects(test, EstimatorKind::NormWeighted, crit);
        let ls = r.rejects(test, EstimatorKind::LeastSquares, crit);
        c.reject_nw += nw as usize;
        c.reject_ls += ls as usize;
        c.agree += (nw && ls) as usize;
    }
    c
}

/// Mean and 10/50/90% quantiles of every rolling estimate at one window end.
pub fn cross_section_summary(rpanel: &RollingPanel, window_end: NaiveDate) -> Result<CrossSection> {
    let rows = rpanel.rows_at(window_end);
    if rows.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "cross-section at {window_end} has {} fitted tickers, need at least 10",
            rows.len()
        )));
    }
    let columns: [(&str, fn(&RollingRow) -> f64); 8] = [
        ("beta_nw", |r| r.beta_nw),
        ("beta_ls", |r| r.beta_ls),
        ("se_nw", |r| r.se_nw),
        ("se_ls", |r| r.se_ls),
        ("alpha_nw", |r| r.alpha_nw),
        ("alpha_ls", |r| r.alpha_ls),
        ("se_alpha_nw", |r| r.se_alpha_nw),
        ("se_alpha_ls", |r| r.se_alpha_ls),
    ];
    let summary = columns
        .iter()
        .map(|(name, get)| {
            let v: Vec<f64> = rows.iter().map(get).collect();
            QuantileRow {
                statistic: name.to_string(),
                mean: mean(&v),
                q10: quantile(&v, 0.1),
                q50: quantile(&v, 0.5),
                q90: quantile(&v, 0.9),
            }
        })
        .collect();
    let crit = rpanel.config.crit;
    Ok(CrossSection {
        window_end,
        fitted: rows.len(),
        rows: summary,
        tests: vec![test_counts(rows, BetaTest::High, crit), test_counts(rows, BetaTest::Low, crit)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_truncates() {
        assert_eq!(display_sig(0.194 / 2.49, 2), "0.077");
        assert_eq!(display_sig(0.29, 2), "0.29");
        assert_eq!(display_sig(-1.2345, 3), "-1.23");
        assert_eq!(display_sig(1234.5, 2), "1200");
        assert_eq!(display_sig(12.0, 2), "12");
        assert_eq!(display_sig(0.0, 2), "0");
    }

    #[test]
    fn sharpe_of_index_row() {
        let s = sharpe(0.194, 2.49).unwrap();
        assert!((s - 0.0779).abs() < 5e-5);
        assert_eq!(sharpe(1.0, 0.0), None);
    }

    #[test]
    fn rms_steps() {
        let alt: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 0.005 } else { -0.005 }).collect();
        assert!((rms_step_change(&alt).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rms_step_change(&[3.0; 10]).unwrap(), 0.0);
        assert!(rms_step_change(&[1.0]).is_err());
    }

    #[test]
    fn one_move_in_a_thousand() {
        let names: Vec<String> = (0..11).map(|i| format!("S{i}")).collect();
        let prev: BTreeSet<&str> = names[..10].iter().map(|s| s.as_str()).collect();
        let mut cur = prev.clone();
        cur.remove("S0");
        assert!((symmetric_difference_share(&prev, &cur, 1000) - 0.001).abs() < 1e-15);
        cur.insert("S10");
        assert!((symmetric_difference_share(&prev, &cur, 1000) - 0.002).abs() < 1e-15);
    }
}

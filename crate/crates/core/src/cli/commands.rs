use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::args::{BacktestArgs, CvmArgs, DesignArgs, FitArgs, RollArgs, SimulateArgs};
use super::output::{fmt_f64, write_csv, write_json};
use crate::covariance::{cov_least_squares, cov_norm_weighted, ClipPolicy};
use crate::design::{build_design, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{fit_least_squares, fit_norm_weighted, EstimatorKind, FitReport};
use crate::finlab::{
    cross_section_summary, ingest_prices, roll_fit, select_and_backtest, weekly_returns, BacktestOptions, BetaTest, ReturnPanel,
    RollConfig, RollingPanel,
};
use crate::quantile::{fit_quantile_with_cov, QuantileReport};
use crate::simlab::{
    cvm_null_quantiles, derive_seed, qq_export, run_replications, SimConfig, NOMINAL_SIZES,
};

const FULL_SCALE_REPS: usize = 500_000;

/// Reads a numeric CSV whose header names a `y` column.
pub fn read_yz(path: &Path) -> Result<(Dataset, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(e, 1))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(e, 1))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let Some(y_col) = header.iter().position(|h| h == "y") else {
        return Err(Error::Parse {
            line: 1,
            message: "header has no `y` column".into(),
        });
    };
    let predictors: Vec<String> = header.iter().filter(|h| *h != "y").cloned().collect();
    if predictors.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "header has no predictor column".into(),
        });
    }

    let mut y = Vec::new();
    let mut z = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {:?}: not a number: {field:?}", header[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {:?}: non-finite value", header[i]),
                });
            }
            if i == y_col {
                y.push(v);
            } else {
                z.push(v);
            }
        }
    }
    let n = y.len();
    let p = predictors.len();
    let ds = Dataset::new(DVector::from_vec(y), DMatrix::from_row_slice(n, p, &z))?;
    Ok((ds, predictors))
}

fn parse_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::Parse { line, message },
    }
}

#[derive(Serialize)]
struct FitOutput {
    n: usize,
    predictors: Vec<String>,
    psi_hat: Vec<f64>,
    clip: ClipPolicy,
    norm_weighted: FitReport,
    least_squares: FitReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantile: Option<QuantileReport>,
}

pub fn fit(args: &FitArgs, out: &Path) -> Result<()> {
    let clip = args.clip.policy()?;
    let (ds, predictors) = read_yz(&args.input)?;
    let des = build_design(&ds)?;

    let mut nw = fit_norm_weighted(&des, &ds.y)?;
    let (cov, clipped) = cov_norm_weighted(&des, &nw, &clip)?;
    nw.attach_covariance(cov, clipped);
    let mut ls = fit_least_squares(&des, &ds.y)?;
    let cov = cov_least_squares(&des, &ls)?;
    ls.attach_covariance(cov, 0);

    let quantile = match args.tau {
        Some(tau) => {
            let qf = fit_quantile_with_cov(&des, &ds.y, tau, args.bandwidth, args.middle_matrix.into())?;
            qf.report()
        }
        None => None,
    };
    let report = FitOutput {
        n: ds.n(),
        predictors,
        psi_hat: des.psi_hat.iter().copied().collect(),
        clip,
        norm_weighted: nw.report().expect("covariance attached"),
        least_squares: ls.report().expect("covariance attached"),
        quantile,
    };
    write_json(&out.join("fit.json"), &report)
}

fn sim_config(n: usize, nu: f64, design: &DesignArgs, reps: usize, seed: u64, clip: ClipPolicy) -> SimConfig {
    SimConfig {
        n,
        nu,
        sigma_x: design.sigma_x,
        psi: design.psi,
        beta0: design.beta0,
        beta1: design.beta1,
        sigma: design.sigma,
        scale_mode: design.scale_mode.into(),
        reps,
        seed,
        clip,
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    config: SimConfig,
    kept: usize,
    skipped: usize,
    nominal_sizes: [f64; 3],
    reject_nw: [usize; 3],
    reject_ls: [usize; 3],
    coverage_nw: [f64; 3],
    coverage_ls: [f64; 3],
    cvm_nw: f64,
    cvm_ls: f64,
}

pub fn simulate(args: &SimulateArgs, out: &Path) -> Result<()> {
    let reps = if args.full_scale { FULL_SCALE_REPS } else { args.reps };
    let cfg = sim_config(args.n, args.nu, &args.design, reps, args.seed, args.clip.policy()?);
    let s = run_replications(&cfg)?;

    write_csv(
        &out.join("pivots.csv"),
        &["rep", "t_nw", "t_ls"],
        s.rep
            .iter()
            .zip(s.t_nw.iter().zip(&s.t_ls))
            .map(|(r, (a, b))| vec![r.to_string(), fmt_f64(*a), fmt_f64(*b)]),
    )?;

    let grid = args.qq_grid.min(s.t_nw.len());
    let qq_nw = qq_export(&s.t_nw, grid)?;
    let qq_ls = qq_export(&s.t_ls, grid)?;
    write_csv(
        &out.join("qq.csv"),
        &["probability", "theoretical", "t_nw", "t_ls"],
        qq_nw.iter().zip(&qq_ls).map(|(a, b)| {
            vec![
                fmt_f64(a.probability),
                fmt_f64(a.theoretical),
                fmt_f64(a.empirical),
                fmt_f64(b.empirical),
            ]
        }),
    )?;

    let summary = SimulateOutput {
        kept: s.t_nw.len(),
        skipped: s.skipped,
        nominal_sizes: NOMINAL_SIZES,
        reject_nw: s.reject_nw,
        reject_ls: s.reject_ls,
        coverage_nw: [0, 1, 2].map(|i| s.coverage_nw(i)),
        coverage_ls: [0, 1, 2].map(|i| s.coverage_ls(i)),
        cvm_nw: s.cvm_nw,
        cvm_ls: s.cvm_ls,
        config: cfg,
    };
    write_json(&out.join("simulate.json"), &summary)
}

/// Seed of the `(nu, n)` cell; keyed on the values so that adding or
/// reordering cells leaves the others unchanged.
pub fn cell_seed(seed: u64, nu: f64, n: usize) -> u64 {
    derive_seed(derive_seed(seed, nu.to_bits()), n as u64)
}

/// Tag from which the null-distribution seed is derived.
const NULL_TAG: u64 = 0x6e75_6c6c;

pub fn cvm(args: &CvmArgs, out: &Path) -> Result<()> {
    let reps = if args.full_scale { FULL_SCALE_REPS } else { args.reps };
    let clip = args.clip.policy()?;
    let q = cvm_null_quantiles(reps, args.null_trials, &[0.5, 0.95, 0.99], derive_seed(args.seed, NULL_TAG))?;
    let mut rows = Vec::new();
    for &nu in &args.nu {
        for &n in &args.n {
            let cfg = sim_config(n, nu, &args.design, reps, cell_seed(args.seed, nu, n), clip.clone());
            let s = run_replications(&cfg)?;
            rows.push(vec![
                fmt_f64(nu),
                n.to_string(),
                fmt_f64(args.design.sigma),
                fmt_f64(s.cvm_nw),
                fmt_f64(s.cvm_ls),
                fmt_f64(q[0]),
                fmt_f64(q[1]),
                fmt_f64(q[2]),
            ]);
        }
    }
    write_csv(
        &out.join("cvm_grid.csv"),
        &["nu", "n", "sigma", "cvm_nw", "cvm_ls", "q50", "q95", "q99"],
        rows,
    )
}

fn rolling_panel(args: &RollArgs) -> Result<(RollingPanel, ReturnPanel)> {
    let prices = ingest_prices(&args.input, &args.index)?;
    let returns = weekly_returns(&prices, args.allow_gaps);
    let cfg = RollConfig {
        window: args.window,
        high: args.high,
        low: args.low,
        crit: args.crit,
        clip: args.clip.policy()?,
    };
    let panel = roll_fit(&returns, &cfg)?;
    Ok((panel, returns))
}

pub const ROLLING_HEADER: [&str; 14] = [
    "window_end",
    "ticker",
    "beta_nw",
    "beta_ls",
    "se_nw",
    "se_ls",
    "alpha_nw",
    "alpha_ls",
    "se_alpha_nw",
    "se_alpha_ls",
    "t_high_nw",
    "t_high_ls",
    "t_low_nw",
    "t_low_ls",
];

pub fn roll(args: &RollArgs, out: &Path) -> Result<()> {
    let (panel, _) = rolling_panel(args)?;
    write_csv(
        &out.join("rolling.csv"),
        &ROLLING_HEADER,
        panel.rows.iter().map(|r| {
            let mut fields = vec![r.window_end.to_string(), r.ticker.clone()];
            fields.extend(
                [
                    r.beta_nw,
                    r.beta_ls,
                    r.se_nw,
                    r.se_ls,
                    r.alpha_nw,
                    r.alpha_ls,
                    r.se_alpha_nw,
                    r.se_alpha_ls,
                    r.t_high_nw,
                    r.t_high_ls,
                    r.t_low_nw,
                    r.t_low_ls,
                ]
                .map(fmt_f64),
            );
            fields
        }),
    )?;
    write_csv(
        &out.join("skips.csv"),
        &["window_end", "ticker", "reason"],
        panel
            .skips
            .iter()
            .map(|s| vec![s.window_end.to_string(), s.ticker.clone(), s.reason.clone()]),
    )?;

    // The cross-section is summarised at the latest window end, when it is wide enough.
    let Some(&last) = panel.window_ends.last() else {
        return Ok(());
    };
    if panel.rows_at(last).len() < 10 {
        eprintln!(
            "note: {} tickers fitted at {last}; cross-section summary needs 10, summary.csv not written",
            panel.rows_at(last).len()
        );
        return Ok(());
    }
    let cs = cross_section_summary(&panel, last)?;
    let rows: Vec<Vec<String>> = cs
        .rows
        .iter()
        .map(|r| {
            let mut f = vec![r.statistic.clone()];
            f.extend([r.mean, r.q10, r.q50, r.q90].map(fmt_f64));
            f
        })
        .collect();
    write_csv(&out.join("summary.csv"), &["statistic", "mean", "q10", "q50", "q90"], rows)?;
    write_csv(
        &out.join("tests.csv"),
        &["window_end", "test", "reject_nw", "reject_ls", "agree"],
        cs.tests.iter().map(|t| {
            let name = match t.test {
                BetaTest::High => "high",
                BetaTest::Low => "low",
            };
            vec![
                cs.window_end.to_string(),
                name.to_string(),
                t.reject_nw.to_string(),
                t.reject_ls.to_string(),
                t.agree.to_string(),
            ]
        }),
    )
}

pub fn backtest(args: &BacktestArgs, out: &Path) -> Result<()> {
    let (panel, returns) = rolling_panel(&args.roll)?;
    let opts = BacktestOptions {
        summary_estimator: if args.ls_summary {
            EstimatorKind::LeastSquares
        } else {
            EstimatorKind::NormWeighted
        },
        clip: args.roll.clip.policy()?,
    };
    let report = select_and_backtest(&panel, &returns, &opts)?;
    write_json(&out.join("backtest.json"), &report)
}

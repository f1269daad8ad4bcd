use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use normreg::estimator::EstimatorKind;
use normreg::finlab::{
    cross_section_summary, read_prices, rms_step_change, roll_fit, roughness, select_and_backtest, test_counts,
    weekly_returns, BacktestOptions, BetaTest, ReturnPanel, RollConfig, RollingPanel, RollingRow, Strategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

fn friday(k: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 2).unwrap() + Duration::weeks(k as i64)
}

/// Builds a return panel with index `IDX`. Week 0 has no returns.
fn panel(index: &[f64], stocks: Vec<(&str, Vec<f64>)>) -> ReturnPanel {
    let weeks = index.len();
    let mut columns = vec![("IDX", index.to_vec())];
    columns.extend(stocks);
    columns.sort_by(|a, b| a.0.cmp(b.0));
    let r = (0..weeks)
        .map(|w| columns.iter().map(|(_, s)| (w > 0).then(|| s[w])).collect())
        .collect();
    ReturnPanel {
        week_ends: (0..weeks).map(friday).collect(),
        tickers: columns.iter().map(|(t, _)| t.to_string()).collect(),
        r,
        index_ticker: "IDX".into(),
    }
}

fn index_series(rng: &mut ChaCha8Rng, weeks: usize) -> Vec<f64> {
    let d = Normal::new(0.15, 2.0).unwrap();
    (0..weeks).map(|_| d.sample(rng)).collect()
}

fn with_beta(rng: &mut ChaCha8Rng, index: &[f64], alpha: f64, beta: f64, noise: f64) -> Vec<f64> {
    index
        .iter()
        .map(|m| {
            let e: f64 = StandardNormal.sample(rng);
            alpha + beta * m + noise * e
        })
        .collect()
}

fn config(window: usize) -> RollConfig {
    RollConfig {
        window,
        ..RollConfig::default()
    }
}

fn mixed_universe(seed: u64, weeks: usize) -> ReturnPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = index_series(&mut rng, weeks);
    let names: Vec<String> = (0..15).map(|i| format!("S{i:02}")).collect();
    let stocks = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let beta = 2.6 * i as f64 / 14.0;
            (name.as_str(), with_beta(&mut rng, &idx, 0.05, beta, 1.0))
        })
        .collect::<Vec<_>>();
    panel(&idx, stocks)
}

#[test]
fn csv_prices_to_weekly_percent_returns() {
    let csv = "date,ticker,adj_close\n\
               2024-01-05,IDX,100\n2024-01-05,A,50\n\
               2024-01-10,IDX,101\n2024-01-12,IDX,103\n2024-01-12,A,50\n";
    let pp = read_prices(csv.as_bytes(), "IDX").unwrap();
    let rp = weekly_returns(&pp, false);
    assert_eq!(rp.weeks(), 2);
    let ix = rp.index_column();
    assert!(rp.r[0][ix].is_none());
    assert!((rp.r[1][ix].unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(rp.r[1][rp.column("A").unwrap()], Some(0.0));
}

#[test]
fn near_noiseless_double_beta_is_always_high() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let idx = index_series(&mut rng, 400);
    let stock = with_beta(&mut rng, &idx, 0.0, 2.0, 0.01);
    let rp = panel(&idx, vec![("HI", stock)]);
    let rolled = roll_fit(&rp, &config(100)).unwrap();
    assert_eq!(rolled.rows.len(), 300);
    let hits = rolled.rows.iter().filter(|r| r.t_high_nw > rolled.config.crit).count();
    assert!(hits as f64 >= 0.99 * rolled.rows.len() as f64, "{hits}");
}

#[test]
fn index_clone_has_unit_beta_and_no_rejections() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let idx = index_series(&mut rng, 200);
    let rp = panel(&idx, vec![("SAME", idx.clone())]);
    let rolled = roll_fit(&rp, &config(100)).unwrap();
    assert!(rolled.skips.is_empty());
    for r in &rolled.rows {
        assert!((r.beta_nw - 1.0).abs() < 1e-10 && (r.beta_ls - 1.0).abs() < 1e-10);
        for test in [BetaTest::High, BetaTest::Low] {
            for kind in [EstimatorKind::NormWeighted, EstimatorKind::LeastSquares] {
                assert!(!r.rejects(test, kind, rolled.config.crit));
            }
        }
    }
}

#[test]
fn exactly_linear_returns_agree_with_zero_standard_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let idx = index_series(&mut rng, 150);
    let stock: Vec<f64> = idx.iter().map(|m| 0.25 + 1.5 * m).collect();
    let rp = panel(&idx, vec![("LIN", stock)]);
    let rolled = roll_fit(&rp, &config(60)).unwrap();
    for r in &rolled.rows {
        assert!((r.beta_nw - r.beta_ls).abs() < 1e-9);
        assert!((r.alpha_nw - r.alpha_ls).abs() < 1e-9);
        assert!((r.beta_nw - 1.5).abs() < 1e-9 && (r.alpha_nw - 0.25).abs() < 1e-9);
        for se in [r.se_nw, r.se_ls, r.se_alpha_nw, r.se_alpha_ls] {
            assert!(se < 1e-12, "se {se}");
        }
    }
}

#[test]
fn zero_beta_stock_is_found_low_with_a_long_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let idx = index_series(&mut rng, 700);
    let stock = with_beta(&mut rng, &idx, 0.0, 0.0, 2.0);
    let rp = panel(&idx, vec![("FLAT", stock)]);
    let rate = |window| {
        let rolled = roll_fit(&rp, &config(window)).unwrap();
        let hits = rolled
            .rows
            .iter()
            .filter(|r| r.rejects(BetaTest::Low, EstimatorKind::NormWeighted, rolled.config.crit))
            .count();
        hits as f64 / rolled.rows.len() as f64
    };
    let long = rate(500);
    assert!(long >= 0.99, "power {long}");
    assert!(long >= rate(30));
}

#[test]
fn missing_returns_are_skipped_not_imputed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let idx = index_series(&mut rng, 80);
    let stock = with_beta(&mut rng, &idx, 0.0, 1.0, 1.0);
    let mut rp = panel(&idx, vec![("GAP", stock)]);
    let c = rp.column("GAP").unwrap();
    rp.r[45][c] = None;
    let rolled = roll_fit(&rp, &config(40)).unwrap();
    // Ends run 40..=79 and those from 45 on include week 45.
    assert_eq!(rolled.rows.len(), 5);
    assert_eq!(rolled.skips.len(), 35);
}

fn row(ticker: &str, beta: f64, se: f64) -> RollingRow {
    RollingRow {
        window_end: friday(0),
        ticker: ticker.into(),
        beta_nw: beta,
        beta_ls: beta,
        se_nw: se,
        se_ls: se,
        alpha_nw: 0.1,
        alpha_ls: 0.1,
        se_alpha_nw: 0.2,
        se_alpha_ls: 0.2,
        t_high_nw: 0.0,
        t_high_ls: 0.0,
        t_low_nw: 0.0,
        t_low_ls: 0.0,
    }
}

#[test]
fn decision_counts_over_three_tickers() {
    let mut rows = vec![row("A", 1.0, 0.1), row("B", 1.0, 0.1), row("C", 1.0, 0.1)];
    let decisions = [(true, true), (true, false), (false, true)];
    for (r, (nw, ls)) in rows.iter_mut().zip(decisions) {
        r.t_high_nw = if nw { 3.0 } else { 0.0 };
        r.t_high_ls = if ls { 3.0 } else { 0.0 };
        r.t_low_nw = if nw { -3.0 } else { 0.0 };
        r.t_low_ls = if ls { -3.0 } else { 0.0 };
    }
    for test in [BetaTest::High, BetaTest::Low] {
        let c = test_counts(&rows, test, 1.6449);
        assert_eq!((c.reject_nw, c.reject_ls, c.agree), (2, 2, 1));
    }
}

fn synthetic_rolling(series: &[Vec<f64>]) -> RollingPanel {
    let ends: Vec<NaiveDate> = (0..series[0].len()).map(friday).collect();
    let mut rows = Vec::new();
    for (w, &end) in ends.iter().enumerate() {
        for (i, s) in series.iter().enumerate() {
            let mut r = row(&format!("T{i:02}"), s[w], 0.5 * s[w]);
            r.window_end = end;
            rows.push(r);
        }
    }
    RollingPanel {
        config: config(30),
        window_ends: ends,
        universe: (0..series.len()).map(|i| format!("T{i:02}")).collect(),
        rows,
        skips: Vec::new(),
    }
}

#[test]
fn identical_tickers_give_degenerate_quantiles() {
    let rp = synthetic_rolling(&vec![vec![1.3, 1.3]; 12]);
    let cs = cross_section_summary(&rp, friday(1)).unwrap();
    assert_eq!(cs.fitted, 12);
    for q in &cs.rows {
        assert!(q.q10 == q.q50 && q.q50 == q.q90);
        assert!((q.mean - q.q50).abs() < 1e-12);
    }
    let few = synthetic_rolling(&vec![vec![1.0, 1.0]; 9]);
    assert!(cross_section_summary(&few, friday(0)).is_err());
}

#[test]
fn roughness_of_constant_and_alternating_series() {
    let flat = roughness(&synthetic_rolling(&vec![vec![0.9; 20]; 3])).unwrap();
    assert_eq!((flat.beta_nw, flat.beta_ls, flat.se_nw, flat.se_ls), (0.0, 0.0, 0.0, 0.0));

    let alt: Vec<f64> = (0..20).map(|t| if t % 2 == 0 { 1.2 } else { 1.21 }).collect();
    let r = roughness(&synthetic_rolling(&vec![alt.clone(); 3])).unwrap();
    assert!((r.beta_nw - 1.0).abs() < 1e-9 && (r.beta_ls - 1.0).abs() < 1e-9);
    assert!((rms_step_change(&alt).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn ar1_roughness_scales_with_innovation_sd() {
    let ar1 = |sd: f64, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 1.0;
        (0..200_000)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = 1.0 + 0.9 * (x - 1.0) + sd * e;
                x
            })
            .collect::<Vec<f64>>()
    };
    let base = rms_step_change(&ar1(0.01, 6)).unwrap();
    for k in [2.0, 5.0] {
        let ratio = rms_step_change(&ar1(0.01 * k, 7)).unwrap() / base;
        assert!((ratio / k - 1.0).abs() < 0.02, "ratio {ratio} for {k}");
    }
}

#[test]
fn index_clones_leave_portfolios_in_cash() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let idx = index_series(&mut rng, 90);
    let rp = panel(&idx, vec![("C1", idx.clone()), ("C2", idx.clone())]);
    let rolled = roll_fit(&rp, &config(40)).unwrap();
    let report = select_and_backtest(&rolled, &rp, &BacktestOptions::default()).unwrap();
    assert_eq!(report.periods.len(), 49);
    for p in &report.periods {
        assert!(p.members.values().all(|m| m.is_empty()));
        assert_eq!(p.returns[&Strategy::LowNW], 0.0);
    }
    let held: Vec<f64> = report.periods.iter().map(|p| idx[(p.held - friday(0)).num_weeks() as usize]).collect();
    let ix = report.stats(Strategy::Index);
    let m = held.iter().sum::<f64>() / held.len() as f64;
    assert!((ix.mean - m).abs() < 1e-12);
    assert!((ix.beta - 1.0).abs() < 1e-10 && ix.alpha.abs() < 1e-10);
    let low = report.stats(Strategy::LowNW);
    assert_eq!((low.mean, low.sd, low.share, low.delta_share), (0.0, 0.0, 0.0, 0.0));
    assert!(low.sharpe.is_none());
}

#[test]
fn single_selected_stock_is_held_one_week_later() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let idx = index_series(&mut rng, 120);
    let stock = with_beta(&mut rng, &idx, 0.0, 2.5, 0.05);
    let rp = panel(&idx, vec![("HI", stock.clone())]);
    let rolled = roll_fit(&rp, &config(50)).unwrap();
    let report = select_and_backtest(&rolled, &rp, &BacktestOptions::default()).unwrap();
    for (k, p) in report.periods.iter().enumerate() {
        assert_eq!(p.members[&Strategy::HighNW], vec!["HI".to_string()]);
        assert_eq!(p.returns[&Strategy::HighNW], stock[50 + k + 1]);
        assert_eq!(p.held, friday(50 + k + 1));
    }
    assert_eq!(report.stats(Strategy::HighNW).share, 1.0);
    assert_eq!(report.stats(Strategy::HighNW).delta_share, 0.0);
}

#[test]
fn shares_account_for_every_membership_week() {
    let rp = mixed_universe(10, 200);
    let rolled = roll_fit(&rp, &config(60)).unwrap();
    let report = select_and_backtest(&rolled, &rp, &BacktestOptions::default()).unwrap();
    let periods = report.periods.len() as f64;
    let mut moved_somewhere = false;
    for s in [Strategy::LowNW, Strategy::LowLS, Strategy::HighNW, Strategy::HighLS] {
        let membership: usize = report.periods.iter().map(|p| p.members[&s].len()).sum();
        let from_share: f64 = report.stats(s).share * periods * 15.0;
        assert!((from_share - membership as f64).abs() < 1e-9, "{s:?}");
        let st = report.stats(s);
        assert!((0.0..=1.0).contains(&st.share) && (0.0..=1.0).contains(&st.delta_share));
        moved_somewhere |= st.delta_share > 0.0;
        if let Some(sr) = st.sharpe {
            assert!((sr - st.mean / st.sd).abs() < 1e-15);
        }
    }
    assert!(moved_somewhere);
    assert!(report.periods.iter().all(|p| p.universe == 15));
}

#[test]
fn turnover_counts_moves_in_both_directions() {
    let prev: BTreeSet<&str> = ["a", "b", "c"].into();
    let cur: BTreeSet<&str> = ["b", "c", "d"].into();
    let share = normreg::finlab::symmetric_difference_share(&prev, &cur, 10);
    assert!((share - 0.2).abs() < 1e-15);
}

#[test]
fn selection_ignores_future_returns() {
    let rp = mixed_universe(11, 220);
    let full = select_and_backtest(&roll_fit(&rp, &config(60)).unwrap(), &rp, &BacktestOptions::default()).unwrap();
    for cut in [100, 150, 200] {
        // Keep weeks through the holding week of the period formed at `cut`.
        let mut short = rp.clone();
        short.week_ends.truncate(cut + 2);
        short.r.truncate(cut + 2);
        let mut scrambled = rp.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(cut as u64);
        for w in cut + 2..scrambled.weeks() {
            for v in scrambled.r[w].iter_mut() {
                *v = Some(rng.random_range(-20.0..20.0));
            }
        }
        for variant in [short, scrambled] {
            let rolled = roll_fit(&variant, &config(60)).unwrap();
            let report = select_and_backtest(&rolled, &variant, &BacktestOptions::default()).unwrap();
            let upto = |r: &normreg::finlab::BacktestReport| {
                r.periods.iter().filter(|p| p.formed <= friday(cut)).cloned().collect::<Vec<_>>()
            };
            assert_eq!(upto(&full), upto(&report));
        }
    }
}

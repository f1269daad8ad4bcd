//! Rolling betas and the high/low beta backtest on the bundled three-ticker
//! price file.

use std::path::Path;

use normreg::finlab::{
    display_sig, ingest_prices, roll_fit, select_and_backtest, weekly_returns, BacktestOptions, RollConfig, Strategy,
};

fn main() -> Result<(), normreg::error::Error> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/three_tickers.csv");
    let prices = ingest_prices(&path, "IDX")?;
    let returns = weekly_returns(&prices, false);
    let cfg = RollConfig {
        window: 30,
        ..RollConfig::default()
    };
    let rolled = roll_fit(&returns, &cfg)?;
    println!("{} weeks, {} rolling fits, {} skipped", returns.weeks(), rolled.rows.len(), rolled.skips.len());
    if let Some(last) = rolled.window_ends.last() {
        for r in rolled.rows_at(*last) {
            println!("{last} {}: beta nw {:.3} ({:.3}), ls {:.3} ({:.3})", r.ticker, r.beta_nw, r.se_nw, r.beta_ls, r.se_ls);
        }
    }

    let report = select_and_backtest(&rolled, &returns, &BacktestOptions::default())?;
    println!("strategy      E      sd  Sharpe   alpha    beta  Share |dShare|");
    for s in Strategy::ALL {
        let st = report.stats(s);
        let sharpe = st.sharpe.map_or("-".to_string(), |v| display_sig(v, 2));
        println!(
            "{:<8} {:>6.3} {:>6.2} {:>7} {:>7.3} {:>7.3} {:>6.2} {:>7.3}",
            format!("{s:?}"),
            st.mean,
            st.sd,
            sharpe,
            st.alpha,
            st.beta,
            st.share,
            st.delta_share
        );
    }
    let r = &report.roughness;
    println!("roughness: beta nw {:.2}, ls {:.2}; se nw {:.2}, ls {:.2}", r.beta_nw, r.beta_ls, r.se_nw, r.se_ls);
    Ok(())
}

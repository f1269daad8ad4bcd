//! Weekly single-index regressions on a price panel: rolling betas under
//! both estimators, high/low beta tests, and the portfolios they select.

mod backtest;
mod prices;
mod returns;
mod rolling;

pub use backtest::{
    cross_section_summary, display_sig, rms_step_change, roughness, select_and_backtest, sharpe,
    symmetric_difference_share, test_counts, BacktestOptions, BacktestReport, BacktestSettings, CrossSection,
    Period, QuantileRow, Roughness, Strategy, StrategyStats, TestCounts,
};
pub use prices::{ingest_prices, read_prices, PricePanel};
pub use returns::{weekly_returns, ReturnPanel};
pub use rolling::{market_fit, roll_fit, BetaTest, MarketFit, RollConfig, RollingPanel, RollingRow, Skip, Z_CRIT_5};

//! Weekly percentage returns on ISO weeks.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::finlab::prices::PricePanel;

/// Weeks × tickers matrix of `100·(P_t − P_{t−1})/P_{t−1}`. Row 0 never has
/// a return; missing entries stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPanel {
    /// Last trading date observed in each ISO week.
    pub week_ends: Vec<NaiveDate>,
    /// Sorted; lookups binary-search it.
    pub tickers: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
    pub index_ticker: String,
}

impl ReturnPanel {
    pub fn column(&self, ticker: &str) -> Option<usize> {
        self.tickers.binary_search_by(|t| t.as_str().cmp(ticker)).ok()
    }

    pub fn index_column(&self) -> usize {
        self.column(&self.index_ticker).expect("index ticker is part of the panel")
    }

    pub fn weeks(&self) -> usize {
        self.week_ends.len()
    }

    /// Every ticker except the index.
    pub fn universe(&self) -> impl Iterator<Item = (usize, &str)> {
        self.tickers
            .iter()
            .enumerate()
            .filter(move |(_, t)| **t != self.index_ticker)
            .map(|(i, t)| (i, t.as_str()))
    }
}

fn iso_monday(d: NaiveDate) -> NaiveDate {
    let w = d.iso_week();
    NaiveDate::from_isoywd_opt(w.year(), w.week(), Weekday::Mon).expect("valid ISO week")
}

/// Samples each ticker at the last trading date of every ISO week present in
/// the panel and differences consecutive samples.
///
/// Two kinds of hole produce a missing return: a calendar week with no
/// trading dates at all, and a ticker without a price in the current or the
/// previous week. With `allow_gaps` the return instead runs from the most
/// recent earlier weekly price of that ticker.
pub fn weekly_returns(pp: &PricePanel, allow_gaps: bool) -> ReturnPanel {
    let k = pp.tickers.len();
    let mut mondays: Vec<NaiveDate> = Vec::new();
    let mut week_ends: Vec<NaiveDate> = Vec::new();
    let mut prices: Vec<Vec<Option<f64>>> = Vec::new();
    for (d, row) in pp.dates.iter().zip(&pp.adj_close) {
        let monday = iso_monday(*d);
        if mondays.last() != Some(&monday) {
            mondays.push(monday);
            week_ends.push(*d);
            prices.push(vec![None; k]);
        }
        *week_ends.last_mut().unwrap() = *d;
        let week = prices.last_mut().unwrap();
        for (slot, p) in week.iter_mut().zip(row) {
            if p.is_some() {
                *slot = *p;
            }
        }
    }

    let mut r = vec![vec![None; k]; week_ends.len()];
    for s in 0..k {
        // (week index, price) of the latest weekly price seen so far
        let mut last: Option<(usize, f64)> = None;
        for w in 0..week_ends.len() {
            let Some(p) = prices[w][s] else { continue };
            if let Some((lw, lp)) = last {
                let adjacent = lw + 1 == w && mondays[w] - mondays[lw] == Duration::days(7);
                if adjacent || allow_gaps {
                    r[w][s] = Some(100.0 * (p - lp) / lp);
                }
            }
            last = Some((w, p));
        }
    }

    ReturnPanel {
        week_ends,
        tickers: pp.tickers.clone(),
        r,
        index_ticker: pp.index_ticker.clone(),
    }
}

//! Adjusted-close price panels read from long-format CSV.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dates × tickers matrix of adjusted closes. Missing prices are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    /// Sorted; includes the index ticker.
    pub tickers: Vec<String>,
    /// `adj_close[date][ticker]`.
    pub adj_close: Vec<Vec<Option<f64>>>,
    pub index_ticker: String,
}

impl PricePanel {
    pub fn column(&self, ticker: &str) -> Option<usize> {
        self.tickers.binary_search_by(|t| t.as_str().cmp(ticker)).ok()
    }

    pub fn index_column(&self) -> usize {
        self.column(&self.index_ticker).expect("index ticker is part of the panel")
    }

    pub fn price(&self, date: usize, ticker: usize) -> Option<f64> {
        self.adj_close[date][ticker]
    }
}

pub fn ingest_prices(path: &Path, index_ticker: &str) -> Result<PricePanel> {
    let file = std::fs::File::open(path)?;
    read_prices(file, index_ticker)
}

/// Parses `date,ticker,adj_close` rows. Row order is irrelevant; dates and
/// tickers are sorted in the result.
pub fn read_prices<R: Read>(reader: R, index_ticker: &str) -> Result<PricePanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    let fields: Vec<&str> = header.iter().collect();
    if fields != ["date", "ticker", "adj_close"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header date,ticker,adj_close, found {}", fields.join(",")),
        });
    }

    let mut cells: BTreeMap<(NaiveDate, String), (f64, usize)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let date_str = &rec[0];
        let ticker = &rec[1];
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {date_str:?}: {e}"),
        })?;
        if ticker.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty ticker".into(),
            });
        }
        let price: f64 = rec[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad price {:?}", &rec[2]),
        })?;
        if !price.is_finite() || price <= 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("price must be positive and finite, got {price}"),
            });
        }
        if cells.insert((date, ticker.to_string()), (price, line)).is_some() {
            return Err(Error::DuplicateRow {
                line,
                date: date_str.to_string(),
                ticker: ticker.to_string(),
            });
        }
    }
    if cells.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no price rows".into(),
        });
    }

    let mut dates: Vec<NaiveDate> = cells.keys().map(|(d, _)| *d).collect();
    dates.dedup();
    let mut tickers: Vec<String> = cells.keys().map(|(_, t)| t.clone()).collect();
    tickers.sort();
    tickers.dedup();

    let mut adj_close = vec![vec![None; tickers.len()]; dates.len()];
    let mut di = 0;
    for ((date, ticker), (price, _)) in &cells {
        while dates[di] != *date {
            di += 1;
        }
        let ti = tickers.binary_search(ticker).expect("ticker collected above");
        adj_close[di][ti] = Some(*price);
    }

    let Ok(ix) = tickers.binary_search_by(|t| t.as_str().cmp(index_ticker)) else {
        return Err(Error::MissingIndex {
            ticker: index_ticker.to_string(),
            date: dates[0].to_string(),
        });
    };
    if let Some(d) = dates.iter().zip(&adj_close).find(|(_, row)| row[ix].is_none()) {
        return Err(Error::MissingIndex {
            ticker: index_ticker.to_string(),
            date: d.0.to_string(),
        });
    }

    Ok(PricePanel {
        dates,
        tickers,
        adj_close,
        index_ticker: index_ticker.to_string(),
    })
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::Parse { line, message },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PricePanel> {
        read_prices(text.as_bytes(), "SPY")
    }

    #[test]
    fn two_dates_one_ticker() {
        let pp = parse("date,ticker,adj_close\n2020-01-03,SPY,100\n2020-01-02,SPY,99.5\n").unwrap();
        assert_eq!(pp.dates.len(), 2);
        assert_eq!(pp.tickers, ["SPY"]);
        assert_eq!(pp.price(0, 0), Some(99.5));
    }

    #[test]
    fn duplicate_row_reports_line() {
        let err = parse("date,ticker,adj_close\n2020-01-02,SPY,1\n2020-01-02,SPY,2\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateRow { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_values_are_parse_errors() {
        for (text, line) in [
            ("date,ticker,adj_close\n2020-01-02,SPY,0\n", 2),
            ("date,ticker,adj_close\n2020-01-02,SPY,1\n2020-01-03,SPY,-4\n", 3),
            ("date,ticker,adj_close\n02/01/2020,SPY,1\n", 2),
            ("date,ticker,adj_close\n2020-01-02,SPY,abc\n", 2),
            ("day,ticker,adj_close\n2020-01-02,SPY,1\n", 1),
        ] {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn index_must_cover_every_date() {
        let err = parse("date,ticker,adj_close\n2020-01-02,SPY,1\n2020-01-03,AAA,2\n").unwrap_err();
        assert!(matches!(err, Error::MissingIndex { ref date, .. } if date == "2020-01-03"));
        let err = parse("date,ticker,adj_close\n2020-01-02,AAA,1\n").unwrap_err();
        assert!(matches!(err, Error::MissingIndex { .. }));
    }
}

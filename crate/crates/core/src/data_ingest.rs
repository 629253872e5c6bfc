//! CSV ingestion for price and macro snapshots, calendar alignment by forward
//! fill, and assembly of the merged ticker-day panel.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::ops::RangeInclusive;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub ticker: String,
    pub date: NaiveDate,
    pub close: f64,
    pub volume: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroKind {
    InterestRate,
    Cpi,
    Unemployment,
}

impl MacroKind {
    fn validate(self, value: f64) -> std::result::Result<(), String> {
        if !value.is_finite() {
            return Err(format!("non-finite {self:?} value"));
        }
        match self {
            MacroKind::InterestRate => Ok(()),
            MacroKind::Cpi if value <= 0.0 => Err(format!("cpi must be positive, got {value}")),
            MacroKind::Unemployment if !(0.0..=100.0).contains(&value) => Err(format!(
                "unemployment must lie in [0, 100], got {value}"
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroObservation {
    pub date: NaiveDate,
    pub value: f64,
    pub kind: MacroKind,
}

/// Which price column becomes the modeling target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceField {
    #[default]
    Close,
    /// Requires an extra `adj_close` column after `volume`.
    AdjClose,
}

fn parse_date(raw: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(raw.trim(), DATE_FORMAT)
        .map_err(|e| format!("bad date `{raw}`: {e}"))
}

fn parse_f64(raw: &str, column: &str) -> std::result::Result<f64, String> {
    raw.trim()
        .parse::<f64>()
        .map_err(|e| format!("bad {column} `{raw}`: {e}"))
}

fn parse_volume(raw: &str) -> std::result::Result<u64, String> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    let v = parse_f64(raw, "volume")?;
    if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
        return Err(format!("volume must be a non-negative integer, got `{raw}`"));
    }
    Ok(v as u64)
}

fn check_header(
    source: &str,
    headers: &csv::StringRecord,
    allowed: &[&[&str]],
) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if allowed.iter().any(|a| *a == got.as_slice()) {
        return Ok(());
    }
    Err(Error::Parse {
        path: source.to_string(),
        line: 1,
        message: format!(
            "unexpected header `{}`, expected `{}`",
            got.join(","),
            allowed[0].join(",")
        ),
    })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader)
}

/// Load `ticker,date,close,volume` rows grouped by ticker and sorted by date.
pub fn load_price_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<PriceBar>>> {
    load_price_csv_with(path, PriceField::Close)
}

pub fn load_price_csv_with(
    path: impl AsRef<Path>,
    field: PriceField,
) -> Result<BTreeMap<String, Vec<PriceBar>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_price_csv(file, &path.display().to_string(), field)
}

pub fn read_price_csv<R: Read>(
    reader: R,
    source: &str,
    field: PriceField,
) -> Result<BTreeMap<String, Vec<PriceBar>>> {
    const PLAIN: &[&str] = &["ticker", "date", "close", "volume"];
    const ADJUSTED: &[&str] = &["ticker", "date", "close", "volume", "adj_close"];

    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    match field {
        PriceField::Close => check_header(source, &headers, &[PLAIN, ADJUSTED])?,
        PriceField::AdjClose => check_header(source, &headers, &[ADJUSTED])?,
    }
    let width = headers.len();

    // line number kept for the duplicate-key message
    let mut grouped: BTreeMap<String, Vec<(PriceBar, u64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        if record.len() != width {
            return Err(fail(format!(
                "expected {width} fields, found {}",
                record.len()
            )));
        }
        let ticker = record[0].trim().to_string();
        if ticker.is_empty() {
            return Err(fail("empty ticker".into()));
        }
        let date = parse_date(&record[1]).map_err(fail)?;
        let close = match field {
            PriceField::Close => parse_f64(&record[2], "close").map_err(fail)?,
            PriceField::AdjClose => parse_f64(&record[4], "adj_close").map_err(fail)?,
        };
        let volume = parse_volume(&record[3]).map_err(fail)?;
        if !(close > 0.0) || !close.is_finite() {
            return Err(Error::Validation(format!(
                "{source}: line {line}: close must be positive, got {close}"
            )));
        }
        grouped.entry(ticker.clone()).or_default().push((
            PriceBar {
                ticker,
                date,
                close,
                volume,
            },
            line,
        ));
    }

    let mut out = BTreeMap::new();
    for (ticker, mut bars) in grouped {
        bars.sort_by_key(|(b, _)| b.date);
        for pair in bars.windows(2) {
            if pair[0].0.date == pair[1].0.date {
                return Err(Error::Validation(format!(
                    "{source}: line {}: duplicate row for ({ticker}, {})",
                    pair[0].1.max(pair[1].1),
                    pair[1].0.date
                )));
            }
        }
        out.insert(ticker, bars.into_iter().map(|(b, _)| b).collect());
    }
    Ok(out)
}

/// Load a `date,value` macro series. Gaps are kept; filling is done by
/// [`forward_fill`].
pub fn load_macro_csv(path: impl AsRef<Path>, kind: MacroKind) -> Result<Vec<MacroObservation>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_macro_csv(file, &path.display().to_string(), kind)
}

pub fn read_macro_csv<R: Read>(
    reader: R,
    source: &str,
    kind: MacroKind,
) -> Result<Vec<MacroObservation>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    check_header(source, &headers, &[&["date", "value"]])?;

    let mut obs: Vec<(MacroObservation, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        if record.len() != 2 {
            return Err(fail(format!("expected 2 fields, found {}", record.len())));
        }
        let date = parse_date(&record[0]).map_err(fail)?;
        let value = parse_f64(&record[1], "value").map_err(fail)?;
        kind.validate(value)
            .map_err(|m| Error::Validation(format!("{source}: line {line}: {m}")))?;
        obs.push((MacroObservation { date, value, kind }, line));
    }
    obs.sort_by_key(|(o, _)| o.date);
    for pair in obs.windows(2) {
        if pair[0].0.date == pair[1].0.date {
            return Err(Error::Validation(format!(
                "{source}: line {}: duplicate date {}",
                pair[0].1.max(pair[1].1),
                pair[1].0.date
            )));
        }
    }
    Ok(obs.into_iter().map(|(o, _)| o).collect())
}

/// Step-function alignment: each calendar date takes the latest observation
/// dated on or before it.
pub fn forward_fill(
    series: &[MacroObservation],
    calendar: &[NaiveDate],
) -> Result<Vec<MacroObservation>> {
    let Some(first) = series.first() else {
        return match calendar.first() {
            None => Ok(Vec::new()),
            Some(&date) => Err(Error::Validation(format!(
                "cannot fill {date}: macro series is empty"
            ))),
        };
    };
    let mut out = Vec::with_capacity(calendar.len());
    let mut cursor = 0usize;
    for &date in calendar {
        if date < first.date {
            return Err(Error::Coverage {
                date,
                first: first.date,
            });
        }
        while cursor + 1 < series.len() && series[cursor + 1].date <= date {
            cursor += 1;
        }
        // calendar is expected ascending; fall back to a search otherwise
        if series[cursor].date > date {
            cursor = series.partition_point(|o| o.date <= date) - 1;
        }
        out.push(MacroObservation {
            date,
            value: series[cursor].value,
            kind: series[cursor].kind,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub ticker: String,
    pub date: NaiveDate,
    pub close: f64,
    pub volume: u64,
    pub int_rate: f64,
    pub cpi: f64,
    pub unemp: f64,
}

/// Merged ticker-day table, sorted by (ticker, date).
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    rows: Vec<PanelRow>,
    calendar: Vec<NaiveDate>,
    tickers: Vec<String>,
    ranges: Vec<(usize, usize)>,
    /// Raw interest-rate observations, unfiltered by year, so that lead
    /// features can look past the end of the panel.
    rates: Vec<MacroObservation>,
}

impl Panel {
    fn from_sorted_rows(rows: Vec<PanelRow>, rates: Vec<MacroObservation>) -> Self {
        let calendar: Vec<NaiveDate> = rows
            .iter()
            .map(|r| r.date)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut tickers = Vec::new();
        let mut ranges = Vec::new();
        let mut start = 0;
        for i in 1..=rows.len() {
            if i == rows.len() || rows[i].ticker != rows[start].ticker {
                tickers.push(rows[start].ticker.clone());
                ranges.push((start, i));
                start = i;
            }
        }
        Panel {
            rows,
            calendar,
            tickers,
            ranges,
            rates,
        }
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn rates(&self) -> &[MacroObservation] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Date-ordered rows of one ticker.
    pub fn ticker_rows(&self, ticker: &str) -> Result<&[PanelRow]> {
        let idx = self
            .tickers
            .binary_search_by(|t| t.as_str().cmp(ticker))
            .map_err(|_| Error::UnknownTicker(ticker.to_string()))?;
        let (lo, hi) = self.ranges[idx];
        Ok(&self.rows[lo..hi])
    }

    pub fn closes(&self, ticker: &str) -> Result<Vec<f64>> {
        Ok(self.ticker_rows(ticker)?.iter().map(|r| r.close).collect())
    }

    /// Restrict to a subset of tickers; the calendar shrinks accordingly.
    pub fn select_tickers(&self, tickers: &[String]) -> Result<Panel> {
        let mut keep: Vec<&String> = tickers.iter().collect();
        keep.sort();
        keep.dedup();
        let mut rows = Vec::new();
        for t in keep {
            rows.extend_from_slice(self.ticker_rows(t)?);
        }
        if rows.is_empty() {
            return Err(Error::invalid("no tickers selected"));
        }
        Ok(Panel::from_sorted_rows(rows, self.rates.clone()))
    }
}

/// Merge per-ticker bars with forward-filled macro series, keeping trading
/// days whose year falls in `years`.
pub fn build_panel(
    prices: &BTreeMap<String, Vec<PriceBar>>,
    rates: &[MacroObservation],
    cpi: &[MacroObservation],
    unemp: &[MacroObservation],
    years: RangeInclusive<i32>,
) -> Result<Panel> {
    let in_range = |d: &NaiveDate| years.contains(&d.year());
    let calendar: Vec<NaiveDate> = prices
        .values()
        .flatten()
        .map(|b| b.date)
        .filter(in_range)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if calendar.is_empty() {
        return Err(Error::EmptyPanel(*years.start(), *years.end()));
    }

    let rate_daily = forward_fill(rates, &calendar)?;
    let cpi_daily = forward_fill(cpi, &calendar)?;
    let unemp_daily = forward_fill(unemp, &calendar)?;
    let at = |d: NaiveDate| calendar.binary_search(&d).expect("date in calendar");

    let mut rows = Vec::new();
    for (ticker, bars) in prices {
        for bar in bars.iter().filter(|b| in_range(&b.date)) {
            let i = at(bar.date);
            rows.push(PanelRow {
                ticker: ticker.clone(),
                date: bar.date,
                close: bar.close,
                volume: bar.volume,
                int_rate: rate_daily[i].value,
                cpi: cpi_daily[i].value,
                unemp: unemp_daily[i].value,
            });
        }
    }
    // BTreeMap iteration already yields tickers in order; bars are date-sorted
    // by the loader, but callers may hand-build the map.
    rows.sort_by(|a, b| a.ticker.cmp(&b.ticker).then(a.date.cmp(&b.date)));
    Ok(Panel::from_sorted_rows(rows, rates.to_vec()))
}

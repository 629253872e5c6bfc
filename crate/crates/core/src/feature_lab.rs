//! Design-matrix construction: lagged price, rolling statistics of the lagged
//! price, macro levels, interest-rate leads, and one-hot calendar/ticker
//! indicators. Produces the baseline and proposed variants on identical rows.

use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_ingest::{forward_fill, MacroObservation, Panel, PanelRow, DATE_FORMAT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    Proposed,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Proposed => "proposed",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "proposed" => Ok(Variant::Proposed),
            other => Err(Error::invalid(format!("unknown variant `{other}`"))),
        }
    }
}

/// Whether lead offsets count calendar days or trading-calendar rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadMode {
    #[default]
    Calendar,
    Trading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RollingStat {
    Mean,
    Std,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    /// Trading-day lag of the close; also the base lag of every rolling window.
    pub lag_days: usize,
    pub lead_days: Vec<usize>,
    pub rolling_mean_windows: Vec<usize>,
    pub rolling_std_windows: Vec<usize>,
    pub include_month_indicators: bool,
    pub include_weekday_indicators: bool,
    pub include_ticker_indicators: bool,
    pub lead_mode: LeadMode,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            lag_days: 28,
            lead_days: vec![7, 14, 21, 28],
            rolling_mean_windows: vec![7, 30, 60, 90, 180],
            rolling_std_windows: vec![7, 30],
            include_month_indicators: true,
            include_weekday_indicators: true,
            include_ticker_indicators: true,
            lead_mode: LeadMode::Calendar,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lag_days == 0 {
            return Err(Error::invalid("lag_days must be at least 1"));
        }
        if self.lead_days.iter().any(|&k| k == 0) {
            return Err(Error::invalid("lead days must be at least 1"));
        }
        if self.rolling_mean_windows.iter().any(|&w| w == 0) {
            return Err(Error::invalid("rolling mean windows must be at least 1"));
        }
        if self.rolling_std_windows.iter().any(|&w| w < 2) {
            return Err(Error::invalid("rolling std windows must be at least 2"));
        }
        Ok(())
    }

    /// Names of the macro and lead columns that distinguish the proposed variant.
    pub fn proposed_names(&self) -> Vec<String> {
        let mut names = vec!["cpi".to_string(), "unemp".into(), "int_rate".into()];
        names.extend(self.lead_days.iter().map(|k| lead_name(*k)));
        names
    }

    pub fn feature_names(&self, variant: Variant, tickers: &[String]) -> Vec<String> {
        let mut names = vec!["volume".to_string()];
        if variant == Variant::Proposed {
            names.extend(self.proposed_names());
        }
        names.push(format!("lag_t{}", self.lag_days));
        names.extend(
            self.rolling_mean_windows
                .iter()
                .map(|w| format!("rolling_mean_t{w}")),
        );
        names.extend(
            self.rolling_std_windows
                .iter()
                .map(|w| format!("rolling_std_t{w}")),
        );
        if self.include_month_indicators {
            names.extend(MONTHS.iter().map(|m| m.to_string()));
        }
        if self.include_weekday_indicators {
            names.extend(WEEKDAYS.iter().map(|d| d.to_string()));
        }
        if self.include_ticker_indicators {
            names.extend(tickers.iter().map(|t| ticker_indicator(t)));
        }
        names
    }
}

pub fn lead_name(k: usize) -> String {
    format!("lead_t{k}_int_rate")
}

pub fn ticker_indicator(ticker: &str) -> String {
    format!("ticker_{ticker}")
}

pub const MONTHS: [&str; 12] = [
    "month_1", "month_2", "month_3", "month_4", "month_5", "month_6", "month_7", "month_8",
    "month_9", "month_10", "month_11", "month_12",
];
pub const WEEKDAYS: [&str; 5] = ["dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri"];

/// Prefixes of one-hot groups whose members sum to one on every row.
pub const ONE_HOT_PREFIXES: [&str; 3] = ["month_", "dow_", "ticker_"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub ticker: String,
    pub date: NaiveDate,
}

/// Engineered design matrix (row-major) with its close-price target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    keys: Vec<RowKey>,
    target: Vec<f64>,
    names: Vec<String>,
    values: Vec<f64>,
    variant: Variant,
}

impl FeatureFrame {
    pub fn new(
        keys: Vec<RowKey>,
        target: Vec<f64>,
        names: Vec<String>,
        values: Vec<f64>,
        variant: Variant,
    ) -> Result<Self> {
        if keys.len() != target.len() || values.len() != keys.len() * names.len() {
            return Err(Error::invalid(format!(
                "frame shape mismatch: {} keys, {} targets, {} names, {} values",
                keys.len(),
                target.len(),
                names.len(),
                values.len()
            )));
        }
        if values.iter().chain(&target).any(|v| !v.is_finite()) {
            return Err(Error::Validation("frame contains non-finite values".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::invalid(format!("duplicate feature name `{dup}`")));
        }
        Ok(FeatureFrame {
            keys,
            target,
            names,
            values,
            variant,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[RowKey] {
        &self.keys
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.names.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.names.len() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.column(j))
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> FeatureFrame {
        let mut values = Vec::with_capacity(indices.len() * self.names.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureFrame {
            keys: indices.iter().map(|&i| self.keys[i].clone()).collect(),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            names: self.names.clone(),
            values,
            variant: self.variant,
        }
    }

    /// `ticker,date,target,<features...>`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["ticker".to_string(), "date".into(), "target".into()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let k = &self.keys[i];
            let mut rec = vec![
                k.ticker.clone(),
                k.date.format(DATE_FORMAT).to_string(),
                self.target[i].to_string(),
            ];
            rec.extend(self.row(i).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<frame>", e))?;
        Ok(())
    }
}

/// Interest rate forward-filled onto every calendar day between the first
/// and last observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyRates {
    start: NaiveDate,
    values: Vec<f64>,
}

impl DailyRates {
    pub fn from_observations(obs: &[MacroObservation]) -> Result<Self> {
        let (Some(first), Some(last)) = (obs.first(), obs.last()) else {
            return Err(Error::Validation("interest-rate series is empty".into()));
        };
        let days: Vec<NaiveDate> = first.date.iter_days().take_while(|d| *d <= last.date).collect();
        let filled = forward_fill(obs, &days)?;
        Ok(DailyRates {
            start: first.date,
            values: filled.into_iter().map(|o| o.value).collect(),
        })
    }

    pub fn at(&self, date: NaiveDate) -> Option<f64> {
        let offset = (date - self.start).num_days();
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied()
    }

    pub fn last_date(&self) -> NaiveDate {
        self.start + Duration::days(self.values.len() as i64 - 1)
    }
}

/// Rate `k` calendar days after `date`; `None` past the end of coverage.
pub fn lead_interest_rate(rates: &DailyRates, date: NaiveDate, k: usize) -> Option<f64> {
    rates.at(date + Duration::days(k as i64))
}

fn shift(values: &[f64], k: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| if i >= k { Some(values[i - k]) } else { None })
        .collect()
}

/// Close `k` trading rows earlier within the ticker.
pub fn lag_feature(panel: &Panel, ticker: &str, k: usize) -> Result<Vec<Option<f64>>> {
    if k == 0 {
        return Err(Error::invalid("lag must be at least 1"));
    }
    Ok(shift(&panel.closes(ticker)?, k))
}

/// Trailing-window statistic over a partially missing series; missing until
/// `window` consecutive values are present. Std uses the n−1 denominator.
pub fn rolling_over(values: &[Option<f64>], window: usize, stat: RollingStat) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    if window == 0 || (stat == RollingStat::Std && window < 2) {
        return out;
    }
    for i in (window - 1)..values.len() {
        let span = &values[i + 1 - window..=i];
        if span.iter().any(Option::is_none) {
            continue;
        }
        let xs = span.iter().map(|v| v.unwrap());
        let mean = xs.clone().sum::<f64>() / window as f64;
        out[i] = Some(match stat {
            RollingStat::Mean => mean,
            RollingStat::Std => {
                let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
                (ss / (window - 1) as f64).sqrt()
            }
        });
    }
    out
}

pub fn rolling_stat(
    panel: &Panel,
    ticker: &str,
    window: usize,
    base_lag: usize,
    stat: RollingStat,
) -> Result<Vec<Option<f64>>> {
    if window == 0 || (stat == RollingStat::Std && window < 2) {
        return Err(Error::invalid(format!("window {window} too small for {stat:?}")));
    }
    let lagged = lag_feature(panel, ticker, base_lag)?;
    Ok(rolling_over(&lagged, window, stat))
}

/// 12 month indicators followed by 5 weekday indicators.
pub fn calendar_indicators(date: NaiveDate) -> Result<Vec<(&'static str, f64)>> {
    let dow = match date.weekday() {
        Weekday::Mon => 0,
        Weekday::Tue => 1,
        Weekday::Wed => 2,
        Weekday::Thu => 3,
        Weekday::Fri => 4,
        Weekday::Sat | Weekday::Sun => {
            return Err(Error::Validation(format!(
                "{date} falls on a weekend; not a trading day"
            )))
        }
    };
    let month = date.month0() as usize;
    let mut out: Vec<(&'static str, f64)> = MONTHS
        .iter()
        .enumerate()
        .map(|(i, m)| (*m, if i == month { 1.0 } else { 0.0 }))
        .collect();
    out.extend(
        WEEKDAYS
            .iter()
            .enumerate()
            .map(|(i, d)| (*d, if i == dow { 1.0 } else { 0.0 })),
    );
    Ok(out)
}

struct TickerBlock {
    keys: Vec<RowKey>,
    target: Vec<f64>,
    values: Vec<f64>,
}

fn ticker_block(
    panel: &Panel,
    rows: &[PanelRow],
    ticker_pos: usize,
    spec: &FeatureSpec,
    variant: Variant,
    leads: &LeadSource,
) -> Result<TickerBlock> {
    let closes: Vec<f64> = rows.iter().map(|r| r.close).collect();
    let lagged = shift(&closes, spec.lag_days);
    let means: Vec<_> = spec
        .rolling_mean_windows
        .iter()
        .map(|&w| rolling_over(&lagged, w, RollingStat::Mean))
        .collect();
    let stds: Vec<_> = spec
        .rolling_std_windows
        .iter()
        .map(|&w| rolling_over(&lagged, w, RollingStat::Std))
        .collect();
    let n_tickers = panel.tickers().len();

    let mut block = TickerBlock {
        keys: Vec::new(),
        target: Vec::new(),
        values: Vec::new(),
    };
    'rows: for (i, row) in rows.iter().enumerate() {
        let calendar = calendar_indicators(row.date)?;
        // every variant drops the same rows, so lead availability is always required
        let mut lead_values = Vec::with_capacity(spec.lead_days.len());
        for &k in &spec.lead_days {
            match leads.lead(row.date, k) {
                Some(v) => lead_values.push(v),
                None => continue 'rows,
            }
        }
        let Some(lag) = lagged[i] else { continue };
        let Some(rolled) = means
            .iter()
            .chain(&stds)
            .map(|s| s[i])
            .collect::<Option<Vec<f64>>>()
        else {
            continue;
        };

        block.values.push(row.volume as f64);
        if variant == Variant::Proposed {
            block.values.extend([row.cpi, row.unemp, row.int_rate]);
            block.values.extend(&lead_values);
        }
        block.values.push(lag);
        block.values.extend(&rolled);
        if spec.include_month_indicators {
            block.values.extend(calendar[..12].iter().map(|(_, v)| *v));
        }
        if spec.include_weekday_indicators {
            block.values.extend(calendar[12..].iter().map(|(_, v)| *v));
        }
        if spec.include_ticker_indicators {
            block
                .values
                .extend((0..n_tickers).map(|t| if t == ticker_pos { 1.0 } else { 0.0 }));
        }
        block.keys.push(RowKey {
            ticker: row.ticker.clone(),
            date: row.date,
        });
        block.target.push(row.close);
    }
    Ok(block)
}

enum LeadSource {
    Calendar(DailyRates),
    Trading {
        calendar: Vec<NaiveDate>,
        rates: Vec<f64>,
    },
}

impl LeadSource {
    fn new(panel: &Panel, mode: LeadMode) -> Result<Self> {
        Ok(match mode {
            LeadMode::Calendar => LeadSource::Calendar(DailyRates::from_observations(panel.rates())?),
            LeadMode::Trading => {
                let calendar = panel.calendar().to_vec();
                let rates = forward_fill(panel.rates(), &calendar)?
                    .into_iter()
                    .map(|o| o.value)
                    .collect();
                LeadSource::Trading { calendar, rates }
            }
        })
    }

    fn lead(&self, date: NaiveDate, k: usize) -> Option<f64> {
        match self {
            LeadSource::Calendar(daily) => lead_interest_rate(daily, date, k),
            LeadSource::Trading { calendar, rates } => {
                let i = calendar.binary_search(&date).ok()?;
                rates.get(i + k).copied()
            }
        }
    }
}

/// Build one variant of the design matrix. Rows lacking any lag, rolling, or
/// lead value are dropped for both variants alike.
pub fn assemble(panel: &Panel, spec: &FeatureSpec, variant: Variant) -> Result<FeatureFrame> {
    spec.validate()?;
    if panel.is_empty() {
        return Err(Error::invalid("panel is empty"));
    }
    let leads = LeadSource::new(panel, spec.lead_mode)?;
    let blocks: Vec<TickerBlock> = panel
        .tickers()
        .par_iter()
        .enumerate()
        .map(|(pos, t)| ticker_block(panel, panel.ticker_rows(t)?, pos, spec, variant, &leads))
        .collect::<Result<_>>()?;

    let names = spec.feature_names(variant, panel.tickers());
    let mut keys = Vec::new();
    let mut target = Vec::new();
    let mut values = Vec::new();
    for b in blocks {
        keys.extend(b.keys);
        target.extend(b.target);
        values.extend(b.values);
    }
    if keys.is_empty() {
        return Err(Error::EmptyFrame);
    }
    FeatureFrame::new(keys, target, names, values, variant)
}

//! Synthetic anticipated-policy market: AR price dynamics plus a coupling to
//! the interest rate a fixed number of calendar days ahead.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data_ingest::{MacroKind, MacroObservation, PriceBar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_tickers: usize,
    /// Weekday trading days per ticker.
    pub n_days: usize,
    pub start: NaiveDate,
    /// Weight of the future rate in the close.
    pub rate_coef: f64,
    /// Calendar days between a close and the rate it anticipates.
    pub rate_lead_days: usize,
    pub ar_phi: f64,
    pub ar_sd: f64,
    pub noise_sd: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_tickers: 5,
            n_days: 750,
            start: NaiveDate::from_ymd_opt(2017, 1, 2).expect("valid date"),
            rate_coef: 2.0,
            rate_lead_days: 28,
            ar_phi: 0.95,
            ar_sd: 0.1,
            noise_sd: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub prices: BTreeMap<String, Vec<PriceBar>>,
    pub rates: Vec<MacroObservation>,
    pub cpi: Vec<MacroObservation>,
    pub unemp: Vec<MacroObservation>,
}

const RATE_FLOOR: f64 = 0.5;
const RATE_CAP: f64 = 3.0;
const RATE_STEP: f64 = 0.25;
const MACRO_WARMUP_DAYS: i64 = 90;
const RATE_TAIL_DAYS: i64 = 120;

pub fn ticker_symbol(i: usize) -> String {
    format!("SYN{i}")
}

fn trading_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| d.weekday().num_days_from_monday() < 5)
        .take(n)
        .collect()
}

/// Step path: moves of ±0.25 every 30 to 60 days, drifting back toward the
/// middle of [0.5, 3.0].
fn rate_path(rng: &mut ChaCha8Rng, from: NaiveDate, to: NaiveDate) -> Vec<MacroObservation> {
    let mid = 0.5 * (RATE_FLOOR + RATE_CAP);
    let half = 0.5 * (RATE_CAP - RATE_FLOOR);
    let mut level: f64 = 1.5;
    let mut date = from;
    let mut out = Vec::new();
    while date <= to {
        out.push(MacroObservation {
            date,
            value: level,
            kind: MacroKind::InterestRate,
        });
        let p_up = (0.5 + 0.4 * (mid - level) / half).clamp(0.05, 0.95);
        let step = if rng.random_bool(p_up) { RATE_STEP } else { -RATE_STEP };
        level = (level + step).clamp(RATE_FLOOR, RATE_CAP);
        date += Duration::days(rng.random_range(30..=60));
    }
    out
}

fn monthly(
    rng: &mut ChaCha8Rng,
    from: NaiveDate,
    to: NaiveDate,
    kind: MacroKind,
    start: f64,
    drift: f64,
    sd: f64,
) -> Vec<MacroObservation> {
    let shock = Normal::new(0.0, sd).expect("finite sd");
    let mut date = NaiveDate::from_ymd_opt(from.year(), from.month(), 1).expect("first of month");
    let mut value = start;
    let mut out = Vec::new();
    while date <= to {
        out.push(MacroObservation { date, value, kind });
        value = (value + drift + shock.sample(rng)).max(0.1);
        date = date
            .checked_add_months(chrono::Months::new(1))
            .expect("date in range");
    }
    out
}

pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    if spec.n_tickers == 0 || spec.n_days == 0 {
        return Err(Error::invalid("synthetic market needs at least one ticker and one day"));
    }
    let valid_sd = |v: f64| v.is_finite() && v >= 0.0;
    if !(valid_sd(spec.ar_sd) && valid_sd(spec.noise_sd) && spec.ar_phi.abs() < 1.0) {
        return Err(Error::invalid("synthetic AR parameters out of range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = trading_days(spec.start, spec.n_days);
    let first = spec.start - Duration::days(MACRO_WARMUP_DAYS);
    let last = *days.last().expect("non-empty") + Duration::days(spec.rate_lead_days as i64 + RATE_TAIL_DAYS);

    let rates = rate_path(&mut rng, first, last);
    let cpi = monthly(&mut rng, first, last, MacroKind::Cpi, 245.0, 0.18, 0.25);
    let unemp = monthly(&mut rng, first, last, MacroKind::Unemployment, 4.5, -0.02, 0.08);

    let rate_at = |d: NaiveDate| {
        let i = rates.partition_point(|o| o.date <= d);
        rates[i - 1].value
    };
    let lead = Duration::days(spec.rate_lead_days as i64);
    let ar_shock = Normal::new(0.0, spec.ar_sd).expect("finite sd");
    let noise = Normal::new(0.0, spec.noise_sd).expect("finite sd");

    let mut prices = BTreeMap::new();
    for i in 0..spec.n_tickers {
        let ticker = ticker_symbol(i);
        let level = 40.0 + 15.0 * i as f64;
        let mut ar = 0.0;
        let bars = days
            .iter()
            .map(|&date| {
                ar = spec.ar_phi * ar + ar_shock.sample(&mut rng);
                let close = level + ar + spec.rate_coef * rate_at(date + lead) + noise.sample(&mut rng);
                PriceBar {
                    ticker: ticker.clone(),
                    date,
                    close,
                    volume: rng.random_range(500_000..5_000_000),
                }
            })
            .collect();
        prices.insert(ticker, bars);
    }
    Ok(SyntheticData {
        prices,
        rates,
        cpi,
        unemp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let spec = SyntheticSpec::default();
        let a = generate(&spec, 7).unwrap();
        let b = generate(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.prices.len(), 5);
        assert!(a.prices.values().all(|bars| bars.len() == 750));
        assert_ne!(generate(&spec, 8).unwrap().prices, a.prices);
    }

    #[test]
    fn rates_stay_in_band_and_cover_leads() {
        let spec = SyntheticSpec::default();
        let data = generate(&spec, 3).unwrap();
        assert!(data.rates.iter().all(|o| (RATE_FLOOR..=RATE_CAP).contains(&o.value)));
        let last_bar = data.prices["SYN0"].last().unwrap().date;
        let last_rate = data.rates.last().unwrap().date;
        assert!(last_rate > last_bar + Duration::days(28));
        assert!(data.rates[0].date < spec.start && data.cpi[0].date < spec.start);
    }

    #[test]
    fn close_tracks_future_rate() {
        let spec = SyntheticSpec {
            ar_sd: 0.0,
            noise_sd: 0.0,
            ..SyntheticSpec::default()
        };
        let data = generate(&spec, 5).unwrap();
        let bar = &data.prices["SYN1"][100];
        let target = bar.date + Duration::days(28);
        let rate = data.rates.iter().rev().find(|o| o.date <= target).unwrap().value;
        assert!((bar.close - (55.0 + 2.0 * rate)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_spec() {
        let bad = SyntheticSpec {
            ar_phi: 1.0,
            ..SyntheticSpec::default()
        };
        assert!(generate(&bad, 1).is_err());
    }
}

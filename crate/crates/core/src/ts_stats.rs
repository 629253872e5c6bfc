//! Sample autocorrelation, partial autocorrelation via the Durbin–Levinson
//! recursion, and ticker ranking by peak PACF.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_LAG: usize = 59;
pub const DEFAULT_TOP_K: usize = 10;

const SINGULAR_DENOMINATOR: f64 = 1e-12;
const PACF_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacfReport {
    pub ticker: String,
    /// Lags 1..=L, so `pacf[0]` is lag 1.
    pub pacf: Vec<f64>,
    pub max_pac: f64,
    pub argmax_lag: usize,
}

/// How a report is scored for ranking.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacScore {
    /// Largest signed PACF value.
    #[default]
    Signed,
    /// Largest |PACF|.
    Absolute,
}

impl PacfReport {
    /// Score and the lag achieving it. Ties go to the smaller lag.
    pub fn score(&self, mode: PacScore) -> (f64, usize) {
        match mode {
            PacScore::Signed => (self.max_pac, self.argmax_lag),
            PacScore::Absolute => argmax(self.pacf.iter().map(|v| v.abs())),
        }
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in values.enumerate() {
        if v > best.0 {
            best = (v, i + 1);
        }
    }
    best
}

/// Biased sample autocorrelation for lags `0..=max_lag`.
pub fn sample_acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::invalid(format!(
            "series length {n} must exceed max_lag {max_lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    let scale: f64 = series.iter().map(|x| x * x).sum();
    if !(denom > 1e-24 * scale) || denom == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    acf.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = centered[k..]
            .iter()
            .zip(&centered[..n - k])
            .map(|(a, b)| a * b)
            .sum();
        acf.push(num / denom);
    }
    Ok(acf)
}

/// Partial autocorrelations φ_kk for k = 1..=max_lag from the
/// Durbin–Levinson recursion on the sample ACF.
pub fn pacf_from_acf(acf: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 || acf.len() <= max_lag {
        return Err(Error::invalid(format!(
            "need acf up to lag {max_lag}, have {}",
            acf.len().saturating_sub(1)
        )));
    }
    let mut pacf = Vec::with_capacity(max_lag);
    // phi[j-1] holds φ_{k,j} for the current order k
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut next = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let mut num = acf[k];
        let mut den = 1.0;
        for j in 1..k {
            num -= phi[j - 1] * acf[k - j];
            den -= phi[j - 1] * acf[j];
        }
        if den <= SINGULAR_DENOMINATOR {
            return Err(Error::NumericalSingularity(format!(
                "Durbin-Levinson denominator {den:e} at lag {k}"
            )));
        }
        let kk = num / den;
        if kk.abs() > 1.0 + PACF_BOUND_SLACK {
            return Err(Error::NumericalSingularity(format!(
                "partial autocorrelation {kk} at lag {k} outside [-1, 1]"
            )));
        }
        next.clear();
        for j in 1..k {
            next.push(phi[j - 1] - kk * phi[k - j - 1]);
        }
        next.push(kk);
        std::mem::swap(&mut phi, &mut next);
        pacf.push(kk);
    }
    Ok(pacf)
}

pub fn pacf_durbin_levinson(ticker: &str, series: &[f64], max_lag: usize) -> Result<PacfReport> {
    let acf = sample_acf(series, max_lag)?;
    let pacf = pacf_from_acf(&acf, max_lag)?;
    let (max_pac, argmax_lag) = argmax(pacf.iter().copied());
    Ok(PacfReport {
        ticker: ticker.to_string(),
        pacf,
        max_pac,
        argmax_lag,
    })
}

/// One report per ticker, computed in parallel; output ordered by ticker.
pub fn pacf_reports(
    series: &BTreeMap<String, Vec<f64>>,
    max_lag: usize,
) -> Result<Vec<PacfReport>> {
    series
        .par_iter()
        .map(|(ticker, xs)| {
            pacf_durbin_levinson(ticker, xs, max_lag).map_err(|e| match e {
                Error::DegenerateVariance => {
                    Error::Validation(format!("{ticker}: close series has zero variance"))
                }
                other => other,
            })
        })
        .collect()
}

fn ranked(reports: &[PacfReport], mode: PacScore) -> Vec<(&PacfReport, f64, usize)> {
    let mut scored: Vec<_> = reports
        .iter()
        .map(|r| {
            let (s, lag) = r.score(mode);
            (r, s, lag)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.ticker.cmp(&b.0.ticker)));
    scored
}

/// Top `k` tickers by score, descending, ties broken by symbol.
pub fn rank_and_select(reports: &[PacfReport], k: usize, mode: PacScore) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > reports.len() {
        return Err(Error::invalid(format!(
            "cannot select {k} tickers from {} reports",
            reports.len()
        )));
    }
    Ok(ranked(reports, mode)
        .into_iter()
        .take(k)
        .map(|(r, _, _)| r.ticker.clone())
        .collect())
}

/// `ticker,max_pac,argmax_lag` for every report, in ranking order.
pub fn write_ranking_csv<W: Write>(out: W, reports: &[PacfReport], mode: PacScore) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "max_pac", "argmax_lag"])?;
    for (r, score, lag) in ranked(reports, mode) {
        w.write_record([r.ticker.clone(), score.to_string(), lag.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<ranking>", e))?;
    Ok(())
}

#![allow(dead_code)]

use chrono::{Duration, NaiveDate};
use policyboost::feature_lab::{FeatureFrame, RowKey, Variant};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Single-ticker frame on consecutive dates from row-major values.
pub fn frame_from(names: &[&str], rows: &[Vec<f64>], y: &[f64]) -> FeatureFrame {
    let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
    let keys = (0..y.len())
        .map(|i| RowKey {
            ticker: "T".into(),
            date: start + Duration::days(i as i64),
        })
        .collect();
    FeatureFrame::new(
        keys,
        y.to_vec(),
        names.iter().map(|s| s.to_string()).collect(),
        rows.iter().flatten().copied().collect(),
        Variant::Baseline,
    )
    .unwrap()
}

/// Stationary AR(p) path after a burn-in of 500 steps.
pub fn simulate_ar(phi: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let burn = 500;
    let mut x = vec![0.0; n + burn];
    for t in 0..n + burn {
        let mut v = normal(rng);
        for (k, p) in phi.iter().enumerate() {
            if t > k {
                v += p * x[t - k - 1];
            }
        }
        x[t] = v;
    }
    x.split_off(burn)
}

/// Random regression data: `n_features` uniform columns, y a noisy nonlinear target.
pub fn random_regression(n: usize, n_features: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n_features).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            let mut v = 3.0 * r[0] + 0.3 * normal(rng);
            if n_features > 1 {
                v += (2.0 * r[1]).sin();
            }
            v
        })
        .collect();
    (rows, y)
}

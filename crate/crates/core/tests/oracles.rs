mod common;

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use policyboost::data_ingest::{build_panel, MacroKind, MacroObservation, PriceBar};
use policyboost::feature_lab::{assemble, FeatureSpec, Variant};
use policyboost::gbm::{fit_gbm, predict_ensemble, BoostConfig};
use policyboost::linear_model::{fit_ols, student_t_sf};
use policyboost::tree_model::{fit_tree, TreeParams};
use policyboost::ts_stats::pacf_durbin_levinson;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{frame_from, normal, simulate_ar};

fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| d.weekday().num_days_from_monday() < 5)
        .take(n)
        .collect()
}

fn obs(date: NaiveDate, value: f64, kind: MacroKind) -> MacroObservation {
    MacroObservation { date, value, kind }
}

fn bars(ticker: &str, dates: &[NaiveDate], rng: &mut ChaCha8Rng) -> Vec<PriceBar> {
    dates
        .iter()
        .map(|&date| PriceBar {
            ticker: ticker.into(),
            date,
            close: rng.random_range(10.0..20.0),
            volume: 1000,
        })
        .collect()
}

#[test]
fn disjoint_calendars_join_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
    let all = weekdays(start, 60);
    let a: Vec<NaiveDate> = all.iter().step_by(2).copied().collect();
    let b: Vec<NaiveDate> = all.iter().skip(1).step_by(2).copied().collect();
    let mut prices = BTreeMap::new();
    prices.insert("A".to_string(), bars("A", &a, &mut rng));
    prices.insert("B".to_string(), bars("B", &b, &mut rng));
    let macro_start = start - Duration::days(10);
    let panel = build_panel(
        &prices,
        &[obs(macro_start, 1.0, MacroKind::InterestRate)],
        &[obs(macro_start, 250.0, MacroKind::Cpi)],
        &[obs(macro_start, 4.0, MacroKind::Unemployment)],
        2018..=2018,
    )
    .unwrap();

    // brute-force join: every (ticker, bar) pair whose date falls in the year
    let mut expected = 0;
    for series in prices.values() {
        for bar in series {
            if bar.date.year() == 2018 {
                expected += 1;
            }
        }
    }
    assert_eq!(panel.len(), expected);
    assert_eq!(panel.len(), a.len() + b.len());
    assert_eq!(panel.calendar().len(), all.len());
}

#[test]
fn full_coverage_row_count_matches_missing_mask() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = NaiveDate::from_ymd_opt(2017, 1, 2).unwrap();
    let dates = weekdays(start, 500);
    let tickers: Vec<String> = (0..10).map(|i| format!("T{i:02}")).collect();
    let mut prices = BTreeMap::new();
    for t in &tickers {
        prices.insert(t.clone(), bars(t, &dates, &mut rng));
    }
    let macro_start = start - Duration::days(40);
    let rates: Vec<MacroObservation> = (0..40)
        .map(|m| obs(macro_start + Duration::days(30 * m), 1.0 + 0.05 * m as f64, MacroKind::InterestRate))
        .collect();
    let rate_end = rates.last().unwrap().date;
    assert!(rate_end > *dates.last().unwrap() + Duration::days(28));
    let panel = build_panel(
        &prices,
        &rates,
        &[obs(macro_start, 250.0, MacroKind::Cpi)],
        &[obs(macro_start, 4.0, MacroKind::Unemployment)],
        2017..=2019,
    )
    .unwrap();
    let spec = FeatureSpec::default();
    let frame = assemble(&panel, &spec, Variant::Proposed).unwrap();

    // brute-force mask: row i needs every lagged and windowed index and every lead date
    let mut expected = 0;
    for _ in &tickers {
        for (i, d) in dates.iter().enumerate() {
            let lag_ok = i >= spec.lag_days;
            let windows_ok = spec
                .rolling_mean_windows
                .iter()
                .chain(&spec.rolling_std_windows)
                .all(|w| i + 1 >= spec.lag_days + w);
            let leads_ok = spec.lead_days.iter().all(|k| *d + Duration::days(*k as i64) <= rate_end);
            if lag_ok && windows_ok && leads_ok {
                expected += 1;
            }
        }
    }
    assert_eq!(frame.n_rows(), expected);
    assert_eq!(frame.n_rows(), 10 * (500 - 207));
}

/// Last OLS coefficient of x_t on (1, x_{t-1}, ..., x_{t-k}).
fn regression_pacf(x: &[f64], k: usize) -> f64 {
    let n = x.len() - k;
    let mut names = vec!["const".to_string()];
    let mut cols = vec![vec![1.0; n]];
    for j in 1..=k {
        names.push(format!("l{j}"));
        cols.push((k..x.len()).map(|t| x[t - j]).collect());
    }
    let y: Vec<f64> = x[k..].to_vec();
    let fit = fit_ols(&names, &cols, &y).unwrap();
    fit.coefficients[k]
}

#[test]
fn pacf_recovers_ar_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ar1 = simulate_ar(&[0.8], 10_000, &mut rng);
    let r1 = pacf_durbin_levinson("A", &ar1, 59).unwrap();
    let oracle1 = regression_pacf(&ar1, 1);
    assert!((r1.pacf[0] - 0.8).abs() < 0.03);
    assert!((r1.pacf[0] - oracle1).abs() < 0.03);
    assert!(r1.pacf[1..].iter().all(|v| v.abs() < 0.05));

    let ar2 = simulate_ar(&[0.5, 0.3], 10_000, &mut rng);
    let r2 = pacf_durbin_levinson("B", &ar2, 10).unwrap();
    let oracle2 = regression_pacf(&ar2, 2);
    assert!((r2.pacf[1] - 0.3).abs() < 0.03);
    assert!((r2.pacf[1] - oracle2).abs() < 0.03);
}

#[test]
fn t_tail_matches_numerical_integration() {
    // Simpson's rule on the t density from t to a far cutoff
    let dof: f64 = 10_000.0;
    let ln_c = stirling_ln_gamma((dof + 1.0) / 2.0)
        - stirling_ln_gamma(dof / 2.0)
        - 0.5 * (dof * std::f64::consts::PI).ln();
    let density = |t: f64| (ln_c - (dof + 1.0) / 2.0 * (1.0 + t * t / dof).ln()).exp();
    let (a, b, steps) = (1.96, 40.0, 200_000);
    let h = (b - a) / steps as f64;
    let mut s = density(a) + density(b);
    for i in 1..steps {
        s += density(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = s * h / 3.0;
    let sf = student_t_sf(1.96, 10_000).unwrap();
    assert!((integral - 0.025).abs() < 1e-4);
    assert!((sf - integral).abs() < 1e-7, "{sf} vs {integral}");
}

/// Stirling series; adequate for the large arguments used above.
fn stirling_ln_gamma(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
}

fn sse(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m).powi(2)).sum()
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Best single split of `idx` over every feature/midpoint; returns (sse, means).
fn best_one_level(rows: &[Vec<f64>], y: &[f64], idx: &[usize]) -> (f64, Vec<f64>) {
    let vals: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut best = (sse(&vals), vec![mean(&vals)]);
    for f in 0..rows[0].len() {
        let mut xs: Vec<f64> = idx.iter().map(|&i| rows[i][f]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for w in xs.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<f64>, Vec<f64>) = {
                let l: Vec<f64> = idx.iter().filter(|&&i| rows[i][f] <= t).map(|&i| y[i]).collect();
                let r: Vec<f64> = idx.iter().filter(|&&i| rows[i][f] > t).map(|&i| y[i]).collect();
                (l, r)
            };
            let s = sse(&l) + sse(&r);
            if s < best.0 {
                best = (s, vec![mean(&l), mean(&r)]);
            }
        }
    }
    best
}

#[test]
fn depth_two_tree_matches_partition_search() {
    let cells = [[1.0, 9.0], [14.0, 2.0]];
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for a in 0..10 {
        for b in 0..10 {
            rows.push(vec![a as f64, b as f64]);
            let wobble = 0.01 * (((a * 7 + b * 3) % 5) as f64 - 2.0);
            y.push(cells[(a >= 5) as usize][(b >= 5) as usize] + wobble);
        }
    }
    // exhaustive two-level axis-aligned partitions
    let all: Vec<usize> = (0..rows.len()).collect();
    let mut best: (f64, Vec<f64>) = (f64::INFINITY, Vec::new());
    for f in 0..2 {
        for t in 0..9 {
            let t = t as f64 + 0.5;
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| rows[i][f] <= t);
            let (sl, ml) = best_one_level(&rows, &y, &l);
            let (sr, mr) = best_one_level(&rows, &y, &r);
            if sl + sr < best.0 {
                best = (sl + sr, [ml, mr].concat());
            }
        }
    }
    let mut want = best.1;
    want.sort_by(f64::total_cmp);

    let names = ["x0", "x1"];
    let frame = frame_from(&names, &rows, &y);
    let tree = fit_tree(
        &frame,
        &TreeParams {
            max_depth: Some(2),
            min_samples_leaf: 1,
            min_samples_split: 2,
        },
    )
    .unwrap();
    let mut got: Vec<f64> = tree.root.leaves().iter().map(|l| l.0).collect();
    got.sort_by(f64::total_cmp);
    assert_eq!(got.len(), 4);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
    }
}

/// Independent descent over the serialized tree.
fn descend(node: &serde_json::Value, row: &[f64]) -> f64 {
    match node["node"].as_str().unwrap() {
        "leaf" => node["value"].as_f64().unwrap(),
        _ => {
            let f = node["feature"].as_u64().unwrap() as usize;
            let t = node["threshold"].as_f64().unwrap();
            if row[f] <= t {
                descend(&node["left"], row)
            } else {
                descend(&node["right"], row)
            }
        }
    }
}

#[test]
fn tree_prediction_matches_reference_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (rows, y) = common::random_regression(1000, 3, &mut rng);
    let frame = frame_from(&["a", "b", "c"], &rows, &y);
    let tree = fit_tree(&frame, &TreeParams::default()).unwrap();
    let json = serde_json::to_value(&tree.root).unwrap();
    let pred = tree.predict_frame(&frame).unwrap();
    for (row, p) in rows.iter().zip(&pred) {
        assert_eq!(descend(&json, row).to_bits(), p.to_bits());
    }
}

/// Plain boosting of exhaustive stumps on residuals.
fn reference_stump_boost(x: &[f64], y: &[f64], rounds: usize, lr: f64) -> Vec<f64> {
    let base = mean(y);
    let mut pred = vec![base; y.len()];
    let mut xs = x.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for _ in 0..rounds {
        let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
        for w in xs.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let l: Vec<f64> = (0..x.len()).filter(|&i| x[i] <= t).map(|i| resid[i]).collect();
            let r: Vec<f64> = (0..x.len()).filter(|&i| x[i] > t).map(|i| resid[i]).collect();
            let s = sse(&l) + sse(&r);
            if s < best.0 {
                best = (s, t, mean(&l), mean(&r));
            }
        }
        for i in 0..x.len() {
            pred[i] += lr * if x[i] <= best.1 { best.2 } else { best.3 };
        }
    }
    pred
}

#[test]
fn boosting_converges_like_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x: Vec<f64> = (0..200).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 0.3 * normal(&mut rng)).collect();
    let sd = sse(&y).sqrt() / (y.len() as f64).sqrt();
    let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
    let frame = frame_from(&["x1"], &rows, &y);
    let model = fit_gbm(
        &frame,
        &BoostConfig {
            n_trees: 100,
            learning_rate: 0.1,
            ..BoostConfig::default()
        },
    )
    .unwrap();
    let rmse = |p: &[f64]| (p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let ours = rmse(&predict_ensemble(&model, &frame).unwrap());
    let reference = rmse(&reference_stump_boost(&x, &y, 100, 0.1));
    assert!(ours < 0.5 * sd, "{ours} vs sd {sd}");
    assert!(reference < 0.5 * sd);
    assert!((ours / reference - 1.0).abs() < 0.5, "{ours} vs reference {reference}");
    assert_eq!(*model.training_trace.last().unwrap(), ours);
}

#[test]
fn single_stump_hand_unrolled() {
    // x = 1..4, y = (1, 1, 5, 7): base 3.5, best cut at 2.5,
    // leaf weights -G/H = -(2·3.5 - 2)/2 = -2.5 and -(2·3.5 - 12)/2 = 2.5
    let rows = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
    let y = [1.0, 1.0, 5.0, 7.0];
    let frame = frame_from(&["x"], &rows, &y);
    let model = fit_gbm(
        &frame,
        &BoostConfig {
            n_trees: 1,
            learning_rate: 1.0,
            max_leaves: 2,
            min_samples_leaf: 1,
            lambda_l2: 0.0,
            alpha_l1: 0.0,
            gamma_split: 0.0,
            ..BoostConfig::default()
        },
    )
    .unwrap();
    assert_eq!(model.base_score, 3.5);
    assert_eq!(model.trees[0].leaves().iter().map(|l| l.0).collect::<Vec<_>>(), vec![-2.5, 2.5]);
    assert_eq!(predict_ensemble(&model, &frame).unwrap(), vec![1.0, 1.0, 6.0, 6.0]);
}

//! Ordinary least squares with classical per-coefficient inference.
//!
//! The solve uses a column-pivoted Householder QR on a column-equilibrated
//! design; rank is decided from the diagonal of R, so a dependent column is
//! reported by name instead of being absorbed by a pseudo-inverse.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_lab::{FeatureFrame, ONE_HOT_PREFIXES};

/// Relative cutoff on |R_kk| / |R_00| below which a direction is treated as null.
pub const RANK_TOLERANCE: f64 = 1e-10;
pub const INTERCEPT: &str = "const";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub n_obs: usize,
    pub n_params: usize,
    pub residual_variance: f64,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|j| self.coefficients[j])
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

/// Columns of the OLS design for a frame: an intercept plus every feature,
/// minus one reference member per one-hot group. Indicator members that never
/// fire in the frame are dropped too, since they carry no category.
pub fn design_columns(frame: &FeatureFrame) -> (Vec<String>, Vec<Vec<f64>>) {
    let names = frame.feature_names();
    let mut drop = vec![false; names.len()];
    for prefix in ONE_HOT_PREFIXES {
        let mut members: Vec<usize> = (0..names.len())
            .filter(|&j| names[j].starts_with(prefix))
            .collect();
        members.retain(|&j| {
            let present = (0..frame.n_rows()).any(|i| frame.value(i, j) != 0.0);
            if !present {
                drop[j] = true;
            }
            present
        });
        if let Some(&reference) = members.iter().min_by(|a, b| names[**a].cmp(&names[**b])) {
            drop[reference] = true;
        }
    }
    let mut out_names = vec![INTERCEPT.to_string()];
    let mut cols = vec![vec![1.0; frame.n_rows()]];
    for j in (0..names.len()).filter(|&j| !drop[j]) {
        out_names.push(names[j].clone());
        cols.push(frame.column(j));
    }
    (out_names, cols)
}

/// Regress the frame's target on its features (see [`design_columns`]).
pub fn ols_fit(frame: &FeatureFrame) -> Result<OlsFit> {
    let (names, cols) = design_columns(frame);
    fit_ols(&names, &cols, frame.target())
}

/// Least squares on explicit columns. No intercept is added.
pub fn fit_ols(names: &[String], columns: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    let p = columns.len();
    if names.len() != p {
        return Err(Error::invalid("one name per column required"));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("column length differs from target length"));
    }
    if n <= p {
        return Err(Error::InsufficientData {
            n_obs: n,
            n_params: p,
        });
    }
    let qr = PivotedQr::new(columns)?;
    let rank = qr.rank();
    if rank < p {
        let mut columns: Vec<String> = qr.perm[rank..].iter().map(|&j| names[j].clone()).collect();
        columns.sort();
        return Err(Error::Collinear { columns });
    }

    let beta_scaled = qr.solve(y);
    let coefficients: Vec<f64> = (0..p).map(|j| beta_scaled[j] * qr.scale[j]).collect();
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| columns[j][i] * coefficients[j]).sum::<f64>())
        .collect();
    let dof = n - p;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let residual_variance = rss / dof as f64;

    let diag = qr.inverse_gram_diagonal();
    let standard_errors: Vec<f64> = (0..p)
        .map(|j| (residual_variance * diag[j]).sqrt() * qr.scale[j])
        .collect();
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let (t, pv) = if standard_errors[j] > 0.0 {
            let t = coefficients[j] / standard_errors[j];
            (t, 2.0 * student_t_sf(t.abs(), dof)?)
        } else if coefficients[j] == 0.0 {
            (0.0, 1.0)
        } else {
            // exact fit: the estimate has no sampling variability
            (f64::INFINITY.copysign(coefficients[j]), 0.0)
        };
        t_stats.push(t);
        p_values.push(pv.clamp(0.0, 1.0));
    }

    Ok(OlsFit {
        names: names.to_vec(),
        coefficients,
        standard_errors,
        t_stats,
        p_values,
        n_obs: n,
        n_params: p,
        residual_variance,
        residuals,
    })
}

/// Householder QR with column pivoting of a column-major matrix whose columns
/// were first scaled to unit Euclidean norm.
struct PivotedQr {
    n: usize,
    p: usize,
    /// Householder vectors below the diagonal, R on and above it (column-major).
    a: Vec<Vec<f64>>,
    betas: Vec<f64>,
    /// perm[k] = original column placed at position k
    perm: Vec<usize>,
    scale: Vec<f64>,
    r_diag: Vec<f64>,
}

impl PivotedQr {
    fn new(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("design matrix contains non-finite values".into()));
        }
        let scale: Vec<f64> = columns
            .iter()
            .map(|c| {
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    1.0 / norm
                } else {
                    1.0
                }
            })
            .collect();
        let mut a: Vec<Vec<f64>> = columns
            .iter()
            .zip(&scale)
            .map(|(c, s)| c.iter().map(|v| v * s).collect())
            .collect();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut betas = vec![0.0; p];
        let mut r_diag = vec![0.0; p];

        for k in 0..p.min(n) {
            // pivot on the largest remaining trailing norm; ties keep original order
            let trailing = |c: &Vec<f64>| c[k..].iter().map(|v| v * v).sum::<f64>();
            let mut best = k;
            let mut best_norm = trailing(&a[k]);
            for j in k + 1..p {
                let nj = trailing(&a[j]);
                if nj > best_norm {
                    best = j;
                    best_norm = nj;
                }
            }
            a.swap(k, best);
            perm.swap(k, best);

            let alpha = best_norm.sqrt();
            if alpha == 0.0 {
                r_diag[k] = 0.0;
                continue;
            }
            let x0 = a[k][k];
            let r_kk = if x0 >= 0.0 { -alpha } else { alpha };
            // v = x - r_kk e_k, stored in place; beta = 2 / (v^T v)
            a[k][k] = x0 - r_kk;
            let vtv: f64 = a[k][k..].iter().map(|v| v * v).sum();
            let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
            betas[k] = beta;
            r_diag[k] = r_kk;
            let (head, tail) = a.split_at_mut(k + 1);
            let v = &head[k][k..];
            for col in tail.iter_mut() {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
                let f = beta * dot;
                for (c, vi) in col[k..].iter_mut().zip(v) {
                    *c -= f * vi;
                }
            }
        }
        Ok(PivotedQr {
            n,
            p,
            a,
            betas,
            perm,
            scale,
            r_diag,
        })
    }

    fn rank(&self) -> usize {
        let lead = self.r_diag.first().map_or(0.0, |v| v.abs());
        if lead == 0.0 {
            return 0;
        }
        self.r_diag
            .iter()
            .take_while(|v| v.abs() > RANK_TOLERANCE * lead)
            .count()
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.r_diag[i]
        } else {
            self.a[j][i]
        }
    }

    /// Coefficients on the scaled columns, in original column order.
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        for k in 0..self.p.min(self.n) {
            let v = &self.a[k][k..];
            let dot: f64 = v.iter().zip(&qty[k..]).map(|(a, b)| a * b).sum();
            let f = self.betas[k] * dot;
            for (q, vi) in qty[k..].iter_mut().zip(v) {
                *q -= f * vi;
            }
        }
        let mut z = vec![0.0; self.p];
        for i in (0..self.p).rev() {
            let mut s = qty[i];
            for j in i + 1..self.p {
                s -= self.r(i, j) * z[j];
            }
            z[i] = s / self.r_diag[i];
        }
        let mut beta = vec![0.0; self.p];
        for (k, &orig) in self.perm.iter().enumerate() {
            beta[orig] = z[k];
        }
        beta
    }

    /// diag((X_s^T X_s)^{-1}) in original column order, from R^{-1} R^{-T}.
    fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let p = self.p;
        // rows of R^{-1}, upper triangular
        let mut rinv = vec![vec![0.0; p]; p];
        for j in 0..p {
            rinv[j][j] = 1.0 / self.r_diag[j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in i + 1..=j {
                    s += self.r(i, k) * rinv[k][j];
                }
                rinv[i][j] = -s / self.r_diag[i];
            }
        }
        let mut diag = vec![0.0; p];
        for (k, &orig) in self.perm.iter().enumerate() {
            diag[orig] = rinv[k][k..].iter().map(|v| v * v).sum();
        }
        diag
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..100_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Upper tail P(T > t) of Student's t with `dof` degrees of freedom.
pub fn student_t_sf(t: f64, dof: usize) -> Result<f64> {
    if dof < 1 {
        return Err(Error::invalid("degrees of freedom must be at least 1"));
    }
    if t.is_nan() {
        return Err(Error::invalid("t statistic is NaN"));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let v = dof as f64;
    let x = v / (v + t * t);
    // P(|T| > |t|) = I_x(v/2, 1/2)
    let two_sided = regularized_incomplete_beta(0.5 * v, 0.5, x);
    let upper = 0.5 * two_sided;
    Ok(if t > 0.0 { upper } else { 1.0 - upper })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub name: String,
    pub coef: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Coefficient and p-value for each focus name, in the given order, flagged
/// significant when p ≤ alpha.
pub fn significance_report(
    fit: &OlsFit,
    alpha: f64,
    focus: &[&str],
) -> Result<Vec<SignificanceRow>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    focus
        .iter()
        .map(|name| {
            let j = fit
                .index_of(name)
                .ok_or_else(|| Error::invalid(format!("`{name}` is not a fitted coefficient")))?;
            Ok(SignificanceRow {
                name: name.to_string(),
                coef: fit.coefficients[j],
                p_value: fit.p_values[j],
                significant: fit.p_values[j] <= alpha,
            })
        })
        .collect()
}

fn format_coef(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.2E}")
    } else {
        format!("{v:.4}")
    }
}

pub fn render_significance_text(rows: &[SignificanceRow], alpha: f64) -> String {
    let name_w = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
    let mut out = format!(
        "{:<name_w$}  {:>12}  {:>8}  significant@{alpha}\n",
        "", "coef", "p-value"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<name_w$}  {:>12}  {:>8.3}  {}\n",
            r.name,
            format_coef(r.coef),
            r.p_value,
            if r.significant { "yes" } else { "no" }
        ));
    }
    out
}

pub fn write_significance_csv<W: Write>(out: W, rows: &[SignificanceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "coef", "p-value", "significant"])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.coef.to_string(),
            r.p_value.to_string(),
            r.significant.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<significance>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn three_points_exact() {
        let fit = fit_ols(
            &names(&["const", "x"]),
            &[vec![1.0; 3], vec![0.0, 1.0, 2.0]],
            &[0.0, 1.0, 2.0],
        )
        .unwrap();
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-12);
        assert!(fit.coefficients[0].abs() < 1e-12);
        assert!(fit.rss() < 1e-24);
    }

    #[test]
    fn noiseless_line_has_zero_variance() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| 4.0 * v).collect();
        let fit = fit_ols(&names(&["x"]), &[x], &y).unwrap();
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-12);
        assert!(fit.residual_variance < 1e-20);
        assert!(fit.p_values[0] < 1e-12);
    }

    #[test]
    fn simple_regression_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 2.0 + 3.0 * v + Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let fit = fit_ols(&names(&["const", "x"]), &[vec![1.0; 1000], x.clone()], &y).unwrap();

        // closed form: slope = Sxy / Sxx, se = sqrt(s2 / Sxx)
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
        let se = (rss / (n - 2.0) / sxx).sqrt();

        assert!((fit.coefficients[1] - slope).abs() < 1e-10);
        assert!((fit.coefficients[0] - icpt).abs() < 1e-10);
        assert!((fit.standard_errors[1] - se).abs() < 1e-10);
        assert!((fit.coefficients[1] - 3.0).abs() < 0.15);
        assert!(fit.p_values[1] < 1e-6);
        assert!((fit.t_stats[1] - fit.coefficients[1] / fit.standard_errors[1]).abs() < 1e-9);
    }

    #[test]
    fn zero_column_is_collinear() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 2.0 + 1.0).collect();
        let err = fit_ols(
            &names(&["const", "x", "zeros"]),
            &[vec![1.0; 10], x.clone(), vec![0.0; 10]],
            &y,
        )
        .unwrap_err();
        match err {
            Error::Collinear { columns } => assert_eq!(columns, ["zeros"]),
            other => panic!("{other:?}"),
        }
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!(matches!(
            fit_ols(&names(&["const", "x", "x2"]), &[vec![1.0; 10], x, twice], &y),
            Err(Error::Collinear { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            fit_ols(&names(&["a", "b"]), &[vec![1.0, 2.0], vec![3.0, 5.0]], &[1.0, 2.0]),
            Err(Error::InsufficientData { n_obs: 2, n_params: 2 })
        ));
    }

    #[test]
    fn t_tail_spot_values() {
        assert_eq!(student_t_sf(0.0, 7).unwrap(), 0.5);
        assert!((student_t_sf(1.0, 1).unwrap() - 0.25).abs() < 1e-12);
        // dof 2 has the closed form 1/2 - t / (2 sqrt(t^2 + 2))
        for t in [0.3, 1.0, 2.5, 10.0] {
            let want = 0.5 - t / (2.0 * (t * t + 2.0_f64).sqrt());
            assert!((student_t_sf(t, 2).unwrap() - want).abs() < 1e-12);
        }
        assert!(student_t_sf(1.0, 0).is_err());
    }

    #[test]
    fn table_two_reference_significance() {
        let rows = [
            ("volume", -4.82e-07, 0.000),
            ("cpi", 4.5751, 0.000),
            ("unemp", 10.5741, 0.012),
            ("int_rate", -17.7971, 0.000),
            ("lead_t7_int_rate", 0.4285, 0.600),
            ("lead_t14_int_rate", 0.8374, 0.322),
            ("lead_t21_int_rate", 0.0552, 0.064),
            ("lead_t28_int_rate", 3.4171, 0.000),
        ];
        let fit = OlsFit {
            names: rows.iter().map(|r| r.0.to_string()).collect(),
            coefficients: rows.iter().map(|r| r.1).collect(),
            standard_errors: vec![1.0; rows.len()],
            t_stats: rows.iter().map(|r| r.1).collect(),
            p_values: rows.iter().map(|r| r.2).collect(),
            n_obs: 100,
            n_params: rows.len(),
            residual_variance: 1.0,
            residuals: vec![],
        };
        let focus: Vec<&str> = rows.iter().map(|r| r.0).collect();
        let rep = significance_report(&fit, 0.10, &focus).unwrap();
        let sig = |n: &str| rep.iter().find(|r| r.name == n).unwrap().significant;
        assert!(sig("volume"));
        assert!(!sig("lead_t7_int_rate"));
        assert!(sig("lead_t21_int_rate"));
        assert!(sig("lead_t28_int_rate"));
        assert_eq!(rep.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(), focus);

        // p = 0.000 is an exact zero, so alpha = 0 still flags those
        let none = significance_report(&fit, 0.0, &focus).unwrap();
        assert!(none.iter().all(|r| r.significant == (r.p_value == 0.0)));
        assert!(significance_report(&fit, 1.0, &focus).unwrap().iter().all(|r| r.significant));
        assert!(significance_report(&fit, 0.1, &["nope"]).is_err());

        let text = render_significance_text(&rep, 0.10);
        assert!(text.contains("-4.82E-7"), "{text}");
        assert!(text.lines().count() == rows.len() + 1);
    }

    #[test]
    fn alpha_zero_with_positive_p() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 1.3).cos()).collect();
        let fit = fit_ols(&names(&["const", "x"]), &[vec![1.0; 50], x], &y).unwrap();
        let rep = significance_report(&fit, 0.0, &["x"]).unwrap();
        assert!(!rep[0].significant);
    }

    proptest::proptest! {
        #[test]
        fn t_tail_symmetry(t in -50.0f64..50.0, dof in 1usize..500) {
            let s = student_t_sf(t, dof).unwrap() + student_t_sf(-t, dof).unwrap();
            proptest::prop_assert!((s - 1.0).abs() < 1e-10);
        }

        #[test]
        fn rescaling_keeps_p_values(scale in 1e-3f64..1e3, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 60;
            let x1: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x2: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * x1[i] - 0.2 * x2[i]
                + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
            let nm = names(&["const", "x1", "x2"]);
            let a = fit_ols(&nm, &[vec![1.0; n], x1.clone(), x2.clone()], &y).unwrap();
            let scaled: Vec<f64> = x1.iter().map(|v| v * scale).collect();
            let b = fit_ols(&nm, &[vec![1.0; n], scaled, x2], &y).unwrap();
            for j in 0..3 {
                proptest::prop_assert!((a.p_values[j] - b.p_values[j]).abs() < 1e-8);
            }
            proptest::prop_assert!((a.coefficients[1] - b.coefficients[1] * scale).abs()
                < 1e-8 * a.coefficients[1].abs().max(1.0));
        }
    }
}

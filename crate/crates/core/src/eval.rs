//! Forecast metrics, the ADF unit-root statistic, the instance-norm baseline
//! and result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, WdanError};
use crate::pipeline::{ModelBundle, PreparedSample, Variant};

/// Population mean and std of `window`; the window is scaled by `std + eps`.
pub fn instance_norm_baseline(window: &[f64], epsilon: f64) -> (Vec<f64>, f64, f64) {
    let n = window.len().max(1) as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = std + epsilon;
    let normalized = window.iter().map(|x| (x - mean) / scale).collect();
    (normalized, mean, std)
}

/// Inverse of [`instance_norm_baseline`] for a forecast.
pub fn instance_denormalize(y: &[f64], mean: f64, std: f64, epsilon: f64) -> Vec<f64> {
    y.iter().map(|v| v * (std + epsilon) + mean).collect()
}

/// Ordinary least squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
}

/// Solves `min |X b - y|` by Householder QR. `x` is row-major `n x p`.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = x.len();
    if n != y.len() {
        return Err(WdanError::DimMismatch {
            context: "ols response",
            expected: n,
            actual: y.len(),
        });
    }
    let p = x.first().map_or(0, Vec::len);
    if p == 0 || n <= p {
        return Err(WdanError::SingularRegression);
    }
    if x.iter().any(|r| r.len() != p) {
        return Err(WdanError::DimMismatch {
            context: "ols design row",
            expected: p,
            actual: x.iter().map(Vec::len).find(|l| *l != p).unwrap_or(p),
        });
    }
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let mut qty = y.to_vec();
    let col_norm_max = a.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    for k in 0..p {
        let alpha = {
            let s = norm2(&a[k][k..]);
            if a[k][k] > 0.0 {
                -s
            } else {
                s
            }
        };
        if alpha.abs() <= 1e-12 * col_norm_max.max(f64::MIN_POSITIVE) {
            return Err(WdanError::SingularRegression);
        }
        let mut v = a[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|t| t * t).sum();
        let reflect = |col: &mut [f64]| {
            let d: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vv;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= d * vi;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
    }
    // R is upper triangular: r[i][j] = a[j][i] for i <= j
    let r = |i: usize, j: usize| a[j][i];
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r(i, j) * coef[j]).sum();
        coef[i] = (qty[i] - s) / r(i, i);
    }
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(row, yi)| yi - row.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = rss / (n - p) as f64;
    // diag((R^T R)^-1) = squared row norms of R^-1
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let s: f64 = ((i + 1)..=j).map(|k| r(i, k) * rinv[k][j]).sum();
            rinv[i][j] = -s / r(i, i);
        }
    }
    let std_err = rinv
        .iter()
        .map(|row| (sigma2 * row.iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();
    Ok(OlsFit {
        coef,
        std_err,
        residuals,
        rss,
    })
}

fn norm2(v: &[f64]) -> f64 {
    // scaled to avoid overflow on large-valued series
    let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub lag_order: usize,
    /// `len - lag_order - 1`
    pub n_obs: usize,
}

/// Augmented Dickey-Fuller t-statistic with a constant term:
/// `dy[t] = a + g y[t-1] + sum_i c_i dy[t-i] + e`, statistic `g / se(g)`.
pub fn adf_statistic(series: &[f64], lag_order: usize) -> Result<AdfResult> {
    let n = series.len();
    if n <= lag_order + 2 {
        return Err(WdanError::SeriesTooShort {
            len: n,
            required: lag_order + 3,
        });
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let mut x = Vec::with_capacity(n - lag_order - 1);
    let mut y = Vec::with_capacity(n - lag_order - 1);
    for t in (lag_order + 1)..n {
        let mut row = Vec::with_capacity(lag_order + 2);
        row.push(1.0);
        row.push(series[t - 1]);
        for i in 1..=lag_order {
            row.push(dy[t - 1 - i]);
        }
        x.push(row);
        y.push(dy[t - 1]);
    }
    let fit = ols(&x, &y)?;
    if !(fit.std_err[1] > 0.0) {
        return Err(WdanError::SingularRegression);
    }
    Ok(AdfResult {
        statistic: fit.coef[1] / fit.std_err[1],
        lag_order,
        n_obs: y.len(),
    })
}

/// Forecast error summary over a set of windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mse: f64,
    pub mae: f64,
    pub n_windows: usize,
}

/// MSE and MAE averaged over all windows and channels.
pub fn evaluate(bundle: &ModelBundle, samples: &[PreparedSample]) -> Result<EvalMetrics> {
    let (mse, mae) = crate::trainer::forecast_metrics(bundle, samples)?;
    Ok(EvalMetrics {
        mse,
        mae,
        n_windows: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub mse: f64,
    pub mae: f64,
}

/// Metrics of one (dataset, horizon, variant) cell, averaged over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub dataset: String,
    pub horizon: usize,
    /// Input length, reported by length sweeps.
    pub input_len: usize,
    pub variant: Variant,
    pub mse: f64,
    pub mae: f64,
    pub runs: Vec<RunMetrics>,
}

impl MetricRow {
    pub fn from_runs(dataset: &str, input_len: usize, horizon: usize, variant: Variant, runs: Vec<RunMetrics>) -> Result<Self> {
        if runs.is_empty() {
            return Err(WdanError::NoData("metric row without runs".into()));
        }
        let n = runs.len() as f64;
        Ok(MetricRow {
            dataset: dataset.to_string(),
            horizon,
            input_len,
            variant,
            mse: runs.iter().map(|r| r.mse).sum::<f64>() / n,
            mae: runs.iter().map(|r| r.mae).sum::<f64>() / n,
            runs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config_digest: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<MetricRow>,
}

/// Hex SHA-256 of a value's canonical JSON.
pub fn config_digest<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

impl MetricsReport {
    pub fn variants(&self) -> Vec<Variant> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.variant) {
                out.push(r.variant);
            }
        }
        out
    }

    pub fn get(&self, dataset: &str, horizon: usize, variant: Variant) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.horizon == horizon && r.variant == variant)
    }

    /// Rows are (dataset, input length, horizon); columns are variant x {MSE, MAE}.
    pub fn table(&self) -> String {
        let variants = self.variants();
        let mut keys: Vec<(String, usize, usize)> = Vec::new();
        let mut cells: BTreeMap<(String, usize, usize, Variant), (f64, f64)> = BTreeMap::new();
        for r in &self.rows {
            let k = (r.dataset.clone(), r.input_len, r.horizon);
            if !keys.contains(&k) {
                keys.push(k.clone());
            }
            cells.insert((k.0, k.1, k.2, r.variant), (r.mse, r.mae));
        }
        let mut header = vec!["dataset".to_string(), "T".to_string(), "H".to_string()];
        for v in &variants {
            header.push(format!("{v}.mse"));
            header.push(format!("{v}.mae"));
        }
        let mut lines = vec![header];
        for (d, t, h) in &keys {
            let mut line = vec![d.clone(), t.to_string(), h.to_string()];
            for v in &variants {
                match cells.get(&(d.clone(), *t, *h, *v)) {
                    Some((mse, mae)) => {
                        line.push(format!("{mse:.4}"));
                        line.push(format!("{mae:.4}"));
                    }
                    None => {
                        line.push("-".into());
                        line.push("-".into());
                    }
                }
            }
            lines.push(line);
        }
        render_aligned(&lines)
    }
}

/// Left-aligns the first column and right-aligns the rest.
pub fn render_aligned(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| lines.iter().filter_map(|l| l.get(c)).map(|s| s.len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in lines {
        let mut row = String::new();
        for (c, cell) in l.iter().enumerate() {
            if c > 0 {
                row.push_str("  ");
            }
            if c == 0 {
                let _ = write!(row, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(row, "{cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(row.trim_end());
        out.push('\n');
    }
    out
}

pub use crate::experiment::compare_variants;

/// Static SVG line chart of `ys` against `xs`.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = span(xs);
    let (y0, y1) = span(ys);
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, w / 2.0, esc(title));
    let _ = writeln!(out, r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - m, w - m, h - m);
    let _ = writeln!(out, r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#, h - m);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#, w / 2.0, h - 15.0, esc(x_label));
    let _ = writeln!(out, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#, h / 2.0, h / 2.0, esc(y_label));
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{x}</text>"#, px(*x), h - m + 14.0);
        let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#, px(*x), py(*y));
    }
    for (v, label) in [(y0, y0), (y1, y1)] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{label:.4}</text>"#, m - 4.0, py(v) + 3.0);
    }
    let points: Vec<String> = xs.iter().zip(ys).map(|(x, y)| format!("{:.1},{:.1}", px(*x), py(*y))).collect();
    let _ = writeln!(out, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, points.join(" "));
    out.push_str("</svg>\n");
    out
}

pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if den == 0.0 {
        return 0.0;
    }
    x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / den
}

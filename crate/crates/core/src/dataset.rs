//! Benchmark CSV ingestion, chronological splits, sliding windows and a
//! synthetic non-stationary generator.

use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WdanError};

/// A multivariate series stored row-major (`values[t][j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
    timestamps: Option<Vec<String>>,
}

impl Series {
    pub fn new(
        names: Vec<String>,
        values: Vec<Vec<f64>>,
        timestamps: Option<Vec<String>>,
    ) -> Result<Self> {
        for (i, row) in values.iter().enumerate() {
            if row.len() != names.len() {
                return Err(WdanError::Schema(format!(
                    "row {i} has {} values for {} variables",
                    row.len(),
                    names.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(WdanError::Parse {
                    row: i,
                    message: format!("non-finite value in column `{}`", names[j]),
                });
            }
        }
        if let Some(ts) = &timestamps {
            if ts.len() != values.len() {
                return Err(WdanError::Schema("timestamp count differs from row count".into()));
            }
            for (i, pair) in ts.windows(2).enumerate() {
                if timestamp_key(&pair[1]) <= timestamp_key(&pair[0]) {
                    return Err(WdanError::Parse {
                        row: i + 1,
                        message: format!("timestamp `{}` does not increase", pair[1]),
                    });
                }
            }
        }
        Ok(Series {
            names,
            values,
            timestamps,
        })
    }

    /// Builds a series from per-variable columns.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let len = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != len) {
            return Err(WdanError::Schema("columns differ in length".into()));
        }
        let rows = (0..len).map(|t| columns.iter().map(|c| c[t]).collect()).collect();
        Series::new(names, rows, None)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_vars()).map(|j| self.column(j)).collect()
    }

    /// The `(input, target)` pair starting at `origin`, one row per variable.
    pub fn window(&self, origin: usize, input_len: usize, horizon: usize) -> Result<WindowBatch> {
        let end = origin + input_len + horizon;
        if end > self.len() {
            return Err(WdanError::SeriesTooShort {
                len: self.len(),
                required: end,
            });
        }
        let slice = |range: Range<usize>| {
            (0..self.n_vars())
                .map(|j| self.values[range.clone()].iter().map(|r| r[j]).collect())
                .collect()
        };
        Ok(WindowBatch {
            inputs: slice(origin..origin + input_len),
            targets: slice(origin + input_len..end),
            origin,
        })
    }
}

/// Orders timestamps by their embedded integers so that both
/// `2016-07-01 00:00:00` and `1990/1/2 0:00` compare chronologically.
fn timestamp_key(ts: &str) -> Vec<u64> {
    ts.split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap_or(u64::MAX))
        .collect()
}

/// One forecasting sample: `N x T` inputs and `N x H` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub origin: usize,
}

/// What a CSV is expected to contain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub name: Option<String>,
    pub vars: Option<usize>,
}

impl CsvSchema {
    /// Variable counts of the public benchmark files.
    pub fn known(name: &str) -> Option<Self> {
        let vars = match name.to_ascii_lowercase().as_str() {
            "exchange" | "exchange_rate" => 8,
            "etth1" | "etth2" | "ettm1" | "ettm2" => 7,
            "weather" => 21,
            "electricity" | "ecl" => 321,
            _ => return None,
        };
        Some(CsvSchema {
            name: Some(name.to_string()),
            vars: Some(vars),
        })
    }
}

/// Reads a benchmark CSV: header row, timestamp in the first column,
/// numeric variables in the rest. Rows with empty or non-numeric cells are
/// rejected.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Series> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| WdanError::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| WdanError::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.len() < 2 {
        return Err(WdanError::Schema("need a timestamp column and at least one variable".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if let Some(vars) = schema.vars {
        if vars != names.len() {
            return Err(WdanError::Schema(format!(
                "expected {vars} variables, file has {}",
                names.len()
            )));
        }
    }
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| WdanError::Parse {
            row: line,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(WdanError::Parse {
                row: line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        timestamps.push(record[0].to_string());
        let row = record
            .iter()
            .skip(1)
            .zip(&names)
            .map(|(cell, name)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| WdanError::Parse {
                        row: line,
                        message: format!("bad value `{cell}` in column `{name}`"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
    }
    Series::new(names, values, Some(timestamps)).map_err(|e| match e {
        WdanError::Parse { row, message } => WdanError::Parse {
            row: row + 2,
            message,
        },
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum SplitSpec {
    /// 6:2:2
    Ett,
    /// 7:1:2
    Standard,
    Custom { train: f64, val: f64, test: f64 },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Standard
    }
}

impl SplitSpec {
    pub fn ratios(&self) -> (f64, f64, f64) {
        match *self {
            SplitSpec::Ett => (0.6, 0.2, 0.2),
            SplitSpec::Standard => (0.7, 0.1, 0.2),
            SplitSpec::Custom { train, val, test } => (train, val, test),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.ratios();
        if [a, b, c].iter().any(|r| !(*r >= 0.0 && r.is_finite())) || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(WdanError::config("split", "ratios must be nonnegative and sum to 1"));
        }
        Ok(())
    }
}

/// Contiguous chronological row ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl Splits {
    pub fn lens(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Row counts per split: train and test are truncated products of the
/// ratios, validation takes the remainder.
pub fn split_ranges(n_rows: usize, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let (a, _, c) = spec.ratios();
    // tolerate 0.7 * 10 = 7.000000000000001 style rounding
    let part = |r: f64| ((r * n_rows as f64) + 1e-9).floor() as usize;
    let n_train = part(a).min(n_rows);
    let n_test = part(c).min(n_rows - n_train);
    let n_val = n_rows - n_train - n_test;
    Ok(Splits {
        train: 0..n_train,
        val: n_train..n_train + n_val,
        test: n_train + n_val..n_rows,
    })
}

/// Writes the benchmark layout: `date` column (timestamps or row index)
/// followed by one column per variable.
pub fn write_csv<W: std::io::Write>(s: &Series, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| WdanError::Schema(format!("csv write failed: {e}"));
    let mut header = vec!["date".to_string()];
    header.extend(s.names().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (t, row) in s.rows().iter().enumerate() {
        let mut rec = vec![s.timestamps().map_or_else(|| t.to_string(), |ts| ts[t].clone())];
        // shortest round-trip representation
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| WdanError::Schema(format!("csv write failed: {e}")))?;
    Ok(())
}

/// Chronological splits that each hold at least one `window_len`-row window.
pub fn make_splits(s: &Series, spec: &SplitSpec, window_len: usize) -> Result<Splits> {
    let splits = split_ranges(s.len(), spec)?;
    let (a, b, c) = splits.lens();
    let shortest = a.min(b).min(c);
    if shortest < window_len.max(1) {
        let ratio_min = {
            let (x, y, z) = spec.ratios();
            x.min(y).min(z)
        };
        let required = if ratio_min > 0.0 {
            (window_len as f64 / ratio_min).ceil() as usize
        } else {
            usize::MAX
        };
        return Err(WdanError::SeriesTooShort {
            len: s.len(),
            required,
        });
    }
    Ok(splits)
}

/// Window placement relative to split boundaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Input and target both lie inside the split.
    #[default]
    Strict,
    /// Only the target must lie inside the split; the input may reach back
    /// into earlier rows.
    Lookback,
}

/// Row range windows are drawn from for one split under a policy.
pub fn window_range(split: &Range<usize>, input_len: usize, policy: BoundaryPolicy) -> Range<usize> {
    match policy {
        BoundaryPolicy::Strict => split.clone(),
        BoundaryPolicy::Lookback => split.start.saturating_sub(input_len)..split.end,
    }
}

/// Origins of the sliding windows in `range`.
#[derive(Debug, Clone)]
pub struct WindowIter {
    next: usize,
    last: usize,
    stride: usize,
    done: bool,
}

impl Iterator for WindowIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.done || self.next > self.last {
            return None;
        }
        let cur = self.next;
        match self.next.checked_add(self.stride) {
            Some(n) => self.next = n,
            None => self.done = true,
        }
        Some(cur)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = if self.done || self.next > self.last {
            0
        } else {
            (self.last - self.next) / self.stride + 1
        };
        (n, Some(n))
    }
}

impl ExactSizeIterator for WindowIter {}

pub fn window_iter(range: Range<usize>, input_len: usize, horizon: usize, stride: usize) -> Result<WindowIter> {
    if stride == 0 {
        return Err(WdanError::config("stride", "must be positive"));
    }
    let need = input_len + horizon;
    if range.len() < need {
        return Err(WdanError::SeriesTooShort {
            len: range.len(),
            required: need,
        });
    }
    Ok(WindowIter {
        next: range.start,
        last: range.end - need,
        stride,
        done: false,
    })
}

/// Global per-variable standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Variables whose training std was zero (floored to 1e-8).
    pub degenerate: Vec<String>,
}

pub const DEGENERATE_STD_FLOOR: f64 = 1e-8;

impl ZScore {
    pub fn fit(s: &Series, train: &Range<usize>) -> Result<Self> {
        if train.is_empty() || train.end > s.len() {
            return Err(WdanError::NoData("training split is empty".into()));
        }
        let rows = &s.rows()[train.clone()];
        let n = rows.len() as f64;
        let mut mean = vec![0.0; s.n_vars()];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; s.n_vars()];
        for r in rows {
            for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let mut degenerate = Vec::new();
        let std = var
            .iter()
            .zip(s.names())
            .map(|(v, name)| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    degenerate.push(name.clone());
                    DEGENERATE_STD_FLOOR
                }
            })
            .collect();
        Ok(ZScore {
            mean,
            std,
            degenerate,
        })
    }

    /// Fails with `DegenerateVariable` if any variable was flagged.
    pub fn require_nondegenerate(&self) -> Result<()> {
        match self.degenerate.first() {
            Some(name) => Err(WdanError::DegenerateVariable { name: name.clone() }),
            None => Ok(()),
        }
    }

    pub fn transform(&self, s: &Series) -> Result<Series> {
        let rows = s
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&self.mean)
                    .zip(&self.std)
                    .map(|((v, m), sd)| (v - m) / sd)
                    .collect()
            })
            .collect();
        Series::new(s.names().to_vec(), rows, s.timestamps().map(<[String]>::to_vec))
    }

    pub fn inverse_value(&self, var: usize, v: f64) -> f64 {
        v * self.std[var] + self.mean[var]
    }
}

/// Fits on the training split and standardizes every row.
pub fn zscore_fit_transform(s: &Series, splits: &Splits) -> Result<(Series, ZScore)> {
    let z = ZScore::fit(s, &splits.train)?;
    if !z.degenerate.is_empty() {
        log::warn!("degenerate variables (zero training variance): {:?}", z.degenerate);
    }
    Ok((z.transform(s)?, z))
}

/// Generator for drifting, heteroscedastic series:
/// `y[t] = trend[t] + amplitude * sin(2 pi t / period + phase) + sd[t] * e[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub length: usize,
    pub n_vars: usize,
    /// Std of the random-walk increments of the trend.
    pub drift_scale: f64,
    /// Deterministic slope added to the trend.
    pub slope: f64,
    /// Level shifts of `step_size * N(0,1)` every `step_every` steps (0 = off).
    pub step_every: usize,
    pub step_size: f64,
    /// The trend's drift is redrawn as `slope + regime_scale * N(0,1)`
    /// every `regime_every` steps (0 = off), giving a piecewise-linear trend.
    pub regime_every: usize,
    pub regime_scale: f64,
    pub period: f64,
    pub amplitude: f64,
    pub noise: f64,
    /// Log-amplitude of the slow volatility modulation.
    pub vol_mod: f64,
    pub vol_period: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            length: 2000,
            n_vars: 1,
            drift_scale: 0.05,
            slope: 0.0,
            step_every: 0,
            step_size: 0.0,
            regime_every: 0,
            regime_scale: 0.0,
            period: 24.0,
            amplitude: 1.0,
            noise: 0.2,
            vol_mod: 0.5,
            vol_period: 500.0,
        }
    }
}

pub fn synth_nonstationary(cfg: &SynthConfig, seed: u64) -> Result<Series> {
    if cfg.length == 0 || cfg.n_vars == 0 {
        return Err(WdanError::config("synth", "length and n_vars must be positive"));
    }
    if !(cfg.period > 0.0 && cfg.vol_period > 0.0) {
        return Err(WdanError::config("synth", "period and vol_period must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut columns = Vec::with_capacity(cfg.n_vars);
    for j in 0..cfg.n_vars {
        let phase = tau * j as f64 / cfg.n_vars as f64;
        let mut level = 0.0;
        let mut drift = cfg.slope;
        let mut col = Vec::with_capacity(cfg.length);
        for t in 0..cfg.length {
            let z: f64 = StandardNormal.sample(&mut rng);
            if cfg.regime_every > 0 && t % cfg.regime_every == 0 {
                let r: f64 = StandardNormal.sample(&mut rng);
                drift = cfg.slope + cfg.regime_scale * r;
            }
            level += cfg.drift_scale * z + drift;
            if cfg.step_every > 0 && t > 0 && t % cfg.step_every == 0 {
                let s: f64 = StandardNormal.sample(&mut rng);
                level += cfg.step_size * s;
            }
            let tf = t as f64;
            let sd = cfg.noise * (cfg.vol_mod * (tau * tf / cfg.vol_period + phase).sin()).exp();
            let e: f64 = StandardNormal.sample(&mut rng);
            col.push(level + cfg.amplitude * (tau * tf / cfg.period + phase).sin() + sd * e);
        }
        columns.push(col);
    }
    let names = (0..cfg.n_vars).map(|j| format!("x{j}")).collect();
    Series::from_columns(names, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_arithmetic() {
        let s = split_ranges(17420, &SplitSpec::Ett).unwrap();
        assert_eq!(s.lens(), (10452, 3484, 3484));
        let s = split_ranges(10, &SplitSpec::Standard).unwrap();
        assert_eq!(s.lens(), (7, 1, 2));
        assert_eq!(s.train.end, s.val.start);
        assert_eq!(s.val.end, s.test.start);
    }

    #[test]
    fn too_short_for_a_window() {
        let s = Series::from_columns(vec!["a".into()], vec![vec![0.0, 1.0, 2.0]]).unwrap();
        assert!(matches!(
            make_splits(&s, &SplitSpec::Standard, 720),
            Err(WdanError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_iter(0..30, 20, 10, 1).unwrap().count(), 1);
        assert_eq!(window_iter(5..44, 20, 10, 1).unwrap().len(), 10);
        assert_eq!(window_iter(0..39, 20, 10, 3).unwrap().collect::<Vec<_>>(), vec![0, 3, 6, 9]);
        assert!(matches!(window_iter(0..29, 20, 10, 1), Err(WdanError::SeriesTooShort { .. })));
    }

    #[test]
    fn lookback_policy_extends_only_backwards() {
        assert_eq!(window_range(&(100..200), 30, BoundaryPolicy::Strict), 100..200);
        assert_eq!(window_range(&(100..200), 30, BoundaryPolicy::Lookback), 70..200);
        assert_eq!(window_range(&(10..200), 30, BoundaryPolicy::Lookback), 0..200);
    }

    #[test]
    fn csv_parse_error_names_row() {
        let text = "date,a,b\n2020-01-01 00:00:00,1.0,2.0\n2020-01-01 01:00:00,oops,3.0\n";
        match read_csv(text.as_bytes(), &CsvSchema::default()) {
            Err(WdanError::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let gap = "date,a\n2020-01-01,1.0\n2020-01-02,\n";
        assert!(matches!(read_csv(gap.as_bytes(), &CsvSchema::default()), Err(WdanError::Parse { row: 3, .. })));
    }

    #[test]
    fn csv_schema_mismatch() {
        let text = "date,a,b\n2020-01-01,1.0,2.0\n";
        let schema = CsvSchema::known("ETTh1").unwrap();
        assert!(matches!(read_csv(text.as_bytes(), &schema), Err(WdanError::Schema(_))));
        let ok = read_csv(text.as_bytes(), &CsvSchema { name: None, vars: Some(2) }).unwrap();
        assert_eq!((ok.len(), ok.n_vars()), (1, 2));
    }

    #[test]
    fn timestamps_must_increase() {
        let text = "date,a\n1990/1/10 0:00,1\n1990/1/2 0:00,2\n";
        assert!(matches!(read_csv(text.as_bytes(), &CsvSchema::default()), Err(WdanError::Parse { row: 3, .. })));
        let text = "date,a\n1990/1/2 0:00,1\n1990/1/10 0:00,2\n";
        assert!(read_csv(text.as_bytes(), &CsvSchema::default()).is_ok());
    }

    #[test]
    fn zscore_flags_constant_variable() {
        let s = Series::from_columns(
            vec!["c".into(), "v".into()],
            vec![vec![2.0; 10], (0..10).map(f64::from).collect()],
        )
        .unwrap();
        let splits = split_ranges(10, &SplitSpec::Standard).unwrap();
        let (_, z) = zscore_fit_transform(&s, &splits).unwrap();
        assert_eq!(z.degenerate, vec!["c".to_string()]);
        assert_eq!(z.std[0], DEGENERATE_STD_FLOOR);
        assert!(matches!(z.require_nondegenerate(), Err(WdanError::DegenerateVariable { .. })));
    }

    #[test]
    fn synth_is_seeded() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_nonstationary(&cfg, 3).unwrap(), synth_nonstationary(&cfg, 3).unwrap());
        assert_ne!(synth_nonstationary(&cfg, 3).unwrap(), synth_nonstationary(&cfg, 4).unwrap());
    }

    #[test]
    fn window_is_contiguous() {
        let s = Series::from_columns(vec!["a".into()], vec![(0..20).map(f64::from).collect()]).unwrap();
        let w = s.window(3, 5, 2).unwrap();
        assert_eq!(w.inputs[0], vec![3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(w.targets[0], vec![8.0, 9.0]);
    }
}

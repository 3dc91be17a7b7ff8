//! End-to-end runs built from an [`ExperimentConfig`]: load and standardize
//! a dataset once, then train and evaluate variants on shared windows.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSpec, ExperimentConfig, SourceSpec};
use crate::dataset::{
    load_csv, make_splits, synth_nonstationary, window_iter, window_range, zscore_fit_transform, BoundaryPolicy,
    CsvSchema, Series, Splits, ZScore,
};
use crate::error::{Result, WdanError};
use crate::eval::{self, adf_statistic, EvalMetrics, MetricRow, MetricsReport, RunMetrics};
use crate::pipeline::{ModelBundle, Pipeline, PreparedSample, Variant};
use crate::trainer::{run_strategy, Checkpointer, TrainReport, TrainSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

/// A z-scored dataset with its splits; shared by every variant of a table.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub name: String,
    pub series: Series,
    pub splits: Splits,
    pub zscore: ZScore,
    pub boundary: BoundaryPolicy,
    columns: Vec<Vec<f64>>,
}

/// Reads the raw series a dataset spec points to.
pub fn load_series(spec: &DatasetSpec, cfg: &ExperimentConfig) -> Result<Series> {
    match &spec.source {
        SourceSpec::Synth { synth, seed } => synth_nonstationary(synth, *seed),
        SourceSpec::Csv { path, schema, n_vars } => {
            let mut s = schema
                .as_deref()
                .and_then(CsvSchema::known)
                .unwrap_or_default();
            if n_vars.is_some() {
                s.vars = *n_vars;
            }
            load_csv(cfg.resolve(path), &s)
        }
    }
}

/// Loads, splits and z-scores a dataset so that every split holds a window
/// of `input_len + horizon` rows (or `horizon` rows under lookback).
pub fn load_dataset(spec: &DatasetSpec, cfg: &ExperimentConfig, input_len: usize, horizon: usize) -> Result<LoadedData> {
    let raw = load_series(spec, cfg)?;
    let need = match spec.boundary {
        BoundaryPolicy::Strict => input_len + horizon,
        BoundaryPolicy::Lookback => horizon,
    };
    let splits = make_splits(&raw, &spec.split, need)?;
    let (series, zscore) = zscore_fit_transform(&raw, &splits)?;
    let columns = series.columns();
    Ok(LoadedData {
        name: spec.name.clone(),
        series,
        splits,
        zscore,
        boundary: spec.boundary,
        columns,
    })
}

impl LoadedData {
    pub fn split_range(&self, kind: SplitKind) -> std::ops::Range<usize> {
        match kind {
            SplitKind::Train => self.splits.train.clone(),
            SplitKind::Val => self.splits.val.clone(),
            SplitKind::Test => self.splits.test.clone(),
        }
    }

    /// Window origins of a split; lookback origins may precede the split but
    /// targets never leave it.
    pub fn origins(&self, kind: SplitKind, input_len: usize, horizon: usize, stride: usize) -> Result<Vec<usize>> {
        let split = self.split_range(kind);
        let range = window_range(&split, input_len, self.boundary);
        let mut out: Vec<usize> = window_iter(range, input_len, horizon, stride)?.collect();
        out.retain(|o| o + input_len >= split.start);
        Ok(out)
    }

    /// Channel-flattened `(input, target)` pairs.
    pub fn windows(&self, kind: SplitKind, input_len: usize, horizon: usize, stride: usize) -> Result<Vec<(&[f64], &[f64])>> {
        let origins = self.origins(kind, input_len, horizon, stride)?;
        let mut out = Vec::with_capacity(origins.len() * self.columns.len());
        for o in origins {
            for col in &self.columns {
                out.push((&col[o..o + input_len], &col[o + input_len..o + input_len + horizon]));
            }
        }
        Ok(out)
    }

    pub fn prepare(&self, pipeline: &Pipeline, kind: SplitKind, stride: usize) -> Result<Vec<PreparedSample>> {
        self.windows(kind, pipeline.input_len(), pipeline.horizon(), stride)?
            .into_iter()
            .map(|(x, y)| pipeline.prepare(x, y))
            .collect()
    }
}

/// A trained bundle with its report and held-out metrics.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: TrainReport,
    pub val: EvalMetrics,
    pub test: EvalMetrics,
    pub bundle: ModelBundle,
}

pub fn make_pipeline(cfg: &ExperimentConfig, variant: Variant, input_len: usize, horizon: usize) -> Result<Pipeline> {
    Pipeline::new(
        variant,
        &cfg.norm_config(),
        cfg.normalization.moving_avg_kernel,
        input_len,
        horizon,
    )
}

/// Trains one variant with one seed and evaluates it on the test split.
pub fn train_run(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    variant: Variant,
    input_len: usize,
    horizon: usize,
    seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<RunOutcome> {
    let pipeline = make_pipeline(cfg, variant, input_len, horizon)?;
    let set = TrainSet {
        train: data.prepare(&pipeline, SplitKind::Train, cfg.window.stride)?,
        val: data.prepare(&pipeline, SplitKind::Val, cfg.window.eval_stride)?,
    };
    let test = data.prepare(&pipeline, SplitKind::Test, cfg.window.eval_stride)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bundle = ModelBundle::new(
        variant,
        input_len,
        horizon,
        &cfg.predictor,
        cfg.backbone,
        cfg.normalization.epsilon,
        &mut rng,
    )?;
    let tcfg = crate::trainer::TrainConfig {
        seed,
        ..cfg.trainer.clone()
    };
    let ckpt = checkpoint_dir.map(|dir| Checkpointer {
        dir: dir.to_path_buf(),
        norm: cfg.norm_config(),
        moving_avg_kernel: cfg.normalization.moving_avg_kernel,
    });
    let report = run_strategy(&mut bundle, &set, &tcfg, ckpt.as_ref())?;
    log::info!(
        "{} T={input_len} H={horizon} seed={seed}: val mse {:.5}",
        variant,
        report.best_val_mse
    );
    let val = eval::evaluate(&bundle, &set.val)?;
    let test = eval::evaluate(&bundle, &test)?;
    Ok(RunOutcome {
        report,
        val,
        test,
        bundle,
    })
}

/// Digest of the settings that determine results (output location excluded).
pub fn experiment_digest(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output_dir = Default::default();
    eval::config_digest(&c)
}

fn require_dataset(cfg: &ExperimentConfig) -> Result<&DatasetSpec> {
    cfg.dataset
        .as_ref()
        .ok_or_else(|| WdanError::config("dataset", "no dataset configured"))
}

/// Loads the configured dataset sized for the longest configured window.
pub fn load_primary(cfg: &ExperimentConfig, input_len: usize) -> Result<LoadedData> {
    let h = cfg.window.horizons.iter().copied().max().unwrap_or(0);
    load_dataset(require_dataset(cfg)?, cfg, input_len, h)
}

/// Trains every requested variant for every horizon and seed on one shared
/// dataset and reports test metrics.
pub fn compare_variants(cfg: &ExperimentConfig, data: &LoadedData) -> Result<MetricsReport> {
    let variants = cfg.variant_list()?;
    let mut rows = Vec::new();
    for &h in &cfg.window.horizons {
        for &v in &variants {
            let mut runs = Vec::new();
            for &seed in &cfg.seeds {
                let out = train_run(cfg, data, v, cfg.window.input_len, h, seed, None)?;
                runs.push(RunMetrics {
                    seed,
                    mse: out.test.mse,
                    mae: out.test.mae,
                });
            }
            rows.push(MetricRow::from_runs(&data.name, cfg.window.input_len, h, v, runs)?);
        }
    }
    Ok(MetricsReport {
        config_digest: experiment_digest(cfg)?,
        seeds: cfg.seeds.clone(),
        rows,
    })
}

/// Test MSE of the primary variant at each input length (first horizon,
/// first seed).
pub fn sensitivity(cfg: &ExperimentConfig, lengths: &[usize]) -> Result<MetricsReport> {
    if lengths.is_empty() {
        return Err(WdanError::config("lengths", "list is empty"));
    }
    for &l in lengths {
        cfg.check_input_len(&format!("lengths[{l}]"), l)?;
    }
    let variant = cfg.primary_variant()?;
    let horizon = cfg.window.horizons[0];
    let seed = cfg.seeds[0];
    let longest = lengths.iter().copied().max().unwrap_or(0);
    let data = load_dataset(require_dataset(cfg)?, cfg, longest, horizon)?;
    let mut rows = Vec::new();
    for &l in lengths {
        let out = train_run(cfg, &data, variant, l, horizon, seed, None)?;
        rows.push(MetricRow::from_runs(
            &data.name,
            l,
            horizon,
            variant,
            vec![RunMetrics {
                seed,
                mse: out.test.mse,
                mae: out.test.mae,
            }],
        )?);
    }
    Ok(MetricsReport {
        config_digest: experiment_digest(cfg)?,
        seeds: vec![seed],
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub dataset: String,
    pub lag: usize,
    /// Mean of the per-variable statistics.
    pub statistic: f64,
    pub per_variable: Vec<f64>,
    pub rows: usize,
}

/// ADF statistic of each configured dataset on the raw series.
pub fn diag(cfg: &ExperimentConfig) -> Result<Vec<DiagRow>> {
    if cfg.diag.datasets.is_empty() {
        return Err(WdanError::config("diag.datasets", "list is empty"));
    }
    let lag = cfg.diag.lag;
    cfg.diag
        .datasets
        .iter()
        .map(|spec| {
            let s = load_series(spec, cfg)?;
            let per_variable = s
                .columns()
                .iter()
                .map(|c| adf_statistic(c, lag).map(|r| r.statistic))
                .collect::<Result<Vec<f64>>>()?;
            let statistic = per_variable.iter().sum::<f64>() / per_variable.len().max(1) as f64;
            Ok(DiagRow {
                dataset: spec.name.clone(),
                lag,
                statistic,
                per_variable,
                rows: s.len(),
            })
        })
        .collect()
}

pub fn diag_table(rows: &[DiagRow]) -> String {
    let mut lines = vec![vec!["dataset".to_string(), "rows".into(), "lag".into(), "adf".into()]];
    for r in rows {
        lines.push(vec![
            r.dataset.clone(),
            r.rows.to_string(),
            r.lag.to_string(),
            format!("{:.4}", r.statistic),
        ]);
    }
    eval::render_aligned(&lines)
}

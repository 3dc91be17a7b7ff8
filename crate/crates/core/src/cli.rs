//! Command-line front end. Exit codes: 0 success, 1 internal error,
//! 2 configuration error, 3 data error, 4 numeric failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SourceSpec};
use crate::dataset::write_csv;
use crate::error::WdanError;
use crate::eval::{self, MetricRow, MetricsReport, RunMetrics};
use crate::experiment::{self, SplitKind};
use crate::pipeline::{BundleRecord, ModelBundle};
use crate::trainer::{StageTiming, TrainReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "wdan", version, about = "Wavelet-based disentangled adaptive normalization for forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config and the environment.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replaces the configured seed list with a single seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the configured variant for every horizon.
    Train(Common),
    /// Evaluate saved models on the test split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Directory holding `model_h{H}.json` files written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Compare normalization variants under identical data and seeds.
    Ablate(Common),
    /// Test MSE as a function of input length.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Comma-separated input lengths.
        #[arg(long)]
        lengths: String,
    },
    /// Write the configured synthetic dataset as CSV.
    Synth(Common),
    /// ADF statistics of the configured diagnostic datasets.
    Diag(Common),
}

/// Error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code(e: &WdanError) -> i32 {
    use WdanError::*;
    match e {
        Config { .. }
        | UnsupportedWavelet(_)
        | InvalidBasis { .. }
        | InvalidLevels
        | TooManyLevels { .. }
        | WindowTooShort { .. }
        | InvalidStrategy(_) => EXIT_CONFIG,
        Parse { .. } | Schema(_) | DegenerateVariable { .. } | SeriesTooShort { .. } | NoData(_) | Io { .. } => {
            EXIT_DATA
        }
        NumericFailure(_) => EXIT_NUMERIC,
        _ => EXIT_INTERNAL,
    }
}

impl From<WdanError> for CliError {
    fn from(e: WdanError) -> Self {
        CliError {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// One trained horizon in `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub horizon: usize,
    pub seed: u64,
    pub test_mse: f64,
    pub test_mae: f64,
    pub model: String,
    pub report: TrainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainArtifact {
    pub config_digest: String,
    pub variant: String,
    pub input_len: usize,
    pub runs: Vec<TrainRun>,
}

/// Final model written by `train` and read by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub config_digest: String,
    pub bundle: BundleRecord,
}

pub fn model_file_name(horizon: usize) -> String {
    format!("model_h{horizon}.json")
}

fn load_config(c: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config).map_err(|e| match e {
        WdanError::Io { path, source } => config_error(format!("cannot read config {}: {source}", path)),
        other => CliError::from(other),
    })?;
    if let Some(seed) = c.seed {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn out_dir(c: &Common, cfg: &ExperimentConfig) -> PathBuf {
    c.out.clone().unwrap_or_else(|| cfg.effective_output_dir())
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| WdanError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::from(WdanError::io(path, e)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(WdanError::from)?;
    s.push('\n');
    write_file(path, &s)
}

fn write_metrics(dir: &Path, report: &MetricsReport) -> CliResult<String> {
    write_json(&dir.join("metrics.json"), report)?;
    let table = report.table();
    write_file(&dir.join("table.txt"), &table)?;
    Ok(table)
}

fn cmd_train(c: &Common) -> CliResult<()> {
    let cfg = load_config(c)?;
    let out = out_dir(c, &cfg);
    let variant = cfg.primary_variant()?;
    let digest = experiment::experiment_digest(&cfg)?;
    let seed = cfg.seeds[0];
    let t = cfg.window.input_len;
    let data = experiment::load_primary(&cfg, t)?;
    let ckpt_root = out.join("checkpoints");
    let mut runs = Vec::new();
    let mut timing: Vec<(usize, Vec<StageTiming>)> = Vec::new();
    for &h in &cfg.window.horizons {
        let dir = ckpt_root.join(format!("h{h}"));
        let outcome = experiment::train_run(&cfg, &data, variant, t, h, seed, Some(&dir))?;
        let model = model_file_name(h);
        write_json(
            &ckpt_root.join(&model),
            &ModelFile {
                config_digest: digest.clone(),
                bundle: outcome
                    .bundle
                    .to_record(&cfg.norm_config(), cfg.normalization.moving_avg_kernel),
            },
        )?;
        timing.push((h, outcome.report.timing.clone()));
        runs.push(TrainRun {
            horizon: h,
            seed,
            test_mse: outcome.test.mse,
            test_mae: outcome.test.mae,
            model,
            report: outcome.report,
        });
    }
    let artifact = TrainArtifact {
        config_digest: digest,
        variant: variant.label().to_string(),
        input_len: t,
        runs,
    };
    write_json(&out.join("report.json"), &artifact)?;
    write_json(&out.join("timing.json"), &timing)?;
    for r in &artifact.runs {
        println!(
            "H={} val_mse={:.6} test_mse={:.6} test_mae={:.6}",
            r.horizon, r.report.best_val_mse, r.test_mse, r.test_mae
        );
    }
    Ok(())
}

fn cmd_evaluate(c: &Common, checkpoint: &Path) -> CliResult<()> {
    let cfg = load_config(c)?;
    let out = out_dir(c, &cfg);
    let variant = cfg.primary_variant()?;
    let t = cfg.window.input_len;
    let norm = cfg.norm_config();
    let mut models = Vec::new();
    for &h in &cfg.window.horizons {
        let path = checkpoint.join(model_file_name(h));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| config_error(format!("cannot read checkpoint {}: {e}", path.display())))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| config_error(format!("checkpoint {} is malformed: {e}", path.display())))?;
        let r = &file.bundle;
        let mismatch = |what: &str, found: String, want: String| {
            config_error(format!("checkpoint {}: {what} is {found}, config says {want}", path.display()))
        };
        if r.input_len != t {
            return Err(mismatch("input_len", r.input_len.to_string(), t.to_string()));
        }
        if r.horizon != h {
            return Err(mismatch("horizon", r.horizon.to_string(), h.to_string()));
        }
        if r.variant != variant {
            return Err(mismatch("variant", r.variant.to_string(), variant.to_string()));
        }
        if r.norm != norm || r.moving_avg_kernel != cfg.normalization.moving_avg_kernel {
            return Err(mismatch("normalization", format!("{:?}", r.norm), format!("{norm:?}")));
        }
        let bundle = ModelBundle::from_record(r).map_err(|e| config_error(format!("checkpoint {}: {e}", path.display())))?;
        models.push((h, file.config_digest, bundle));
    }
    let data = experiment::load_primary(&cfg, t)?;
    let mut rows = Vec::new();
    for (h, digest, bundle) in &models {
        if *digest != experiment::experiment_digest(&cfg)? {
            log::warn!("model for H={h} was trained under a different config digest");
        }
        let pipeline = experiment::make_pipeline(&cfg, variant, t, *h)?;
        let test = data.prepare(&pipeline, SplitKind::Test, cfg.window.eval_stride)?;
        let m = eval::evaluate(bundle, &test)?;
        rows.push(MetricRow::from_runs(
            &data.name,
            t,
            *h,
            variant,
            vec![RunMetrics {
                seed: cfg.seeds[0],
                mse: m.mse,
                mae: m.mae,
            }],
        )?);
    }
    let report = MetricsReport {
        config_digest: experiment::experiment_digest(&cfg)?,
        seeds: vec![cfg.seeds[0]],
        rows,
    };
    print!("{}", write_metrics(&out, &report)?);
    Ok(())
}

fn cmd_ablate(c: &Common) -> CliResult<()> {
    let cfg = load_config(c)?;
    let out = out_dir(c, &cfg);
    cfg.variant_list()?;
    let data = experiment::load_primary(&cfg, cfg.window.input_len)?;
    let report = experiment::compare_variants(&cfg, &data)?;
    print!("{}", write_metrics(&out, &report)?);
    Ok(())
}

pub fn parse_lengths(s: &str) -> CliResult<Vec<usize>> {
    let lengths = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| config_error(format!("lengths: `{p}` is not a nonnegative integer")))
        })
        .collect::<CliResult<Vec<usize>>>()?;
    if lengths.is_empty() {
        return Err(config_error("lengths: list is empty"));
    }
    Ok(lengths)
}

fn cmd_sensitivity(c: &Common, lengths: &str) -> CliResult<()> {
    let cfg = load_config(c)?;
    let out = out_dir(c, &cfg);
    let lengths = parse_lengths(lengths)?;
    for &l in &lengths {
        cfg.check_input_len(&format!("lengths[{l}]"), l)?;
    }
    let report = experiment::sensitivity(&cfg, &lengths)?;
    let table = write_metrics(&out, &report)?;
    let xs: Vec<f64> = report.rows.iter().map(|r| r.input_len as f64).collect();
    let ys: Vec<f64> = report.rows.iter().map(|r| r.mse).collect();
    let svg = eval::svg_line_chart(
        &format!("{} test MSE vs input length (H={})", cfg.variant, cfg.window.horizons[0]),
        "input length",
        "MSE",
        &xs,
        &ys,
    );
    write_file(&out.join("sensitivity.svg"), &svg)?;
    print!("{table}");
    Ok(())
}

fn cmd_synth(c: &Common) -> CliResult<()> {
    let cfg = load_config(c)?;
    let out = out_dir(c, &cfg);
    let spec = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| config_error("dataset: no dataset configured"))?;
    let (synth, seed) = match &spec.source {
        SourceSpec::Synth { synth, seed } => (synth, c.seed.unwrap_or(*seed)),
        SourceSpec::Csv { .. } => return Err(config_error("dataset.source: synth needs a synthetic source")),
    };
    let series = crate::dataset::synth_nonstationary(synth, seed)?;
    let path = out.join(format!("{}.csv", spec.name));
    std::fs::create_dir_all(&out).map_err(|e| WdanError::io(&out, e))?;
    let file = std::fs::File::create(&path).map_err(|e| WdanError::io(&path, e))?;
    write_csv(&series, std::io::BufWriter::new(file))?;
    println!("wrote {} rows x {} variables to {}", series.len(), series.n_vars(), path.display());
    Ok(())
}

fn cmd_diag(c: &Common) -> CliResult<()> {
    let cfg = load_config(c)?;
    let out = out_dir(c, &cfg);
    let rows = experiment::diag(&cfg)?;
    write_json(&out.join("diag.json"), &rows)?;
    let table = experiment::diag_table(&rows);
    write_file(&out.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(c) => cmd_train(c),
        Command::Evaluate { common, checkpoint } => cmd_evaluate(common, checkpoint),
        Command::Ablate(c) => cmd_ablate(c),
        Command::Sensitivity { common, lengths } => cmd_sensitivity(common, lengths),
        Command::Synth(c) => cmd_synth(c),
        Command::Diag(c) => cmd_diag(c),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

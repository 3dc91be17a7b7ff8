//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backbone::BackboneKind;
use crate::dataset::{BoundaryPolicy, SplitSpec, SynthConfig};
use crate::error::{Result, WdanError};
use crate::norm::NormConfig;
use crate::pipeline::Variant;
use crate::predictor::PredictorConfig;
use crate::trainer::TrainConfig;
use crate::wavelet::{self, Boundary};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "WDAN_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SourceSpec {
    Synth {
        #[serde(default)]
        synth: SynthConfig,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        /// Relative paths resolve against the config file's directory.
        path: PathBuf,
        /// Benchmark name used to look up the expected variable count.
        #[serde(default)]
        schema: Option<String>,
        #[serde(default)]
        n_vars: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub source: SourceSpec,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub input_len: usize,
    pub horizons: Vec<usize>,
    /// Stride between training windows.
    pub stride: usize,
    /// Stride between validation and test windows.
    pub eval_stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            input_len: 720,
            horizons: vec![96, 192, 336, 720],
            stride: 1,
            eval_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveletConfig {
    pub basis: String,
    pub levels: usize,
    pub boundary: Boundary,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        let n = NormConfig::default();
        WaveletConfig {
            basis: n.basis,
            levels: n.levels,
            boundary: n.boundary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    pub window_half_width: usize,
    pub epsilon: f64,
    /// Trend kernel of the moving-average ablation.
    pub moving_avg_kernel: usize,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        let n = NormConfig::default();
        NormalizationConfig {
            window_half_width: n.window_half_width,
            epsilon: n.epsilon,
            moving_avg_kernel: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagConfig {
    pub datasets: Vec<DatasetSpec>,
    pub lag: usize,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            datasets: Vec::new(),
            lag: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: Option<DatasetSpec>,
    pub window: WindowConfig,
    pub wavelet: WaveletConfig,
    pub normalization: NormalizationConfig,
    pub predictor: PredictorConfig,
    pub backbone: BackboneKind,
    pub trainer: TrainConfig,
    /// Variant trained by `train`, `evaluate` and `sensitivity`.
    pub variant: String,
    /// Variants compared by `ablate`.
    pub variants: Vec<String>,
    /// One run per seed; metrics are averaged over runs.
    pub seeds: Vec<u64>,
    pub diag: DiagConfig,
    pub output_dir: PathBuf,
    /// Directory relative dataset paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            window: WindowConfig::default(),
            wavelet: WaveletConfig::default(),
            normalization: NormalizationConfig::default(),
            predictor: PredictorConfig::default(),
            backbone: BackboneKind::default(),
            trainer: TrainConfig::default(),
            variant: Variant::Wdan.label().to_string(),
            variants: Variant::ALL.iter().map(|v| v.label().to_string()).collect(),
            seeds: vec![0],
            diag: DiagConfig::default(),
            output_dir: PathBuf::from("wdan-out"),
            base_dir: PathBuf::new(),
        }
    }
}

impl ExperimentConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| WdanError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| WdanError::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn norm_config(&self) -> NormConfig {
        NormConfig {
            window_half_width: self.normalization.window_half_width,
            epsilon: self.normalization.epsilon,
            basis: self.wavelet.basis.clone(),
            levels: self.wavelet.levels,
            boundary: self.wavelet.boundary,
        }
    }

    pub fn primary_variant(&self) -> Result<Variant> {
        Variant::parse(&self.variant).map_err(|_| WdanError::config("variant", format!("unknown variant `{}`", self.variant)))
    }

    pub fn variant_list(&self) -> Result<Vec<Variant>> {
        let mut out = Vec::new();
        for name in &self.variants {
            let v = Variant::parse(name)
                .map_err(|_| WdanError::config("variants", format!("unknown variant `{name}`")))?;
            if out.contains(&v) {
                return Err(WdanError::config("variants", format!("variant `{name}` listed twice")));
            }
            out.push(v);
        }
        if out.is_empty() {
            return Err(WdanError::config("variants", "list is empty"));
        }
        Ok(out)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Output directory after the environment override.
    pub fn effective_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Checks one input length against the wavelet and sliding-window
    /// constraints; `field` names the offending setting in the error.
    pub fn check_input_len(&self, field: &str, input_len: usize) -> Result<()> {
        let levels = self.wavelet.levels;
        let dyadic = 1usize.checked_shl(levels as u32).unwrap_or(usize::MAX);
        if input_len < dyadic {
            return Err(WdanError::config(
                field,
                format!("{input_len} is shorter than 2^levels = {dyadic}"),
            ));
        }
        let span = 2 * self.normalization.window_half_width + 1;
        if span > input_len {
            return Err(WdanError::config(
                field,
                format!("{input_len} is shorter than the sliding window 2w+1 = {span}"),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.wavelet.levels == 0 || self.wavelet.levels >= usize::BITS as usize {
            return Err(WdanError::config("wavelet.levels", "must be between 1 and 63"));
        }
        wavelet::make_basis(&self.wavelet.basis)
            .map_err(|e| WdanError::config("wavelet.basis", e.to_string()))?;
        let eps = self.normalization.epsilon;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(WdanError::config("normalization.epsilon", "must be a positive finite number"));
        }
        let k = self.normalization.moving_avg_kernel;
        if k == 0 || k % 2 == 0 {
            return Err(WdanError::config("normalization.moving_avg_kernel", "must be odd and positive"));
        }
        self.check_input_len("window.input_len", self.window.input_len)?;
        if self.window.horizons.is_empty() {
            return Err(WdanError::config("window.horizons", "list is empty"));
        }
        for &h in &self.window.horizons {
            self.check_input_len("window.horizons", h)?;
        }
        if self.window.stride == 0 {
            return Err(WdanError::config("window.stride", "must be positive"));
        }
        if self.window.eval_stride == 0 {
            return Err(WdanError::config("window.eval_stride", "must be positive"));
        }
        if self.predictor.hidden_dim == 0 {
            return Err(WdanError::config("predictor.hidden_dim", "must be positive"));
        }
        if self.predictor.head_layers == 0 {
            return Err(WdanError::config("predictor.head_layers", "must be at least 1"));
        }
        if let BackboneKind::Dense { hidden: 0 } = self.backbone {
            return Err(WdanError::config("backbone.hidden", "must be positive"));
        }
        self.trainer.validate()?;
        self.primary_variant()?;
        self.variant_list()?;
        if self.seeds.is_empty() {
            return Err(WdanError::config("seeds", "list is empty"));
        }
        for d in self.dataset.iter().chain(&self.diag.datasets) {
            d.split
                .validate()
                .map_err(|_| WdanError::config("dataset.split", format!("`{}`: ratios must be nonnegative and sum to 1", d.name)))?;
        }
        Ok(())
    }
}

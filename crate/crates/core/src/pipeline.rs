//! Normalize -> backbone -> de-normalize, for every normalization variant.
//!
//! Windows are preprocessed once into [`PreparedSample`]s: everything that
//! depends only on data (statistics, features, normalized input, horizon
//! statistics) is computed up front so that training epochs only run the
//! networks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::{Backbone, BackboneKind, BackboneRecord, Forecaster};
use crate::error::{check_len, Result, WdanError};
use crate::eval::instance_norm_baseline;
use crate::nn::{self, Grads};
use crate::norm::{self, Decomposer, DisentangledNorm, NormConfig, NormStats};
use crate::predictor::{
    build_features, PredictorConfig, PredictorRecord, PredictorVariant, StatFeatures, StatPredictor,
};

/// Normalization scheme wrapped around the backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Wavelet trend/residual statistics with the full predictor.
    Wdan,
    /// Moving-average trend instead of the wavelet trend.
    MovingAvg,
    /// Wavelet statistics, predictor without the differenced-mean branch.
    NoDiff,
    /// Per-window scalar mean/std, reused for de-normalization.
    InstanceNorm,
    /// Backbone on the raw (globally z-scored) window.
    None,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Wdan,
        Variant::MovingAvg,
        Variant::NoDiff,
        Variant::InstanceNorm,
        Variant::None,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Wdan => "wdan",
            Variant::MovingAvg => "moving_avg",
            Variant::NoDiff => "no_diff",
            Variant::InstanceNorm => "instance_norm",
            Variant::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| WdanError::config("variants", format!("unknown variant `{s}`")))
    }

    pub fn uses_predictor(self) -> bool {
        matches!(self, Variant::Wdan | Variant::MovingAvg | Variant::NoDiff)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreparedInput {
    Adaptive {
        normalized: Vec<f64>,
        features: StatFeatures,
        overall_mean: f64,
        overall_std_mean: f64,
        /// Ground-truth statistics of the target window.
        horizon_stats: NormStats,
    },
    Instance {
        normalized: Vec<f64>,
        mean: f64,
        std: f64,
    },
    Raw {
        input: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    pub input: PreparedInput,
    pub target: Vec<f64>,
}

impl PreparedSample {
    pub fn backbone_input(&self) -> &[f64] {
        match &self.input {
            PreparedInput::Adaptive { normalized, .. } | PreparedInput::Instance { normalized, .. } => {
                normalized
            }
            PreparedInput::Raw { input } => input,
        }
    }
}

/// Data-side preprocessing for one variant.
#[derive(Debug, Clone)]
pub struct Pipeline {
    variant: Variant,
    norm: Option<DisentangledNorm>,
    epsilon: f64,
    input_len: usize,
    horizon: usize,
}

impl Pipeline {
    pub fn new(
        variant: Variant,
        norm_cfg: &NormConfig,
        moving_avg_kernel: usize,
        input_len: usize,
        horizon: usize,
    ) -> Result<Self> {
        norm_cfg.validate()?;
        let norm = match variant {
            Variant::Wdan | Variant::NoDiff => Some(DisentangledNorm::new(norm_cfg)?),
            Variant::MovingAvg => Some(DisentangledNorm::with_decomposer(
                Decomposer::moving_average(moving_avg_kernel)?,
                norm_cfg.window_half_width,
                norm_cfg.epsilon,
            )?),
            Variant::InstanceNorm | Variant::None => None,
        };
        if let Some(n) = &norm {
            for (field, len) in [("input_len", input_len), ("horizon", horizon)] {
                if len < n.min_len() {
                    return Err(WdanError::config(
                        field,
                        format!("{len} is shorter than the {} steps the normalizer needs", n.min_len()),
                    ));
                }
            }
        }
        if input_len == 0 || horizon == 0 {
            return Err(WdanError::config("window", "input_len and horizon must be positive"));
        }
        Ok(Pipeline {
            variant,
            norm,
            epsilon: norm_cfg.epsilon,
            input_len,
            horizon,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn prepare(&self, input: &[f64], target: &[f64]) -> Result<PreparedSample> {
        check_len("sample input", self.input_len, input.len())?;
        check_len("sample target", self.horizon, target.len())?;
        let prepared = match &self.norm {
            Some(n) => {
                let (stats, split) = n.analyze(input)?;
                let normalized = norm::normalize(input, &stats, self.epsilon)?;
                let features = build_features(&stats, &split.residual)?;
                PreparedInput::Adaptive {
                    normalized,
                    features,
                    overall_mean: stats.overall_mean,
                    overall_std_mean: stats.overall_std_mean,
                    horizon_stats: n.stats(target)?,
                }
            }
            None if self.variant == Variant::InstanceNorm => {
                let (normalized, mean, std) = instance_norm_baseline(input, self.epsilon);
                PreparedInput::Instance {
                    normalized,
                    mean,
                    std,
                }
            }
            None => PreparedInput::Raw {
                input: input.to_vec(),
            },
        };
        Ok(PreparedSample {
            input: prepared,
            target: target.to_vec(),
        })
    }
}

/// Trainable modules for one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub variant: Variant,
    pub predictor: Option<StatPredictor>,
    pub backbone: Backbone,
    pub epsilon: f64,
}

/// Loss plus whichever gradients were requested.
#[derive(Debug, Clone)]
pub struct ForecastGrads {
    pub loss: f64,
    pub backbone: Option<Grads>,
    pub predictor: Option<Grads>,
}

impl ModelBundle {
    pub fn new<R: Rng + ?Sized>(
        variant: Variant,
        input_len: usize,
        horizon: usize,
        predictor_cfg: &PredictorConfig,
        backbone_kind: BackboneKind,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let predictor = if variant.uses_predictor() {
            let cfg = PredictorConfig {
                variant: if variant == Variant::NoDiff {
                    PredictorVariant::NoDiff
                } else {
                    PredictorVariant::Full
                },
                ..predictor_cfg.clone()
            };
            Some(StatPredictor::new(input_len, horizon, &cfg, rng)?)
        } else {
            None
        };
        let backbone = Backbone::new(backbone_kind, input_len, horizon, rng)?;
        Ok(ModelBundle {
            variant,
            predictor,
            backbone,
            epsilon,
        })
    }

    fn predictor_for<'a>(&'a self, sample: &PreparedSample) -> Result<&'a StatPredictor> {
        self.predictor.as_ref().ok_or_else(|| {
            WdanError::ContractViolation(format!(
                "variant `{}` has no statistics predictor for an adaptive sample",
                self.variant
            ))
        })
        .and_then(|p| match sample.input {
            PreparedInput::Adaptive { .. } => Ok(p),
            _ => Err(WdanError::ContractViolation("sample was not prepared adaptively".into())),
        })
    }

    /// De-normalized forecast for one prepared sample.
    pub fn forecast(&self, sample: &PreparedSample) -> Result<Vec<f64>> {
        let eps = self.epsilon;
        let y_bar = self.backbone.predict(sample.backbone_input())?;
        match &sample.input {
            PreparedInput::Adaptive {
                features,
                overall_mean,
                overall_std_mean,
                ..
            } => {
                let stats = self
                    .predictor_for(sample)?
                    .predict_stats(features, *overall_mean, *overall_std_mean)?;
                norm::denormalize(&y_bar, &stats.mean, &stats.std, eps)
            }
            PreparedInput::Instance { mean, std, .. } => {
                Ok(y_bar.iter().map(|y| y * (std + eps) + mean).collect())
            }
            PreparedInput::Raw { .. } => Ok(y_bar),
        }
    }

    /// Forecast MSE and its gradients with respect to the requested modules.
    pub fn forecast_grads(
        &self,
        sample: &PreparedSample,
        want_backbone: bool,
        want_predictor: bool,
    ) -> Result<ForecastGrads> {
        let eps = self.epsilon;
        let (y_bar, bb_tape) = self.backbone.forward(sample.backbone_input())?;
        let target = &sample.target;
        match &sample.input {
            PreparedInput::Adaptive {
                features,
                overall_mean,
                overall_std_mean,
                ..
            } => {
                let predictor = self.predictor_for(sample)?;
                let (stats, p_tape) = predictor.forward(features, *overall_mean, *overall_std_mean)?;
                let y_hat = norm::denormalize(&y_bar, &stats.mean, &stats.std, eps)?;
                let loss = nn::mse(&y_hat, target)?;
                let g = nn::mse_grad(&y_hat, target)?;
                let backbone = if want_backbone {
                    let gy: Vec<f64> = g.iter().zip(&stats.std).map(|(g, s)| g * (s + eps)).collect();
                    Some(self.backbone.backward(&bb_tape, &gy)?)
                } else {
                    None
                };
                let predictor = if want_predictor {
                    let g_std: Vec<f64> = g.iter().zip(&y_bar).map(|(g, y)| g * y).collect();
                    Some(predictor.backward(&p_tape, &g, &g_std)?)
                } else {
                    None
                };
                Ok(ForecastGrads {
                    loss,
                    backbone,
                    predictor,
                })
            }
            PreparedInput::Instance { mean, std, .. } => {
                let scale = std + eps;
                let y_hat: Vec<f64> = y_bar.iter().map(|y| y * scale + mean).collect();
                let loss = nn::mse(&y_hat, target)?;
                let backbone = if want_backbone {
                    let g: Vec<f64> = nn::mse_grad(&y_hat, target)?.iter().map(|g| g * scale).collect();
                    Some(self.backbone.backward(&bb_tape, &g)?)
                } else {
                    None
                };
                Ok(ForecastGrads {
                    loss,
                    backbone,
                    predictor: None,
                })
            }
            PreparedInput::Raw { .. } => {
                let loss = nn::mse(&y_bar, target)?;
                let backbone = if want_backbone {
                    Some(self.backbone.backward(&bb_tape, &nn::mse_grad(&y_bar, target)?)?)
                } else {
                    None
                };
                Ok(ForecastGrads {
                    loss,
                    backbone,
                    predictor: None,
                })
            }
        }
    }

    /// Statistics-pretraining loss and predictor gradients.
    pub fn pretrain_grads(&self, sample: &PreparedSample) -> Result<(f64, Grads)> {
        let predictor = self.predictor_for(sample)?;
        match &sample.input {
            PreparedInput::Adaptive {
                features,
                overall_mean,
                overall_std_mean,
                horizon_stats,
                ..
            } => predictor.pretrain_loss(features, *overall_mean, *overall_std_mean, horizon_stats),
            _ => unreachable!("checked by predictor_for"),
        }
    }

    pub fn to_record(&self, norm_cfg: &NormConfig, moving_avg_kernel: usize) -> BundleRecord {
        BundleRecord {
            variant: self.variant,
            input_len: self.backbone.input_len(),
            horizon: self.backbone.horizon(),
            epsilon: self.epsilon,
            norm: norm_cfg.clone(),
            moving_avg_kernel,
            predictor: self
                .predictor
                .as_ref()
                .map(|p| p.to_record(norm_cfg.levels, norm_cfg.window_half_width)),
            backbone: self.backbone.to_record(),
        }
    }

    pub fn from_record(r: &BundleRecord) -> Result<Self> {
        let predictor = r.predictor.as_ref().map(StatPredictor::from_record).transpose()?;
        if predictor.is_some() != r.variant.uses_predictor() {
            return Err(WdanError::Schema(format!(
                "variant `{}` checkpoint has the wrong set of modules",
                r.variant
            )));
        }
        let backbone = Backbone::from_record(&r.backbone)?;
        check_len("bundle input_len", r.input_len, backbone.input_len())?;
        check_len("bundle horizon", r.horizon, backbone.horizon())?;
        Ok(ModelBundle {
            variant: r.variant,
            predictor,
            backbone,
            epsilon: r.epsilon,
        })
    }
}

/// Serialized [`ModelBundle`] plus the preprocessing it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleRecord {
    pub variant: Variant,
    pub input_len: usize,
    pub horizon: usize,
    pub epsilon: f64,
    pub norm: NormConfig,
    pub moving_avg_kernel: usize,
    pub predictor: Option<PredictorRecord>,
    pub backbone: BackboneRecord,
}

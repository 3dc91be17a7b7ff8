//! Point-level normalization statistics from disentangled components.
//!
//! The mean series is the low-frequency trend of the window. The standard
//! deviation series is a centered sliding-window standard deviation of the
//! high-frequency residual, with each endpoint replicated `w` times so that
//! the statistics have the same length as the window.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, WdanError};
use crate::wavelet::{self, Boundary, ComponentSplit, WaveletBasis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    /// Half width `w`; the sliding window spans `2w + 1` steps.
    pub window_half_width: usize,
    pub epsilon: f64,
    pub basis: String,
    pub levels: usize,
    pub boundary: Boundary,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            window_half_width: 12,
            epsilon: 1e-5,
            basis: "coif3".to_string(),
            levels: 2,
            boundary: Boundary::Symmetric,
        }
    }
}

impl NormConfig {
    /// Shortest window these settings can process.
    pub fn min_len(&self) -> usize {
        let dyadic = if self.levels >= usize::BITS as usize {
            usize::MAX
        } else {
            1usize << self.levels
        };
        dyadic.max(2 * self.window_half_width + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(WdanError::config("epsilon", "must be a positive finite number"));
        }
        if self.levels == 0 {
            return Err(WdanError::config("levels", "must be at least 1"));
        }
        wavelet::make_basis(&self.basis)?;
        Ok(())
    }
}

/// Point-level mean and standard-deviation series plus their averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub overall_mean: f64,
    pub overall_std_mean: f64,
}

impl NormStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        check_len("stats std length", mean.len(), std.len())?;
        if mean.is_empty() {
            return Err(WdanError::NoData("empty statistics series".into()));
        }
        let overall_mean = average(&mean);
        let overall_std_mean = average(&std);
        Ok(NormStats {
            mean,
            std,
            overall_mean,
            overall_std_mean,
        })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

pub(crate) fn average(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// How a window is split into trend and residual.
#[derive(Debug, Clone)]
pub enum Decomposer {
    Wavelet {
        basis: WaveletBasis,
        levels: usize,
        boundary: Boundary,
    },
    /// Replication-padded centered moving average; residual = input - trend.
    MovingAverage { kernel: usize },
}

impl Decomposer {
    pub fn wavelet(cfg: &NormConfig) -> Result<Self> {
        if cfg.levels == 0 {
            return Err(WdanError::InvalidLevels);
        }
        Ok(Decomposer::Wavelet {
            basis: wavelet::make_basis(&cfg.basis)?,
            levels: cfg.levels,
            boundary: cfg.boundary,
        })
    }

    pub fn moving_average(kernel: usize) -> Result<Self> {
        if kernel == 0 || kernel % 2 == 0 {
            return Err(WdanError::config(
                "moving_avg_kernel",
                format!("kernel {kernel} must be odd and positive"),
            ));
        }
        Ok(Decomposer::MovingAverage { kernel })
    }

    pub fn min_len(&self) -> usize {
        match self {
            Decomposer::Wavelet { levels, .. } => 1usize << levels,
            Decomposer::MovingAverage { .. } => 1,
        }
    }

    pub fn split(&self, window: &[f64]) -> Result<ComponentSplit> {
        match self {
            Decomposer::Wavelet {
                basis,
                levels,
                boundary,
            } => {
                let d = wavelet::decompose_with(window, basis, *levels, *boundary)?;
                wavelet::split_components(&d, basis)
            }
            Decomposer::MovingAverage { kernel } => {
                let trend = moving_average(window, *kernel);
                let residual = window.iter().zip(&trend).map(|(x, t)| x - t).collect();
                Ok(ComponentSplit { trend, residual })
            }
        }
    }
}

/// Centered moving average with replication padding of `(kernel - 1) / 2`
/// samples at each end.
pub fn moving_average(x: &[f64], kernel: usize) -> Vec<f64> {
    let half = (kernel / 2) as isize;
    let last = x.len() as isize - 1;
    let at = |i: isize| x[i.clamp(0, last) as usize];
    let mut sum: f64 = (-half..=half).map(at).sum();
    let mut out = Vec::with_capacity(x.len());
    for t in 0..x.len() as isize {
        out.push(sum / kernel as f64);
        sum += at(t + half + 1) - at(t - half);
    }
    out
}

/// Sliding standard deviation over `[t - w, t + w]` with replication padding.
pub fn sliding_std(residual: &[f64], w: usize) -> Vec<f64> {
    let n = residual.len();
    if n == 0 {
        return Vec::new();
    }
    let last = n as isize - 1;
    let w = w as isize;
    let at = |i: isize| residual[i.clamp(0, last) as usize];
    let size = (2 * w + 1) as f64;
    let mut window_sum: f64 = (-w..=w).map(at).sum();
    let mut out = Vec::with_capacity(n);
    for t in 0..n as isize {
        let local_mean = window_sum / size;
        let var = (t - w..=t + w)
            .map(|i| {
                let dev = at(i) - local_mean;
                dev * dev
            })
            .sum::<f64>()
            / size;
        out.push(var.sqrt());
        window_sum += at(t + w + 1) - at(t - w);
    }
    out
}

/// Statistics extractor bound to a decomposition method.
#[derive(Debug, Clone)]
pub struct DisentangledNorm {
    decomposer: Decomposer,
    half_width: usize,
    epsilon: f64,
}

impl DisentangledNorm {
    pub fn new(cfg: &NormConfig) -> Result<Self> {
        cfg.validate()?;
        Self::with_decomposer(Decomposer::wavelet(cfg)?, cfg.window_half_width, cfg.epsilon)
    }

    pub fn with_decomposer(decomposer: Decomposer, half_width: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(WdanError::config("epsilon", "must be a positive finite number"));
        }
        Ok(DisentangledNorm {
            decomposer,
            half_width,
            epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn decomposer(&self) -> &Decomposer {
        &self.decomposer
    }

    pub fn min_len(&self) -> usize {
        self.decomposer.min_len().max(2 * self.half_width + 1)
    }

    /// Statistics together with the component split they were derived from.
    pub fn analyze(&self, window: &[f64]) -> Result<(NormStats, ComponentSplit)> {
        let required = self.min_len();
        if window.len() < required {
            return Err(WdanError::WindowTooShort {
                len: window.len(),
                required,
            });
        }
        let split = self.decomposer.split(window)?;
        let std = sliding_std(&split.residual, self.half_width);
        let stats = NormStats::new(split.trend.clone(), std)?;
        Ok((stats, split))
    }

    pub fn stats(&self, window: &[f64]) -> Result<NormStats> {
        self.analyze(window).map(|(s, _)| s)
    }
}

pub fn compute_stats(window: &[f64], cfg: &NormConfig) -> Result<NormStats> {
    DisentangledNorm::new(cfg)?.stats(window)
}

/// Ground-truth statistics of a horizon window; same procedure as
/// [`compute_stats`], applied to the horizon alone.
pub fn horizon_stats(horizon: &[f64], cfg: &NormConfig) -> Result<NormStats> {
    compute_stats(horizon, cfg)
}

pub fn normalize(window: &[f64], stats: &NormStats, epsilon: f64) -> Result<Vec<f64>> {
    check_len("normalize mean", window.len(), stats.mean.len())?;
    check_len("normalize std", window.len(), stats.std.len())?;
    Ok(window
        .iter()
        .zip(&stats.mean)
        .zip(&stats.std)
        .map(|((x, m), s)| (x - m) / (s + epsilon))
        .collect())
}

pub fn denormalize(
    prediction: &[f64],
    pred_mean: &[f64],
    pred_std: &[f64],
    epsilon: f64,
) -> Result<Vec<f64>> {
    check_len("denormalize mean", prediction.len(), pred_mean.len())?;
    check_len("denormalize std", prediction.len(), pred_std.len())?;
    Ok(prediction
        .iter()
        .zip(pred_mean)
        .zip(pred_std)
        .map(|((y, m), s)| y * (s + epsilon) + m)
        .collect())
}

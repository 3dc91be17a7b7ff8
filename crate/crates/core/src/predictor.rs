//! Future normalization statistics from the input window's statistics.
//!
//! Four single-layer encoders map length-`T` series to `D`-dim features:
//! `mlp1` (centered mean), `mlp2` (differenced centered mean), `mlp3`
//! (high-frequency residual) and `mlp4` (centered std). The mean head reads
//! `mlp1 | mlp2 | mlp3`, the std head reads `mlp4 | mlp1 | mlp3`, so `mlp1`
//! and `mlp3` are shared by both heads. Both heads predict the offset from
//! the window's overall statistics, which are added back afterwards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, WdanError};
use crate::nn::{Activation, DenseNet, Grads, NetRecord, Params, Tape};
use crate::norm::NormStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorVariant {
    Full,
    /// Drops the differenced-mean branch (`mlp2`).
    NoDiff,
}

/// Inputs to the statistics predictor for one univariate window.
#[derive(Debug, Clone, PartialEq)]
pub struct StatFeatures {
    pub mu_centered: Vec<f64>,
    pub sigma_centered: Vec<f64>,
    /// `mu_diff[0] = 0`; `mu_diff[t] = mu_centered[t] - mu_centered[t-1]`.
    pub mu_diff: Vec<f64>,
    pub residual: Vec<f64>,
}

impl StatFeatures {
    pub fn len(&self) -> usize {
        self.mu_centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_centered.is_empty()
    }
}

pub fn build_features(stats: &NormStats, residual: &[f64]) -> Result<StatFeatures> {
    let t = stats.mean.len();
    check_len("feature std series", t, stats.std.len())?;
    check_len("feature residual", t, residual.len())?;
    let mu_centered: Vec<f64> = stats.mean.iter().map(|m| m - stats.overall_mean).collect();
    let sigma_centered = stats.std.iter().map(|s| s - stats.overall_std_mean).collect();
    let mut mu_diff = Vec::with_capacity(t);
    if t > 0 {
        mu_diff.push(0.0);
    }
    mu_diff.extend(mu_centered.windows(2).map(|w| w[1] - w[0]));
    Ok(StatFeatures {
        mu_centered,
        sigma_centered,
        mu_diff,
        residual: residual.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub hidden_dim: usize,
    /// Number of dense layers in each head (hidden width = `hidden_dim`).
    pub head_layers: usize,
    pub activation: Activation,
    pub variant: PredictorVariant,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            hidden_dim: 64,
            head_layers: 2,
            activation: Activation::Relu,
            variant: PredictorVariant::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatPrediction {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PredictorTape {
    mlp1: Tape,
    mlp2: Option<Tape>,
    mlp3: Tape,
    mlp4: Tape,
    head_mu: Tape,
    head_sigma: Tape,
    /// Whether each std output was above the zero clamp.
    std_active: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatPredictor {
    mlp1: DenseNet,
    mlp2: Option<DenseNet>,
    mlp3: DenseNet,
    mlp4: DenseNet,
    head_mu: DenseNet,
    head_sigma: DenseNet,
    input_len: usize,
    horizon: usize,
    hidden_dim: usize,
    variant: PredictorVariant,
    frozen: bool,
}

fn head_dims(in_dim: usize, hidden: usize, out: usize, layers: usize) -> Vec<usize> {
    let mut dims = vec![in_dim];
    dims.extend(std::iter::repeat(hidden).take(layers.saturating_sub(1)));
    dims.push(out);
    dims
}

impl StatPredictor {
    pub fn new<R: Rng + ?Sized>(
        input_len: usize,
        horizon: usize,
        cfg: &PredictorConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if cfg.hidden_dim == 0 || cfg.head_layers == 0 || input_len == 0 || horizon == 0 {
            return Err(WdanError::config(
                "predictor",
                "hidden_dim, head_layers, input and horizon lengths must be positive",
            ));
        }
        let d = cfg.hidden_dim;
        let act = cfg.activation;
        let encoder =
            |rng: &mut R| DenseNet::mlp(&[input_len, d], act, act, rng);
        let mlp1 = encoder(rng)?;
        let mlp2 = match cfg.variant {
            PredictorVariant::Full => Some(encoder(rng)?),
            PredictorVariant::NoDiff => None,
        };
        let mlp3 = encoder(rng)?;
        let mlp4 = encoder(rng)?;
        let mu_in = if mlp2.is_some() { 3 * d } else { 2 * d };
        let head_mu = DenseNet::mlp(
            &head_dims(mu_in, d, horizon, cfg.head_layers),
            act,
            Activation::Identity,
            rng,
        )?;
        let head_sigma = DenseNet::mlp(
            &head_dims(3 * d, d, horizon, cfg.head_layers),
            act,
            Activation::Identity,
            rng,
        )?;
        Self::from_parts(mlp1, mlp2, mlp3, mlp4, head_mu, head_sigma)
    }

    /// Assembles a predictor from its six (or five, without `mlp2`) networks.
    pub fn from_parts(
        mlp1: DenseNet,
        mlp2: Option<DenseNet>,
        mlp3: DenseNet,
        mlp4: DenseNet,
        head_mu: DenseNet,
        head_sigma: DenseNet,
    ) -> Result<Self> {
        let input_len = mlp1.in_dim();
        let d = mlp1.out_dim();
        let encoders = [Some(&mlp1), mlp2.as_ref(), Some(&mlp3), Some(&mlp4)];
        for enc in encoders.into_iter().flatten() {
            check_len("encoder input", input_len, enc.in_dim())?;
            check_len("encoder output", d, enc.out_dim())?;
        }
        let mu_in = if mlp2.is_some() { 3 * d } else { 2 * d };
        if head_mu.in_dim() != mu_in {
            return Err(WdanError::DimMismatch {
                context: "mean head input",
                expected: mu_in,
                actual: head_mu.in_dim(),
            });
        }
        if head_sigma.in_dim() != 3 * d {
            return Err(WdanError::DimMismatch {
                context: "std head input",
                expected: 3 * d,
                actual: head_sigma.in_dim(),
            });
        }
        check_len("head outputs", head_mu.out_dim(), head_sigma.out_dim())?;
        let variant = if mlp2.is_some() {
            PredictorVariant::Full
        } else {
            PredictorVariant::NoDiff
        };
        Ok(StatPredictor {
            horizon: head_mu.out_dim(),
            mlp1,
            mlp2,
            mlp3,
            mlp4,
            head_mu,
            head_sigma,
            input_len,
            hidden_dim: d,
            variant,
            frozen: false,
        })
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn variant(&self) -> PredictorVariant {
        self.variant
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn unfreeze(&mut self) {
        self.frozen = false;
    }

    pub fn head_mu(&self) -> &DenseNet {
        &self.head_mu
    }

    pub fn head_mu_mut(&mut self) -> &mut DenseNet {
        &mut self.head_mu
    }

    pub fn head_sigma(&self) -> &DenseNet {
        &self.head_sigma
    }

    pub fn encoders(&self) -> [Option<&DenseNet>; 4] {
        [Some(&self.mlp1), self.mlp2.as_ref(), Some(&self.mlp3), Some(&self.mlp4)]
    }

    pub fn zero_params(&mut self) {
        for s in self.param_slices_mut() {
            s.fill(0.0);
        }
    }

    fn check_features(&self, f: &StatFeatures) -> Result<()> {
        for (context, len) in [
            ("mu_centered", f.mu_centered.len()),
            ("sigma_centered", f.sigma_centered.len()),
            ("mu_diff", f.mu_diff.len()),
            ("residual", f.residual.len()),
        ] {
            if len != self.input_len {
                return Err(WdanError::DimMismatch {
                    context,
                    expected: self.input_len,
                    actual: len,
                });
            }
        }
        Ok(())
    }

    pub fn forward(
        &self,
        f: &StatFeatures,
        overall_mean: f64,
        overall_std_mean: f64,
    ) -> Result<(StatPrediction, PredictorTape)> {
        self.check_features(f)?;
        let (e1, t1) = self.mlp1.forward(&f.mu_centered)?;
        let (e2, t2) = match &self.mlp2 {
            Some(net) => {
                let (e, t) = net.forward(&f.mu_diff)?;
                (Some(e), Some(t))
            }
            None => (None, None),
        };
        let (e3, t3) = self.mlp3.forward(&f.residual)?;
        let (e4, t4) = self.mlp4.forward(&f.sigma_centered)?;

        let mut mu_in = e1.clone();
        if let Some(e2) = &e2 {
            mu_in.extend_from_slice(e2);
        }
        mu_in.extend_from_slice(&e3);
        let mut sigma_in = e4;
        sigma_in.extend_from_slice(&e1);
        sigma_in.extend_from_slice(&e3);

        let (raw_mu, th_mu) = self.head_mu.forward(&mu_in)?;
        let (raw_sigma, th_sigma) = self.head_sigma.forward(&sigma_in)?;
        let mean = raw_mu.iter().map(|v| v + overall_mean).collect();
        let mut std_active = Vec::with_capacity(raw_sigma.len());
        let std = raw_sigma
            .iter()
            .map(|v| {
                let s = v + overall_std_mean;
                std_active.push(s > 0.0);
                s.max(0.0)
            })
            .collect();
        Ok((
            StatPrediction { mean, std },
            PredictorTape {
                mlp1: t1,
                mlp2: t2,
                mlp3: t3,
                mlp4: t4,
                head_mu: th_mu,
                head_sigma: th_sigma,
                std_active,
            },
        ))
    }

    pub fn predict_stats(
        &self,
        f: &StatFeatures,
        overall_mean: f64,
        overall_std_mean: f64,
    ) -> Result<StatPrediction> {
        self.forward(f, overall_mean, overall_std_mean).map(|(p, _)| p)
    }

    /// Parameter gradients given upstream gradients on the predicted mean
    /// and std series.
    pub fn backward(&self, tape: &PredictorTape, grad_mean: &[f64], grad_std: &[f64]) -> Result<Grads> {
        check_len("mean gradient", self.horizon, grad_mean.len())?;
        check_len("std gradient", self.horizon, grad_std.len())?;
        if tape.std_active.len() != self.horizon || tape.mlp2.is_some() != self.mlp2.is_some() {
            return Err(WdanError::TapeMismatch);
        }
        let d = self.hidden_dim;
        let grad_sigma: Vec<f64> = grad_std
            .iter()
            .zip(&tape.std_active)
            .map(|(g, &on)| if on { *g } else { 0.0 })
            .collect();
        let (g_head_mu, gin_mu) = self.head_mu.backward(&tape.head_mu, grad_mean)?;
        let (g_head_sigma, gin_sigma) = self.head_sigma.backward(&tape.head_sigma, &grad_sigma)?;

        let (mu_e1, rest) = gin_mu.split_at(d);
        let (mu_e2, mu_e3) = if self.mlp2.is_some() {
            rest.split_at(d)
        } else {
            (&rest[..0], rest)
        };
        let (sig_e4, rest) = gin_sigma.split_at(d);
        let (sig_e1, sig_e3) = rest.split_at(d);

        let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        let (g1, _) = self.mlp1.backward(&tape.mlp1, &sum(mu_e1, sig_e1))?;
        let g2 = match (&self.mlp2, &tape.mlp2) {
            (Some(net), Some(t)) => Some(net.backward(t, mu_e2)?.0),
            _ => None,
        };
        let (g3, _) = self.mlp3.backward(&tape.mlp3, &sum(mu_e3, sig_e3))?;
        let (g4, _) = self.mlp4.backward(&tape.mlp4, sig_e4)?;

        let mut grads = g1;
        if let Some(g2) = g2 {
            grads.append(g2);
        }
        grads.append(g3);
        grads.append(g4);
        grads.append(g_head_mu);
        grads.append(g_head_sigma);
        Ok(grads)
    }

    /// Pretraining objective `MSE(mean) + MSE(std)` against horizon
    /// statistics, with its parameter gradients.
    pub fn pretrain_loss(
        &self,
        f: &StatFeatures,
        overall_mean: f64,
        overall_std_mean: f64,
        target: &NormStats,
    ) -> Result<(f64, Grads)> {
        for (context, len) in [("target mean", target.mean.len()), ("target std", target.std.len())] {
            if len != self.horizon {
                return Err(WdanError::DimMismatch {
                    context,
                    expected: self.horizon,
                    actual: len,
                });
            }
        }
        let (pred, tape) = self.forward(f, overall_mean, overall_std_mean)?;
        let loss = crate::nn::mse(&pred.mean, &target.mean)? + crate::nn::mse(&pred.std, &target.std)?;
        let gm = crate::nn::mse_grad(&pred.mean, &target.mean)?;
        let gs = crate::nn::mse_grad(&pred.std, &target.std)?;
        Ok((loss, self.backward(&tape, &gm, &gs)?))
    }

    pub fn to_record(&self, levels: usize, half_width: usize) -> PredictorRecord {
        PredictorRecord {
            variant: self.variant,
            input_len: self.input_len,
            horizon: self.horizon,
            hidden_dim: self.hidden_dim,
            levels,
            half_width,
            mlp1: self.mlp1.to_record(),
            mlp2: self.mlp2.as_ref().map(DenseNet::to_record),
            mlp3: self.mlp3.to_record(),
            mlp4: self.mlp4.to_record(),
            head_mu: self.head_mu.to_record(),
            head_sigma: self.head_sigma.to_record(),
        }
    }

    pub fn from_record(r: &PredictorRecord) -> Result<Self> {
        let p = Self::from_parts(
            DenseNet::from_record(&r.mlp1)?,
            r.mlp2.as_ref().map(DenseNet::from_record).transpose()?,
            DenseNet::from_record(&r.mlp3)?,
            DenseNet::from_record(&r.mlp4)?,
            DenseNet::from_record(&r.head_mu)?,
            DenseNet::from_record(&r.head_sigma)?,
        )?;
        if p.variant != r.variant {
            return Err(WdanError::Schema("predictor variant tag does not match networks".into()));
        }
        check_len("predictor input_len", r.input_len, p.input_len)?;
        check_len("predictor horizon", r.horizon, p.horizon)?;
        check_len("predictor hidden_dim", r.hidden_dim, p.hidden_dim)?;
        Ok(p)
    }
}

impl Params for StatPredictor {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = self.mlp1.param_slices();
        if let Some(n) = &self.mlp2 {
            out.extend(n.param_slices());
        }
        out.extend(self.mlp3.param_slices());
        out.extend(self.mlp4.param_slices());
        out.extend(self.head_mu.param_slices());
        out.extend(self.head_sigma.param_slices());
        out
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.mlp1.param_slices_mut();
        if let Some(n) = &mut self.mlp2 {
            out.extend(n.param_slices_mut());
        }
        out.extend(self.mlp3.param_slices_mut());
        out.extend(self.mlp4.param_slices_mut());
        out.extend(self.head_mu.param_slices_mut());
        out.extend(self.head_sigma.param_slices_mut());
        out
    }
}

/// Checkpoint of a predictor with the window geometry it was trained for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorRecord {
    pub variant: PredictorVariant,
    pub input_len: usize,
    pub horizon: usize,
    pub hidden_dim: usize,
    pub levels: usize,
    pub half_width: usize,
    pub mlp1: NetRecord,
    pub mlp2: Option<NetRecord>,
    pub mlp3: NetRecord,
    pub mlp4: NetRecord,
    pub head_mu: NetRecord,
    pub head_sigma: NetRecord,
}

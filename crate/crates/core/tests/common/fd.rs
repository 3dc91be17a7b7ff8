use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wdan::nn::{Activation, Params};
use wdan::norm::{DisentangledNorm, NormConfig, NormStats};
use wdan::pipeline::{ModelBundle, PreparedInput, PreparedSample};
use wdan::predictor::{build_features, PredictorConfig, PredictorVariant, StatFeatures, StatPredictor};

use super::drifting_signal;

/// Central-difference step used by every gradient check.
pub const H_STEP: f64 = 1e-5;

/// First index violating `|a - n| <= 1e-4 * max(|a|, |n|) + 1e-6`.
pub fn grad_mismatch(analytic: &[f64], numeric: &[f64]) -> Option<(usize, f64, f64)> {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric)
        .enumerate()
        .find(|(_, (a, n))| (*a - *n).abs() > 1e-4 * a.abs().max(n.abs()) + 1e-6)
        .map(|(i, (a, n))| (i, *a, *n))
}

pub fn assert_grad_close(analytic: &[f64], numeric: &[f64], what: &str) {
    if let Some((i, a, n)) = grad_mismatch(analytic, numeric) {
        panic!("{what}[{i}]: analytic {a} vs numeric {n}");
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Predictor with `T = 16`, `H = 8`, hidden width 4 and jittered weights.
pub fn predictor_instance(r: &mut ChaCha8Rng, variant: PredictorVariant, act: Activation) -> StatPredictor {
    let cfg = PredictorConfig {
        hidden_dim: 4,
        head_layers: 2,
        activation: act,
        variant,
    };
    let mut p = StatPredictor::new(16, 8, &cfg, r).unwrap();
    // nonzero biases exercise every parameter slice
    let v: Vec<f64> = p.flat_params().iter().map(|w| w + r.gen_range(-0.05..0.05)).collect();
    p.set_flat_params(&v).unwrap();
    p
}

/// Features, overall statistics and horizon target of a random 16 + 8 window.
pub fn window_features(r: &mut ChaCha8Rng) -> (StatFeatures, f64, f64, NormStats) {
    let cfg = NormConfig {
        window_half_width: 2,
        ..NormConfig::default()
    };
    let x = drifting_signal(r, 24);
    let (input, horizon) = x.split_at(16);
    let norm = DisentangledNorm::new(&cfg).unwrap();
    let (stats, split) = norm.analyze(input).unwrap();
    let f = build_features(&stats, &split.residual).unwrap();
    let target = norm.stats(horizon).unwrap();
    (f, stats.overall_mean, stats.overall_std_mean.max(0.5), target)
}

/// Distance of the pre-clamp std outputs from zero (infinite without a
/// predictor).
pub fn clamp_margin(bundle: &ModelBundle, sample: &PreparedSample) -> f64 {
    const LIFT: f64 = 1e3;
    match (&bundle.predictor, &sample.input) {
        (Some(p), PreparedInput::Adaptive { features, overall_mean, overall_std_mean, .. }) => p
            .predict_stats(features, *overall_mean, overall_std_mean + LIFT)
            .unwrap()
            .std
            .iter()
            .fold(f64::INFINITY, |m, s| m.min((s - LIFT).abs())),
        _ => f64::INFINITY,
    }
}

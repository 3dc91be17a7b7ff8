#![allow(dead_code)]

pub mod fd;
pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wdan::dataset::{synth_nonstationary, SynthConfig};
use wdan::experiment::{load_dataset, make_pipeline, SplitKind};
use wdan::config::{DatasetSpec, ExperimentConfig, SourceSpec};
use wdan::nn::Params;
use wdan::pipeline::Variant;
use wdan::trainer::TrainSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random walk plus a sinusoid plus noise; exercises both wavelet bands.
pub fn drifting_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut level = rng.gen_range(-5.0..5.0);
    let amp = rng.gen_range(0.1..3.0);
    let period = rng.gen_range(4.0..60.0);
    let noise = rng.gen_range(0.01..1.0);
    (0..len)
        .map(|t| {
            level += rng.gen_range(-0.3..0.3);
            level + amp * (2.0 * std::f64::consts::PI * t as f64 / period).sin() + noise * rng.gen_range(-1.0..1.0)
        })
        .collect()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = l2(a).max(l2(b));
    if scale == 0.0 {
        0.0
    } else {
        l2(&diff) / scale
    }
}

/// Central differences of `loss` with respect to every flat parameter.
pub fn numeric_grad<P, F>(p: &P, h: f64, mut loss: F) -> Vec<f64>
where
    P: Params + Clone,
    F: FnMut(&P) -> f64,
{
    let base = p.flat_params();
    let mut work = p.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut v = base.clone();
        v[i] = base[i] + h;
        work.set_flat_params(&v).unwrap();
        let up = loss(&work);
        v[i] = base[i] - h;
        work.set_flat_params(&v).unwrap();
        let down = loss(&work);
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// Small synthetic training set for contract tests.
pub fn small_config(variant: Variant) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.dataset = Some(DatasetSpec {
        name: "synth_small".into(),
        source: SourceSpec::Synth {
            synth: SynthConfig {
                length: 900,
                n_vars: 2,
                drift_scale: 0.1,
                step_every: 200,
                step_size: 1.0,
                ..SynthConfig::default()
            },
            seed: 3,
        },
        split: Default::default(),
        boundary: Default::default(),
    });
    cfg.window.input_len = 48;
    cfg.window.horizons = vec![24];
    cfg.window.stride = 4;
    cfg.window.eval_stride = 4;
    cfg.normalization.window_half_width = 4;
    cfg.predictor.hidden_dim = 8;
    cfg.trainer.epochs_per_stage = [2, 2, 2];
    cfg.trainer.batch_size = 8;
    cfg.variant = variant.label().into();
    cfg.validate().unwrap();
    cfg
}

pub fn small_train_set(cfg: &ExperimentConfig, variant: Variant) -> TrainSet {
    let (t, h) = (cfg.window.input_len, cfg.window.horizons[0]);
    let data = load_dataset(cfg.dataset.as_ref().unwrap(), cfg, t, h).unwrap();
    let pipeline = make_pipeline(cfg, variant, t, h).unwrap();
    TrainSet {
        train: data.prepare(&pipeline, SplitKind::Train, cfg.window.stride).unwrap(),
        val: data.prepare(&pipeline, SplitKind::Val, cfg.window.eval_stride).unwrap(),
    }
}

pub fn synth_column(cfg: &SynthConfig, seed: u64) -> Vec<f64> {
    synth_nonstationary(cfg, seed).unwrap().column(0)
}

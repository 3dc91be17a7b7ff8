//! Small dense-network engine: affine layers, tape-based backpropagation,
//! Adam, and the two regression losses.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, WdanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    /// tanh approximation of GELU.
    Gelu,
}

const GELU_C: f64 = 0.7978845608028654; // sqrt(2 / pi)
const GELU_A: f64 = 0.044715;

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Gelu => 0.5 * z * (1.0 + (GELU_C * (z + GELU_A * z * z * z)).tanh()),
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gelu => {
                let u = GELU_C * (z + GELU_A * z * z * z);
                let t = u.tanh();
                let du = GELU_C * (1.0 + 3.0 * GELU_A * z * z);
                0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du
            }
        }
    }
}

/// Anything exposing its trainable parameters as an ordered list of slices.
pub trait Params {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn params_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Flat copy of every parameter, in slice order.
    fn flat_params(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        check_len("flat parameter vector", self.param_count(), values.len())?;
        let mut offset = 0;
        for slice in self.param_slices_mut() {
            let n = slice.len();
            slice.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

/// Gradients laid out like the `Params` slices they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn zeros_like<P: Params + ?Sized>(p: &P) -> Self {
        Grads(p.param_slices().iter().map(|s| vec![0.0; s.len()]).collect())
    }

    pub fn add_scaled(&mut self, other: &Grads, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().flatten().for_each(|x| *x *= s);
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.concat()
    }

    pub fn append(&mut self, mut other: Grads) {
        self.0.append(&mut other.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn xavier<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        DenseLayer {
            in_dim,
            out_dim,
            weights,
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    fn check(&self) -> Result<()> {
        check_len("layer weights", self.in_dim * self.out_dim, self.weights.len())?;
        check_len("layer bias", self.out_dim, self.bias.len())
    }

    fn affine(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// Values recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(WdanError::ContractViolation("network needs at least one layer".into()));
        }
        for layer in &layers {
            layer.check()?;
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(WdanError::DimMismatch {
                    context: "layer chain",
                    expected: pair[0].out_dim,
                    actual: pair[1].in_dim,
                });
            }
        }
        Ok(DenseNet { layers })
    }

    /// Multi-layer perceptron through `dims` (at least two entries); hidden
    /// layers use `hidden`, the last layer uses `output`.
    pub fn mlp<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(WdanError::ContractViolation("mlp needs input and output dims".into()));
        }
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                DenseLayer::xavier(dims[i], dims[i + 1], act, rng)
            })
            .collect();
        DenseNet::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn zero_params(&mut self) {
        for s in self.param_slices_mut() {
            s.fill(0.0);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        if input.len() != self.in_dim() {
            return Err(WdanError::DimMismatch {
                context: "network input",
                expected: self.in_dim(),
                actual: input.len(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for layer in &self.layers {
            let z = layer.affine(&current);
            let next = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut current, next));
            pre_activations.push(z);
        }
        Ok((
            current,
            Tape {
                inputs,
                pre_activations,
            },
        ))
    }

    /// Forward pass without recording a tape.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.in_dim() {
            return Err(WdanError::DimMismatch {
                context: "network input",
                expected: self.in_dim(),
                actual: input.len(),
            });
        }
        let mut current = input.to_vec();
        for layer in &self.layers {
            current = layer
                .affine(&current)
                .into_iter()
                .map(|v| layer.activation.apply(v))
                .collect();
        }
        Ok(current)
    }

    /// Reverse-mode pass; returns parameter gradients and the input gradient.
    pub fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<(Grads, Vec<f64>)> {
        if tape.inputs.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(tape.inputs.iter().zip(&tape.pre_activations))
                .any(|(l, (x, z))| x.len() != l.in_dim || z.len() != l.out_dim)
        {
            return Err(WdanError::TapeMismatch);
        }
        if output_grad.len() != self.out_dim() {
            return Err(WdanError::DimMismatch {
                context: "output gradient",
                expected: self.out_dim(),
                actual: output_grad.len(),
            });
        }
        let mut slices = vec![Vec::new(); 2 * self.layers.len()];
        let mut upstream = output_grad.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &tape.inputs[i];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&tape.pre_activations[i])
                .map(|(g, &z)| g * layer.activation.derivative(z))
                .collect();
            let mut gw = vec![0.0; layer.weights.len()];
            for (row, d) in gw.chunks_exact_mut(layer.in_dim).zip(&delta) {
                if *d != 0.0 {
                    for (w, xv) in row.iter_mut().zip(x) {
                        *w = d * xv;
                    }
                }
            }
            let mut gx = vec![0.0; layer.in_dim];
            for (row, d) in layer.weights.chunks_exact(layer.in_dim).zip(&delta) {
                if *d != 0.0 {
                    for (g, w) in gx.iter_mut().zip(row) {
                        *g += d * w;
                    }
                }
            }
            slices[2 * i] = gw;
            slices[2 * i + 1] = delta;
            upstream = gx;
        }
        Ok((Grads(slices), upstream))
    }

    pub fn to_record(&self) -> NetRecord {
        NetRecord {
            header: NetHeader {
                in_dim: self.in_dim(),
                out_dim: self.out_dim(),
                activations: self.layers.iter().map(|l| l.activation).collect(),
            },
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    shape: [l.out_dim, l.in_dim],
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn from_record(record: &NetRecord) -> Result<Self> {
        check_len(
            "checkpoint activations",
            record.layers.len(),
            record.header.activations.len(),
        )?;
        let layers = record
            .layers
            .iter()
            .zip(&record.header.activations)
            .map(|(l, &activation)| DenseLayer {
                in_dim: l.shape[1],
                out_dim: l.shape[0],
                weights: l.weights.clone(),
                bias: l.bias.clone(),
                activation,
            })
            .collect();
        let net = DenseNet::new(layers)?;
        check_len("checkpoint in_dim", record.header.in_dim, net.in_dim())?;
        check_len("checkpoint out_dim", record.header.out_dim, net.out_dim())?;
        Ok(net)
    }
}

impl Params for DenseNet {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// Serialized network: header with dims and activations, then one
/// `(shape, row-major weights, bias)` entry per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetRecord {
    pub header: NetHeader,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetHeader {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activations: Vec<Activation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    /// `[out_dim, in_dim]`
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new<P: Params + ?Sized>(params: &P, config: AdamConfig) -> Self {
        let zeros = Grads::zeros_like(params).0;
        AdamState {
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
            config,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<P: Params + ?Sized>(params: &mut P, grads: &Grads, state: &mut AdamState) -> Result<()> {
    let mut slices = params.param_slices_mut();
    check_len("adam gradient slices", slices.len(), grads.0.len())?;
    check_len("adam moment slices", slices.len(), state.first_moment.len())?;
    for ((p, g), m) in slices.iter().zip(&grads.0).zip(&state.first_moment) {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(WdanError::DimMismatch {
                context: "adam parameter slice",
                expected: p.len(),
                actual: g.len(),
            });
        }
    }
    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in slices
        .iter_mut()
        .zip(&grads.0)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len("mse target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(WdanError::NoData("mse of empty vectors".into()));
    }
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64)
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len("mae target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(WdanError::NoData("mae of empty vectors".into()));
    }
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Gradient of [`mse`] with respect to `pred`.
pub fn mse_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_len("mse target", pred.len(), target.len())?;
    let n = pred.len() as f64;
    Ok(pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect())
}

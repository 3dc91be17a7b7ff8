//! Channel-independent forecasting backbones.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WdanError};
use crate::nn::{Activation, DenseLayer, DenseNet, Grads, NetRecord, Params, Tape};

/// A model mapping a length-`T` window of one channel to a length-`H`
/// forecast. The same parameters serve every channel.
pub trait Forecaster: Params {
    fn input_len(&self) -> usize;
    fn horizon(&self) -> usize;
    fn forward(&self, window: &[f64]) -> Result<(Vec<f64>, Tape)>;
    fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<Grads>;
    fn is_frozen(&self) -> bool;
    fn set_frozen(&mut self, frozen: bool);

    fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
        self.forward(window).map(|(y, _)| y)
    }

    /// Forecasts every channel of an `N x T` batch.
    fn forecast(&self, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        batch.iter().map(|w| self.predict(w)).collect()
    }
}

fn check_window(expected: usize, window: &[f64]) -> Result<()> {
    if window.len() != expected {
        return Err(WdanError::DimMismatch {
            context: "backbone window",
            expected,
            actual: window.len(),
        });
    }
    Ok(())
}

/// `y = W x + b` with `W` of shape `H x T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForecaster {
    net: DenseNet,
    frozen: bool,
}

impl LinearForecaster {
    pub fn new<R: Rng + ?Sized>(input_len: usize, horizon: usize, rng: &mut R) -> Result<Self> {
        let layer = DenseLayer::xavier(input_len, horizon, Activation::Identity, rng);
        Self::from_layer(layer)
    }

    pub fn zeros(input_len: usize, horizon: usize) -> Self {
        Self::from_layer(DenseLayer::zeros(input_len, horizon, Activation::Identity))
            .expect("zero layer is well formed")
    }

    pub fn from_layer(layer: DenseLayer) -> Result<Self> {
        if layer.activation != Activation::Identity {
            return Err(WdanError::ContractViolation(
                "linear forecaster needs an identity activation".into(),
            ));
        }
        Ok(LinearForecaster {
            net: DenseNet::new(vec![layer])?,
            frozen: false,
        })
    }

    /// Row-major `H x T`.
    pub fn weights(&self) -> &[f64] {
        &self.net.layers()[0].weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.net.layers_mut()[0].weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.net.layers()[0].bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.net.layers_mut()[0].bias
    }
}

/// Small MLP backbone: `T -> hidden -> H`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseForecaster {
    net: DenseNet,
    frozen: bool,
}

impl DenseForecaster {
    pub fn new<R: Rng + ?Sized>(
        input_len: usize,
        horizon: usize,
        hidden: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(DenseForecaster {
            net: DenseNet::mlp(&[input_len, hidden, horizon], activation, Activation::Identity, rng)?,
            frozen: false,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }
}

macro_rules! net_forecaster {
    ($ty:ty) => {
        impl Params for $ty {
            fn param_slices(&self) -> Vec<&[f64]> {
                self.net.param_slices()
            }
            fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
                self.net.param_slices_mut()
            }
        }

        impl Forecaster for $ty {
            fn input_len(&self) -> usize {
                self.net.in_dim()
            }
            fn horizon(&self) -> usize {
                self.net.out_dim()
            }
            fn forward(&self, window: &[f64]) -> Result<(Vec<f64>, Tape)> {
                check_window(self.net.in_dim(), window)?;
                self.net.forward(window)
            }
            fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
                check_window(self.net.in_dim(), window)?;
                self.net.predict(window)
            }
            fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<Grads> {
                self.net.backward(tape, output_grad).map(|(g, _)| g)
            }
            fn is_frozen(&self) -> bool {
                self.frozen
            }
            fn set_frozen(&mut self, frozen: bool) {
                self.frozen = frozen;
            }
        }
    };
}

net_forecaster!(LinearForecaster);
net_forecaster!(DenseForecaster);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BackboneKind {
    Linear,
    Dense { hidden: usize },
}

impl Default for BackboneKind {
    fn default() -> Self {
        BackboneKind::Linear
    }
}

/// Any of the shipped backbones.
#[derive(Debug, Clone, PartialEq)]
pub enum Backbone {
    Linear(LinearForecaster),
    Dense(DenseForecaster),
}

impl Backbone {
    pub fn new<R: Rng + ?Sized>(
        kind: BackboneKind,
        input_len: usize,
        horizon: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match kind {
            BackboneKind::Linear => Backbone::Linear(LinearForecaster::new(input_len, horizon, rng)?),
            BackboneKind::Dense { hidden } => Backbone::Dense(DenseForecaster::new(
                input_len,
                horizon,
                hidden,
                Activation::Relu,
                rng,
            )?),
        })
    }

    pub fn kind(&self) -> BackboneKind {
        match self {
            Backbone::Linear(_) => BackboneKind::Linear,
            Backbone::Dense(d) => BackboneKind::Dense {
                hidden: d.net.layers()[0].out_dim,
            },
        }
    }

    fn inner(&self) -> &dyn Forecaster {
        match self {
            Backbone::Linear(m) => m,
            Backbone::Dense(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Forecaster {
        match self {
            Backbone::Linear(m) => m,
            Backbone::Dense(m) => m,
        }
    }

    fn net(&self) -> &DenseNet {
        match self {
            Backbone::Linear(m) => &m.net,
            Backbone::Dense(m) => &m.net,
        }
    }

    pub fn to_record(&self) -> BackboneRecord {
        BackboneRecord {
            kind: self.kind(),
            input_len: self.input_len(),
            horizon: self.horizon(),
            net: self.net().to_record(),
        }
    }

    pub fn from_record(r: &BackboneRecord) -> Result<Self> {
        let net = DenseNet::from_record(&r.net)?;
        if net.in_dim() != r.input_len || net.out_dim() != r.horizon {
            return Err(WdanError::Schema("backbone record dims disagree with its network".into()));
        }
        let b = match r.kind {
            BackboneKind::Linear => {
                if net.layers().len() != 1 {
                    return Err(WdanError::Schema("linear backbone must have one layer".into()));
                }
                Backbone::Linear(LinearForecaster::from_layer(net.layers()[0].clone())?)
            }
            BackboneKind::Dense { .. } => Backbone::Dense(DenseForecaster { net, frozen: false }),
        };
        if b.kind() != r.kind {
            return Err(WdanError::Schema("backbone kind tag does not match network".into()));
        }
        Ok(b)
    }
}

impl Params for Backbone {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.inner().param_slices()
    }
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.inner_mut().param_slices_mut()
    }
}

impl Forecaster for Backbone {
    fn input_len(&self) -> usize {
        self.inner().input_len()
    }
    fn horizon(&self) -> usize {
        self.inner().horizon()
    }
    fn forward(&self, window: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.inner().forward(window)
    }
    fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
        self.inner().predict(window)
    }
    fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<Grads> {
        self.inner().backward(tape, output_grad)
    }
    fn is_frozen(&self) -> bool {
        self.inner().is_frozen()
    }
    fn set_frozen(&mut self, frozen: bool) {
        self.inner_mut().set_frozen(frozen)
    }
}

/// Checkpoint of a backbone, tagged with its kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneRecord {
    pub kind: BackboneKind,
    pub input_len: usize,
    pub horizon: usize,
    pub net: NetRecord,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_linear_forecasts_zero() {
        let m = LinearForecaster::zeros(8, 3);
        assert_eq!(m.forecast(&[vec![1.0; 8], vec![-2.0; 8]]).unwrap(), vec![vec![0.0; 3]; 2]);
    }

    #[test]
    fn last_value_selector_is_persistence() {
        let (t, h) = (6, 4);
        let mut m = LinearForecaster::zeros(t, h);
        for row in m.weights_mut().chunks_exact_mut(t) {
            row[t - 1] = 1.0;
        }
        let x = [0.3, 1.0, -2.0, 4.0, 0.5, 7.25];
        assert_eq!(m.predict(&x).unwrap(), vec![7.25; h]);
    }

    #[test]
    fn wrong_window_length() {
        let m = LinearForecaster::zeros(8, 3);
        assert!(matches!(m.predict(&[0.0; 7]), Err(WdanError::DimMismatch { .. })));
    }

    #[test]
    fn record_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [BackboneKind::Linear, BackboneKind::Dense { hidden: 7 }] {
            let b = Backbone::new(kind, 12, 5, &mut rng).unwrap();
            let json = serde_json::to_string(&b.to_record()).unwrap();
            let back = Backbone::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
            assert_eq!(b, back);
            assert_eq!(back.kind(), kind);
        }
    }
}

//! Fully connected network with tanh hidden layers and a linear output,
//! stored as one flat parameter vector.
//!
//! Layout, per layer `l` (inputs `n_in`, outputs `n_out`): the `n_out x n_in`
//! weight matrix in row-major order, then the `n_out` biases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    params: Vec<f64>,
}

/// Per-layer activations recorded by a forward pass (input first).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least input and output")
    }
}

pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl MlpParams {
    pub fn from_parts(layer_sizes: Vec<usize>, hidden_activation: Activation, params: Vec<f64>) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes {layer_sizes:?} need an input and an output layer, all non-empty"
            )));
        }
        let expected = param_count(&layer_sizes);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "network parameters",
                expected,
                actual: params.len(),
            });
        }
        Ok(Self {
            layer_sizes,
            hidden_activation,
            params,
        })
    }

    pub fn zeros(layer_sizes: Vec<usize>) -> Result<Self> {
        let n = param_count(&layer_sizes);
        Self::from_parts(layer_sizes, Activation::Tanh, vec![0.0; n])
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(layer_sizes: Vec<usize>, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut offset = 0;
        for w in net.layer_sizes.clone().windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + n_in * n_out] {
                *p = rng.random_range(-bound..bound);
            }
            offset += n_in * n_out + n_out;
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.n_layers() {
            Activation::Identity
        } else {
            self.hidden_activation
        }
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(input.to_vec());
        let mut offset = 0;
        for layer in 0..self.n_layers() {
            let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let act = self.activation_of(layer);
            let prev = activations.last().expect("non-empty");
            let next: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    let z = row.iter().zip(prev).fold(biases[o], |acc, (w, x)| acc + w * x);
                    act.apply(z)
                })
                .collect();
            activations.push(next);
            offset += n_in * n_out + n_out;
        }
        Ok(ForwardTrace { activations })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(input)?.activations.pop().expect("output"))
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward_into(&self, trace: &ForwardTrace, output_grad: &[f64], grads: &mut [f64]) -> Result<()> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: self.output_dim(),
                actual: output_grad.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                context: "gradient buffer",
                expected: self.params.len(),
                actual: grads.len(),
            });
        }
        let offsets: Vec<usize> = self
            .layer_sizes
            .windows(2)
            .scan(0, |acc, w| {
                let start = *acc;
                *acc += w[0] * w[1] + w[1];
                Some(start)
            })
            .collect();
        let mut delta: Vec<f64> = output_grad.to_vec();
        for layer in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
            let act = self.activation_of(layer);
            let out = &trace.activations[layer + 1];
            for (d, a) in delta.iter_mut().zip(out) {
                *d *= act.derivative_from_output(*a);
            }
            let input = &trace.activations[layer];
            let offset = offsets[layer];
            for o in 0..n_out {
                let row = &mut grads[offset + o * n_in..offset + (o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += delta[o] * x;
                }
                grads[offset + n_in * n_out + o] += delta[o];
            }
            if layer > 0 {
                let weights = &self.params[offset..offset + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * delta[o];
                    }
                }
                delta = prev;
            }
        }
        Ok(())
    }
}

pub fn mlp_forward(params: &MlpParams, ctx: &[f64]) -> Result<Vec<f64>> {
    params.forward(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpParams::zeros(vec![3, 8, 8, 5]).unwrap();
        assert_eq!(net.forward(&[0.4, -1.0, 2.0]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut params = vec![0.0; param_count(&[4, 4])];
        for i in 0..4 {
            params[i * 4 + i] = 1.0;
        }
        let net = MlpParams::from_parts(vec![4, 4], Activation::Tanh, params).unwrap();
        let x = [0.5, -3.0, 7.0, 1e-3];
        assert_eq!(net.forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = MlpParams::init(vec![3, 64, 64, 56], 17).unwrap();
        let b = MlpParams::init(vec![3, 64, 64, 56], 17).unwrap();
        let x = [0.1, 0.2, 0.3];
        assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
        let c = MlpParams::init(vec![3, 64, 64, 56], 18).unwrap();
        assert_ne!(a.params(), c.params());
        let bound = (6.0f64 / 67.0).sqrt();
        assert!(a.params()[..192].iter().all(|p| p.abs() <= bound));
        assert!(a.params()[192..256].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn shape_errors() {
        assert!(MlpParams::zeros(vec![3]).is_err());
        assert!(MlpParams::zeros(vec![3, 0, 2]).is_err());
        assert!(MlpParams::from_parts(vec![2, 2], Activation::Tanh, vec![0.0; 5]).is_err());
        let net = MlpParams::zeros(vec![2, 3]).unwrap();
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn param_count_matches_layout() {
        assert_eq!(param_count(&[3, 64, 64, 56]), 3 * 64 + 64 + 64 * 64 + 64 + 64 * 56 + 56);
    }
}

//! Fully connected networks sized for the 6-unit-hidden-layer architectures
//! used throughout this project.

use crate::error::{NumkitError, Result};
use crate::rng::seeded_rng;
use crate::tape::{Tape, ValueId};
use crate::tensor::Tensor;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

/// Layer widths plus the activation applied after each affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(NumkitError::InvalidSpec {
                reason: format!("need at least input and output layer, got {layer_sizes:?}"),
            });
        }
        if layer_sizes.iter().any(|&w| w == 0) {
            return Err(NumkitError::InvalidSpec {
                reason: format!("layer widths must be positive, got {layer_sizes:?}"),
            });
        }
        if activations.len() != layer_sizes.len() - 1 {
            return Err(NumkitError::InvalidSpec {
                reason: format!(
                    "expected {} activations for {} layers, got {}",
                    layer_sizes.len() - 1,
                    layer_sizes.len(),
                    activations.len()
                ),
            });
        }
        Ok(MlpSpec {
            layer_sizes,
            activations,
        })
    }

    /// The common hidden-relu shape: `input -> 6 relu -> output`.
    pub fn relu_hidden(input: usize, hidden: usize, output: usize) -> Self {
        MlpSpec {
            layer_sizes: vec![input, hidden, output],
            activations: vec![Activation::Relu, Activation::Identity],
        }
    }

    /// Single affine layer with identity activation.
    pub fn linear(input: usize, output: usize) -> Self {
        MlpSpec {
            layer_sizes: vec![input, output],
            activations: vec![Activation::Identity],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }
}

/// Dense network with row-vector convention: `y = act(x . W + b)` per layer,
/// weights stored as `[fan_in, fan_out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    spec: MlpSpec,
    weights: Vec<Tensor>,
    biases: Vec<Tensor>,
}

impl Mlp {
    /// Initialize with uniform weights in `±sqrt(6 / (fan_in + fan_out))` and
    /// zero biases.
    pub fn init(spec: MlpSpec, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in spec.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            weights.push(Tensor::from_vec(vec![fan_in, fan_out], data).expect("sized"));
            biases.push(Tensor::zeros(vec![fan_out]));
        }
        Mlp {
            spec,
            weights,
            biases,
        }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Register all parameters on `tape` and return their ids, ordered
    /// `[w0, b0, w1, b1, ...]`.
    pub fn register(&self, tape: &mut Tape) -> MlpHandle {
        let mut param_ids = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            param_ids.push(tape.leaf(w.clone()));
            param_ids.push(tape.leaf(b.clone()));
        }
        MlpHandle {
            param_ids,
            activations: self.spec.activations.clone(),
        }
    }

    /// Convenience: register and run one forward pass.
    pub fn forward(&self, tape: &mut Tape, x: ValueId) -> Result<(ValueId, MlpHandle)> {
        let handle = self.register(tape);
        let out = handle.forward(tape, x)?;
        Ok((out, handle))
    }

    /// Forward pass without recording on a tape.
    pub fn forward_plain(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols() != self.spec.input_dim() {
            return Err(NumkitError::ShapeMismatch {
                op: "mlp forward",
                left: x.shape().to_vec(),
                right: vec![self.spec.input_dim()],
            });
        }
        let n = x.rows();
        let mut cur = x.data().to_vec();
        let mut cur_cols = x.cols();
        for (layer, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let out_cols = w.cols();
            let mut next = vec![0.0; n * out_cols];
            for i in 0..n {
                for p in 0..cur_cols {
                    let v = cur[i * cur_cols + p];
                    if v == 0.0 {
                        continue;
                    }
                    let wrow = &w.data()[p * out_cols..(p + 1) * out_cols];
                    let orow = &mut next[i * out_cols..(i + 1) * out_cols];
                    for (o, wv) in orow.iter_mut().zip(wrow) {
                        *o += v * wv;
                    }
                }
                let orow = &mut next[i * out_cols..(i + 1) * out_cols];
                for (o, bv) in orow.iter_mut().zip(b.data()) {
                    *o += bv;
                }
                for o in orow.iter_mut() {
                    *o = match self.spec.activations[layer] {
                        Activation::Relu => o.max(0.0),
                        Activation::Sigmoid => 1.0 / (1.0 + (-*o).exp()),
                        Activation::Identity => *o,
                    };
                }
            }
            cur = next;
            cur_cols = out_cols;
        }
        Tensor::from_vec(vec![n, cur_cols], cur)
    }

    /// Parameters in `[w0, b0, w1, b1, ...]` order.
    pub fn params(&self) -> Vec<&Tensor> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }
}

/// Tape-registered parameter ids for one [`Mlp`].
pub struct MlpHandle {
    param_ids: Vec<ValueId>,
    activations: Vec<Activation>,
}

impl MlpHandle {
    pub fn forward(&self, tape: &mut Tape, x: ValueId) -> Result<ValueId> {
        let mut cur = x;
        for (layer, act) in self.activations.iter().enumerate() {
            let w = self.param_ids[2 * layer];
            let b = self.param_ids[2 * layer + 1];
            let affine = tape.matmul(cur, w)?;
            let with_bias = tape.add(affine, b)?;
            cur = match act {
                Activation::Relu => tape.relu(with_bias)?,
                Activation::Sigmoid => tape.sigmoid(with_bias)?,
                Activation::Identity => with_bias,
            };
        }
        Ok(cur)
    }

    pub fn param_ids(&self) -> &[ValueId] {
        &self.param_ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![4], vec![]).is_err());
        assert!(MlpSpec::new(vec![4, 0], vec![Activation::Relu]).is_err());
        assert!(MlpSpec::new(vec![4, 2], vec![]).is_err());
        assert!(MlpSpec::new(vec![4, 2], vec![Activation::Identity]).is_ok());
    }

    #[test]
    fn taped_and_plain_forward_agree() {
        let mlp = Mlp::init(MlpSpec::relu_hidden(3, 6, 2), 11);
        let x = Tensor::from_rows(&[vec![0.2, -0.4, 1.0], vec![1.5, 0.0, -2.0]]).unwrap();
        let plain = mlp.forward_plain(&x).unwrap();
        let mut tape = Tape::new();
        let xid = tape.leaf(x);
        let (out, _) = mlp.forward(&mut tape, xid).unwrap();
        let taped = tape.value(out);
        for (a, b) in plain.data().iter().zip(taped.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = Mlp::init(MlpSpec::relu_hidden(5, 6, 1), 7);
        let b = Mlp::init(MlpSpec::relu_hidden(5, 6, 1), 7);
        let c = Mlp::init(MlpSpec::relu_hidden(5, 6, 1), 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_bounds_follow_fan_sum() {
        let mlp = Mlp::init(MlpSpec::linear(10, 6), 3);
        let bound = (6.0_f64 / 16.0).sqrt();
        assert!(mlp.params()[0].data().iter().all(|w| w.abs() <= bound));
        assert!(mlp.params()[1].data().iter().all(|&b| b == 0.0));
    }
}

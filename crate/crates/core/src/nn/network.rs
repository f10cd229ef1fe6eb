use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, LayerGrads, Matrix, NnError, RngStream};

/// A feed-forward stack of dense layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Activations recorded by [`Mlp::forward_trace`]; `activations[0]` is the
/// network input and `activations[i + 1]` the output of layer `i`.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("trace holds at least the input")
    }

    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }
}

/// Per-layer parameter gradients, in layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

impl MlpGrads {
    /// Flattens in the same order as [`Mlp::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for g in &self.layers {
            out.extend_from_slice(g.weights.as_slice());
            out.extend_from_slice(&g.bias);
        }
    }
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::EmptyNetwork);
        }
        for pair in layers.windows(2) {
            if pair[1].input_dim() != pair[0].output_dim() {
                return Err(NnError::DimensionMismatch {
                    context: "adjacent layer widths",
                    expected: pair[0].output_dim(),
                    actual: pair[1].input_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialized stack with widths `sizes[0] → … → sizes[last]`;
    /// hidden layers use `hidden`, the last layer uses `head`.
    pub fn glorot(
        sizes: &[usize],
        hidden: Activation,
        head: Activation,
        rng: &mut RngStream,
    ) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::EmptyNetwork);
        }
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { head } else { hidden };
                DenseLayer::glorot(sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut x = input.to_vec();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    pub fn forward_batch(&self, input: &Matrix) -> Result<Matrix, NnError> {
        let mut layers = self.layers.iter();
        let mut x = layers
            .next()
            .expect("non-empty network")
            .forward_batch(input)?;
        for layer in layers {
            x = layer.forward_batch(&x)?;
        }
        Ok(x)
    }

    /// Forward pass that keeps every intermediate activation for [`Mlp::backward`].
    pub fn forward_trace(&self, input: &Matrix) -> Result<ForwardTrace, NnError> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        for layer in &self.layers {
            let next = layer.forward_batch(activations.last().expect("non-empty"))?;
            activations.push(next);
        }
        Ok(ForwardTrace { activations })
    }

    /// Reverse-mode gradients of a scalar loss whose gradient with respect to
    /// the network output is `upstream`. Returns parameter gradients and the
    /// gradient with respect to the network input.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        upstream: &Matrix,
    ) -> Result<(MlpGrads, Matrix), NnError> {
        self.check_trace(trace)?;
        if upstream.shape() != trace.output().shape() {
            return Err(NnError::TraceMismatch(format!(
                "upstream gradient is {:?}, network output is {:?}",
                upstream.shape(),
                trace.output().shape()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut grad = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (g, g_in) =
                layer.backward(&trace.activations[i], &trace.activations[i + 1], &grad);
            grads.push(g);
            grad = g_in;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, grad))
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<(), NnError> {
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(NnError::TraceMismatch(format!(
                "trace has {} activations, network needs {}",
                trace.activations.len(),
                self.layers.len() + 1
            )));
        }
        let batch = trace.activations[0].rows();
        for (i, layer) in self.layers.iter().enumerate() {
            let input = &trace.activations[i];
            let output = &trace.activations[i + 1];
            if input.shape() != (batch, layer.input_dim())
                || output.shape() != (batch, layer.output_dim())
            {
                return Err(NnError::TraceMismatch(format!(
                    "layer {i} expects {}→{}, trace recorded {:?}→{:?}",
                    layer.input_dim(),
                    layer.output_dim(),
                    input.shape(),
                    output.shape()
                )));
            }
        }
        Ok(())
    }

    /// All parameters flattened layer by layer (weights row-major, then bias).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.params_into(&mut out);
        out
    }

    pub fn params_into(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend_from_slice(layer.weights().as_slice());
            out.extend_from_slice(layer.bias());
        }
    }

    /// Inverse of [`Mlp::params`].
    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::DimensionMismatch {
                context: "parameter vector",
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let w = layer.weights_mut().as_mut_slice();
            w.copy_from_slice(&params[offset..offset + w.len()]);
            offset += w.len();
            let b = layer.bias_mut();
            b.copy_from_slice(&params[offset..offset + b.len()]);
            offset += b.len();
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::{Matrix, NnError, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    #[serde(rename = "ReLU")]
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Fully connected layer computing `activation(W·x + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vec<f64>,
    activation: Activation,
}

/// Gradients of a scalar loss with respect to one layer's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    /// `weights` is `out × in`.
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self, NnError> {
        if bias.len() != weights.rows() {
            return Err(NnError::DimensionMismatch {
                context: "layer bias",
                expected: weights.rows(),
                actual: bias.len(),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(output_dim, input_dim),
            bias: vec![0.0; output_dim],
            activation,
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        rng: &mut RngStream,
    ) -> Self {
        let limit = (6.0 / (input_dim + output_dim) as f64).sqrt();
        let mut weights = Matrix::zeros(output_dim, input_dim);
        for w in weights.as_mut_slice() {
            *w = limit * (2.0 * rng.uniform() - 1.0);
        }
        Self {
            weights,
            bias: vec![0.0; output_dim],
            activation,
        }
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                context: "dense_forward input",
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        Ok(self
            .weights
            .iter_rows()
            .zip(&self.bias)
            .map(|(w, b)| self.activation.apply(dot(w, input) + b))
            .collect())
    }

    /// Row-wise forward over a `batch × in` matrix.
    pub fn forward_batch(&self, input: &Matrix) -> Result<Matrix, NnError> {
        if input.cols() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                context: "dense_forward input",
                expected: self.input_dim(),
                actual: input.cols(),
            });
        }
        let mut out = Matrix::zeros(input.rows(), self.output_dim());
        for r in 0..input.rows() {
            let x = input.row(r);
            let y = out.row_mut(r);
            for (o, (w, b)) in self.weights.iter_rows().zip(&self.bias).enumerate() {
                y[o] = self.activation.apply(dot(w, x) + b);
            }
        }
        Ok(out)
    }

    /// Given the layer `input` and its `output` from a forward pass and the
    /// loss gradient at the output, returns parameter and input gradients.
    pub(crate) fn backward(
        &self,
        input: &Matrix,
        output: &Matrix,
        upstream: &Matrix,
    ) -> (LayerGrads, Matrix) {
        let batch = input.rows();
        let mut grad_w = Matrix::zeros(self.output_dim(), self.input_dim());
        let mut grad_b = vec![0.0; self.output_dim()];
        let mut grad_in = Matrix::zeros(batch, self.input_dim());
        let mut delta = vec![0.0; self.output_dim()];
        for r in 0..batch {
            let y = output.row(r);
            let up = upstream.row(r);
            for o in 0..self.output_dim() {
                delta[o] = up[o] * self.activation.derivative_from_output(y[o]);
            }
            let x = input.row(r);
            let gx = grad_in.row_mut(r);
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad_b[o] += d;
                axpy(d, x, grad_w.row_mut(o));
                axpy(d, self.weights.row(o), gx);
            }
        }
        (
            LayerGrads {
                weights: grad_w,
                bias: grad_b,
            },
            grad_in,
        )
    }
}

//! Minimal dense-network substrate: layers, activations, MSE, SGD and a
//! finite-difference gradient oracle. Gradients are derived by hand per
//! architecture; there is no autodiff graph.

mod gradcheck;
mod mlp;
mod params;
mod rng;

pub use gradcheck::{finite_difference_grad, max_relative_error};
pub use mlp::{Mlp, MlpTrace};
pub use params::{Layout, LayoutBuilder, LayoutEntry, ParamVector, Parameterized};
pub use rng::SimRng;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("RealMatrix::from_vec", rows * cols, data.len())?;
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = self * x + out`
    #[inline]
    pub(crate) fn gemv_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// `out += selfᵀ * g`
    #[inline]
    pub(crate) fn gemv_t_acc(&self, g: &[f64], out: &mut [f64]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * gr;
            }
        }
    }
}

/// Accumulates the outer product `g xᵀ` into a row-major buffer.
#[inline]
pub(crate) fn outer_acc(g: &[f64], x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), g.len() * x.len());
    let cols = x.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == 0.0 {
            continue;
        }
        for (o, v) in out[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *o += gr * v;
        }
    }
}

/// Samples a weight matrix uniformly in `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut SimRng) -> RealMatrix {
    let r = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-r..=r)).collect();
    RealMatrix { rows, cols, data }
}

/// Gradients of a dense layer for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub grad_x: Vec<f64>,
    pub grad_weights: RealMatrix,
    pub grad_bias: Vec<f64>,
}

/// `y = activation(W x + b)` with `W` shaped `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: RealMatrix,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: RealMatrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        check_len("DenseLayer bias", weights.rows(), bias.len())?;
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: RealMatrix::zeros(output_dim, input_dim),
            bias: vec![0.0; output_dim],
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(input_dim: usize, output_dim: usize, activation: Activation, rng: &mut SimRng) -> Self {
        DenseLayer {
            weights: glorot_uniform(output_dim, input_dim, rng),
            bias: vec![0.0; output_dim],
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &RealMatrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("dense_forward input", self.input_dim(), x.len())?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.clone();
        self.weights.gemv_acc(x, &mut y);
        for v in &mut y {
            *v = self.activation.apply(*v);
        }
        y
    }

    /// Exact gradients for one input; the forward pass is recomputed.
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<DenseGrads> {
        check_len("dense_backward input", self.input_dim(), x.len())?;
        check_len("dense_backward grad_out", self.output_dim(), grad_out.len())?;
        let y = self.forward_unchecked(x);
        let mut grad_weights = RealMatrix::zeros(self.output_dim(), self.input_dim());
        let mut grad_bias = vec![0.0; self.output_dim()];
        let mut grad_x = vec![0.0; self.input_dim()];
        self.backward_acc(
            x,
            &y,
            grad_out,
            grad_weights.as_mut_slice(),
            &mut grad_bias,
            Some(&mut grad_x),
        );
        Ok(DenseGrads {
            grad_x,
            grad_weights,
            grad_bias,
        })
    }

    /// Accumulating backward pass given cached input `x` and output `y`.
    /// `grad_w` and `grad_b` are added to, `grad_x` is added to when present.
    pub(crate) fn backward_acc(
        &self,
        x: &[f64],
        y: &[f64],
        grad_out: &[f64],
        grad_w: &mut [f64],
        grad_b: &mut [f64],
        grad_x: Option<&mut [f64]>,
    ) {
        let dz: Vec<f64> = grad_out
            .iter()
            .zip(y)
            .map(|(g, &yv)| g * self.activation.derivative_from_output(yv))
            .collect();
        outer_acc(&dz, x, grad_w);
        for (b, d) in grad_b.iter_mut().zip(&dz) {
            *b += d;
        }
        if let Some(gx) = grad_x {
            self.weights.gemv_t_acc(&dz, gx);
        }
    }

    pub(crate) fn push_layout(&self, builder: &mut LayoutBuilder, prefix: &str) {
        builder.add(format!("{prefix}.weights"), &[self.output_dim(), self.input_dim()]);
        builder.add(format!("{prefix}.bias"), &[self.output_dim()]);
    }

    pub(crate) fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.weights.as_slice());
        out.extend_from_slice(&self.bias);
    }

    /// Loads weights then bias from the front of `values`; returns the rest.
    pub(crate) fn read_params<'a>(&mut self, values: &'a [f64]) -> &'a [f64] {
        let nw = self.weights.as_slice().len();
        let nb = self.bias.len();
        self.weights.as_mut_slice().copy_from_slice(&values[..nw]);
        self.bias.copy_from_slice(&values[nw..nw + nb]);
        &values[nw + nb..]
    }
}

/// Splits a flat gradient buffer into one layer's (weights, bias) slices and the remainder.
pub(crate) fn split_layer_grads<'a>(
    buf: &'a mut [f64],
    layer: &DenseLayer,
) -> (&'a mut [f64], &'a mut [f64], &'a mut [f64]) {
    let nw = layer.output_dim() * layer.input_dim();
    let (w, rest) = buf.split_at_mut(nw);
    let (b, rest) = rest.split_at_mut(layer.output_dim());
    (w, b, rest)
}

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len("mse_loss", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::Empty("mse_loss on empty vectors"));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// `params - lr * grads`.
pub fn sgd_step(params: &ParamVector, grads: &ParamVector, lr: f64) -> Result<ParamVector> {
    let mut out = params.clone();
    out.axpy(-lr, grads)?;
    Ok(out)
}

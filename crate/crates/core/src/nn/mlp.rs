use std::sync::Arc;

use super::{split_layer_grads, Activation, DenseLayer, Layout, ParamVector, Parameterized, SimRng};
use crate::error::{check_len, Result};

/// A plain stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
    layout: Arc<Layout>,
}

/// Per-layer activations cached by [`Mlp::forward_trace`]; entry 0 is the input.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    activations: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds at least the input")
    }
}

impl Mlp {
    /// `dims = [input, hidden..., output]`; hidden layers use `hidden`, the last layer `output`.
    pub fn init(dims: &[usize], hidden: Activation, output: Activation, rng: &mut SimRng) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least input and output dims");
        let n = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 1 == n { output } else { hidden };
                DenseLayer::init(w[0], w[1], act, rng)
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Self {
        let mut b = Layout::builder();
        for (i, l) in layers.iter().enumerate() {
            l.push_layout(&mut b, &format!("layer{i}"));
        }
        Mlp {
            layers,
            layout: Arc::new(b.build()),
        }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("mlp input", self.input_dim(), x.len())?;
        let mut a = x.to_vec();
        for l in &self.layers {
            a = l.forward_unchecked(&a);
        }
        Ok(a)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<MlpTrace> {
        check_len("mlp input", self.input_dim(), x.len())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for l in &self.layers {
            let next = l.forward_unchecked(activations.last().unwrap());
            activations.push(next);
        }
        Ok(MlpTrace { activations })
    }

    /// Adds parameter gradients for one sample into `grads` (canonical layout)
    /// and returns the gradient with respect to the input.
    pub fn backward_acc(&self, trace: &MlpTrace, grad_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grads.len(), self.layout.len());
        // Slice offsets per layer, front to back.
        let mut slices = Vec::with_capacity(self.layers.len());
        let mut rest = grads;
        for l in &self.layers {
            let (w, b, r) = split_layer_grads(rest, l);
            slices.push((w, b));
            rest = r;
        }
        let mut upstream = grad_out.to_vec();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let (w, b) = &mut slices[i];
            let mut gx = vec![0.0; l.input_dim()];
            l.backward_acc(&trace.activations[i], &trace.activations[i + 1], &upstream, w, b, Some(&mut gx));
            upstream = gx;
        }
        upstream
    }
}

impl Parameterized for Mlp {
    fn layout(&self) -> Arc<Layout> {
        self.layout.clone()
    }

    fn params(&self) -> ParamVector {
        let mut v = Vec::with_capacity(self.layout.len());
        for l in &self.layers {
            l.write_params(&mut v);
        }
        ParamVector::new(self.layout.clone(), v).expect("layout matches layers")
    }

    fn set_params(&mut self, params: &ParamVector) -> Result<()> {
        if !params.same_layout(&ParamVector::zeros(self.layout.clone())) {
            return Err(crate::Error::LayoutMismatch(format!(
                "mlp expects [{}], got [{}]",
                self.layout,
                params.layout()
            )));
        }
        let mut rest = params.values();
        for l in &mut self.layers {
            rest = l.read_params(rest);
        }
        Ok(())
    }
}

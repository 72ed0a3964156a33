use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Layout, Mlp, ParamVector, Parameterized, SimRng};

/// Shape of the behavior-cloning policy: tanh hidden layers, identity output.
/// An empty `hidden` list gives a linear map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl PolicyArchitecture {
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden.len() + 2);
        d.push(self.input_dim);
        d.extend(&self.hidden);
        d.push(self.output_dim);
        d
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims().contains(&0) {
            return Err(Error::invalid("architecture", format!("zero-width layer in {:?}", self.dims())));
        }
        Ok(())
    }
}

/// The shared robot policy network `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    arch: PolicyArchitecture,
    mlp: Mlp,
}

impl PolicyModel {
    pub fn init(arch: PolicyArchitecture, rng: &mut SimRng) -> Result<Self> {
        arch.validate()?;
        let mlp = Mlp::init(&arch.dims(), Activation::Tanh, Activation::Identity, rng);
        Ok(PolicyModel { arch, mlp })
    }

    pub fn from_params(arch: PolicyArchitecture, params: &ParamVector) -> Result<Self> {
        let mut m = Self::init(arch, &mut SimRng::from_seed(0))?;
        m.set_params(params)?;
        Ok(m)
    }

    pub fn architecture(&self) -> &PolicyArchitecture {
        &self.arch
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.mlp.forward(state)
    }

    /// Returns a copy with `params` loaded.
    pub fn with_params(&self, params: &ParamVector) -> Result<Self> {
        let mut m = self.clone();
        m.set_params(params)?;
        Ok(m)
    }
}

impl Parameterized for PolicyModel {
    fn layout(&self) -> Arc<Layout> {
        self.mlp.layout()
    }

    fn params(&self) -> ParamVector {
        self.mlp.params()
    }

    fn set_params(&mut self, params: &ParamVector) -> Result<()> {
        self.mlp.set_params(params)
    }
}

/// One demonstrated (state, action) pair from a feedback session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub session: usize,
}

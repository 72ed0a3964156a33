//! Deterministic simulator of a federated learning-from-demonstration
//! network. Each simulated teacher is described by autoencoder-based user
//! profiles, which weight demonstration sessions during local training and
//! weight teachers' updates during global aggregation.

pub mod error;
pub mod federated;
pub mod harness;
pub mod lstm;
pub mod nn;
pub mod profile;
pub mod world;

pub use error::{Error, Result};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Parameterized, SimRng};

use super::aggregate::{apply_global_update, update_global_profile, AggregationStrategy, Upload, UserShare};
use super::node::{LocalSettings, NodeState};
use super::policy::PolicyModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub global_learning_rate: f64,
    /// Fraction of nodes sampled each round; at least one always participates.
    pub participation: f64,
    pub local: LocalSettings,
    pub profile_refresh_epochs: usize,
    pub profile_learning_rate: f64,
    pub profile_global_learning_rate: f64,
    /// Whether the global profile is moved toward the participants' profiles this round.
    pub update_global_profile: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeLoss {
    pub node: usize,
    pub teacher: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    /// Positions in the node list, ascending.
    pub participants: Vec<usize>,
    pub node_losses: Vec<NodeLoss>,
    pub shares: Option<Vec<UserShare>>,
    pub gamma_norm: Option<f64>,
    pub skipped: bool,
}

impl RoundReport {
    pub fn mean_local_loss(&self) -> Option<f64> {
        if self.node_losses.is_empty() {
            None
        } else {
            Some(self.node_losses.iter().map(|l| l.loss).sum::<f64>() / self.node_losses.len() as f64)
        }
    }
}

/// Draws `max(1, round(fraction * n))` distinct positions, sorted.
pub fn select_participants(n: usize, fraction: f64, rng: &mut SimRng) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("participation", format!("must be in (0, 1], got {fraction}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut picked = sample(rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// One synchronous round: participants refresh their profiles, train locally
/// from `global` and upload; the aggregator combines the uploads and applies
/// the global step. `rng` should be specific to this round.
pub fn run_round(
    global: &PolicyModel,
    nodes: &mut [NodeState],
    strategy: &mut AggregationStrategy,
    config: &RoundConfig,
    round: usize,
    rng: &SimRng,
) -> Result<(PolicyModel, RoundReport)> {
    let selected = select_participants(nodes.len(), config.participation, &mut rng.fork("participation"))?;
    if selected.is_empty() {
        let report = RoundReport {
            round,
            participants: selected,
            node_losses: Vec::new(),
            shares: None,
            gamma_norm: None,
            skipped: true,
        };
        return Ok((global.clone(), report));
    }

    let mut chosen: Vec<(usize, &mut NodeState)> = nodes
        .iter_mut()
        .enumerate()
        .filter(|(i, _)| selected.binary_search(i).is_ok())
        .collect();
    let results: Vec<(Upload, NodeLoss)> = chosen
        .par_iter_mut()
        .map(|(i, node)| {
            let mut node_rng = rng.fork_indexed("node", *i as u64);
            node.refresh_profile(config.profile_refresh_epochs, config.profile_learning_rate, &mut node_rng)?;
            let out = node.local_train(global, &config.local)?;
            let upload = node.upload(global)?;
            let loss = NodeLoss {
                node: node.node(),
                teacher: node.teacher(),
                loss: out.final_loss,
            };
            Ok((upload, loss))
        })
        .collect::<Result<_>>()?;
    let (uploads, node_losses): (Vec<Upload>, Vec<NodeLoss>) = results.into_iter().unzip();

    if config.update_global_profile {
        if let AggregationStrategy::UserWeighted { global_profile, .. } = strategy {
            let profiles: Vec<_> = uploads.iter().map(|u| u.profile.clone()).collect();
            *global_profile = update_global_profile(global_profile, &profiles, config.profile_global_learning_rate)?;
        }
    }

    let aggregated = strategy.aggregate(&uploads)?;
    let next = apply_global_update(&global.params(), &aggregated.gamma, config.global_learning_rate)?;
    if !next.is_finite() {
        return Err(Error::Divergence {
            epoch: round,
            loss: f64::NAN,
        });
    }
    let report = RoundReport {
        round,
        participants: selected,
        node_losses,
        gamma_norm: Some(aggregated.gamma.norm()),
        shares: aggregated.shares,
        skipped: false,
    };
    Ok((global.with_params(&next)?, report))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamVector;
use crate::profile::{profile_distance, UserProfile};

use super::local::LocalUpdate;

/// Everything a node sends to the aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct Upload {
    pub update: LocalUpdate,
    pub profile: UserProfile,
}

/// Normalized aggregation weight of one teacher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserShare {
    pub node: usize,
    pub teacher: usize,
    pub distance: f64,
    pub epsilon: f64,
    pub share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Fedavg,
    UserWeighted,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Fedavg => "fedavg",
            StrategyKind::UserWeighted => "user_weighted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fedavg" => Some(StrategyKind::Fedavg),
            "user_weighted" => Some(StrategyKind::UserWeighted),
            _ => None,
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregationStrategy {
    FedAvg,
    UserWeighted { kappa: f64, global_profile: UserProfile },
}

/// Output of one aggregation step.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub gamma: ParamVector,
    /// Per-teacher shares, present for user weighting only.
    pub shares: Option<Vec<UserShare>>,
}

impl AggregationStrategy {
    pub fn user_weighted(kappa: f64, global_profile: UserProfile) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
        }
        Ok(AggregationStrategy::UserWeighted { kappa, global_profile })
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            AggregationStrategy::FedAvg => StrategyKind::Fedavg,
            AggregationStrategy::UserWeighted { .. } => StrategyKind::UserWeighted,
        }
    }

    pub fn global_profile(&self) -> Option<&UserProfile> {
        match self {
            AggregationStrategy::FedAvg => None,
            AggregationStrategy::UserWeighted { global_profile, .. } => Some(global_profile),
        }
    }

    pub fn aggregate(&self, uploads: &[Upload]) -> Result<Aggregated> {
        let updates: Vec<LocalUpdate> = uploads.iter().map(|u| u.update.clone()).collect();
        match self {
            AggregationStrategy::FedAvg => Ok(Aggregated {
                gamma: aggregate_fedavg(&updates)?,
                shares: None,
            }),
            AggregationStrategy::UserWeighted { kappa, global_profile } => {
                let profiles: Vec<UserProfile> = uploads.iter().map(|u| u.profile.clone()).collect();
                let (gamma, shares) = aggregate_user_weighted(&updates, &profiles, global_profile, *kappa)?;
                Ok(Aggregated {
                    gamma,
                    shares: Some(shares),
                })
            }
        }
    }
}

fn sorted_order(updates: &[LocalUpdate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..updates.len()).collect();
    order.sort_by_key(|&i| (updates[i].node, updates[i].teacher));
    order
}

/// Unweighted mean of the deltas.
pub fn aggregate_fedavg(updates: &[LocalUpdate]) -> Result<ParamVector> {
    let first = updates.first().ok_or(Error::Empty("local updates"))?;
    let mut gamma = ParamVector::zeros(first.delta.layout().clone());
    for i in sorted_order(updates) {
        gamma.axpy(1.0, &updates[i].delta)?;
    }
    gamma.scale(1.0 / updates.len() as f64);
    Ok(gamma)
}

/// Deltas weighted by `1 / (kappa + |Qg - Q|)`, normalized to sum to one.
///
/// `kappa = 0` is accepted for analysis but fails if any profile coincides
/// with the global one.
pub fn aggregate_user_weighted(
    updates: &[LocalUpdate],
    profiles: &[UserProfile],
    global: &UserProfile,
    kappa: f64,
) -> Result<(ParamVector, Vec<UserShare>)> {
    let distances = profiles
        .iter()
        .map(|p| profile_distance(global, p))
        .collect::<Result<Vec<_>>>()?;
    aggregate_by_distance(updates, &distances, kappa)
}

/// The weighting rule applied to precomputed profile distances.
pub fn aggregate_by_distance(
    updates: &[LocalUpdate],
    distances: &[f64],
    kappa: f64,
) -> Result<(ParamVector, Vec<UserShare>)> {
    let first = updates.first().ok_or(Error::Empty("local updates"))?;
    crate::error::check_len("profiles per update", updates.len(), distances.len())?;
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa", format!("must be non-negative, got {kappa}")));
    }
    let order = sorted_order(updates);
    let eps: Vec<f64> = distances.iter().map(|d| 1.0 / (kappa + d)).collect();
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("user weight (zero distance with kappa = 0)"));
    }
    let total: f64 = order.iter().map(|&i| eps[i]).sum();
    let mut gamma = ParamVector::zeros(first.delta.layout().clone());
    let mut shares = Vec::with_capacity(updates.len());
    for &i in &order {
        let share = eps[i] / total;
        gamma.axpy(share, &updates[i].delta)?;
        shares.push(UserShare {
            node: updates[i].node,
            teacher: updates[i].teacher,
            distance: distances[i],
            epsilon: eps[i],
            share,
        });
    }
    Ok((gamma, shares))
}

/// `W + lr * gamma`.
pub fn apply_global_update(global: &ParamVector, gamma: &ParamVector, learning_rate: f64) -> Result<ParamVector> {
    let mut next = global.clone();
    next.axpy(learning_rate, gamma)?;
    Ok(next)
}

/// Federated averaging step on profile parameters.
pub fn update_global_profile(global: &UserProfile, profiles: &[UserProfile], learning_rate: f64) -> Result<UserProfile> {
    if profiles.is_empty() {
        return Err(Error::Empty("profiles"));
    }
    let mut step = ParamVector::zeros(global.params().layout().clone());
    for p in profiles {
        global.ensure_comparable(p)?;
        step.axpy(1.0, &p.params().sub(global.params())?)?;
    }
    let mut next = global.params().clone();
    next.axpy(learning_rate / profiles.len() as f64, &step)?;
    Ok(UserProfile::from_params(next))
}

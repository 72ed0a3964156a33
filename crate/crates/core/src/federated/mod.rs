//! Federated loop over (node, teacher) pairs.
//!
//! Nodes train a copy of the global policy on their own demonstrations,
//! weighting each session by how typical its profile encoding is, and upload
//! a parameter delta together with their profile. The aggregator sees only
//! those [`Upload`]s and combines them either by plain averaging or by
//! inverse profile distance to the global profile.

mod aggregate;
mod local;
mod node;
mod policy;
mod round;

pub use aggregate::{
    aggregate_by_distance, aggregate_fedavg, aggregate_user_weighted, apply_global_update, update_global_profile,
    Aggregated, AggregationStrategy, StrategyKind, Upload, UserShare,
};
pub use local::{
    compute_update, local_train, session_weights, weighted_local_loss, LocalTrainOutcome, LocalUpdate, SessionBatch,
};
pub use node::{LocalSettings, NodeState, ProfileSettings, RepresentationSettings, SharedInit};
pub use policy::{FeedbackSample, PolicyArchitecture, PolicyModel};
pub use round::{run_round, select_participants, NodeLoss, RoundConfig, RoundReport};

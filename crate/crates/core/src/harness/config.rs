//! Experiment configuration: TOML schema, defaults, validation and hashing.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::federated::StrategyKind;
use crate::world::{default_archetypes, SensorCatalog, SessionSpec, UserArchetype};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub teachers: usize,
    /// Sessions each teacher records before federated training starts.
    pub initial_sessions: usize,
    /// New sessions each teacher records per round.
    pub sessions_per_round: usize,
    /// Inclusive `[min, max]` session length in time steps.
    pub session_length: [usize; 2],
    pub samples_per_session: usize,
    pub coupling_strength: f64,
    /// Fresh states drawn for every test-loss evaluation.
    pub eval_samples: usize,
    pub catalog: SensorCatalog,
    pub archetypes: Vec<UserArchetype>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nodes: 10,
            teachers: 10,
            initial_sessions: 6,
            sessions_per_round: 1,
            session_length: [10, 30],
            samples_per_session: 10,
            coupling_strength: 4.0,
            eval_samples: 500,
            catalog: SensorCatalog::default(),
            archetypes: default_archetypes(),
        }
    }
}

impl ScenarioConfig {
    pub fn session_spec(&self) -> SessionSpec {
        SessionSpec {
            min_length: self.session_length[0],
            max_length: self.session_length[1],
            samples_per_session: self.samples_per_session,
            coupling_strength: self.coupling_strength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub policy_hidden: Vec<usize>,
    pub ground_truth_hidden: Vec<usize>,
    /// Hidden size of each sensor's sequence autoencoder.
    pub representation_dim: usize,
    pub profile_hidden: usize,
    pub profile_code: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            policy_hidden: vec![8],
            ground_truth_hidden: vec![8],
            representation_dim: 4,
            profile_hidden: 4,
            profile_code: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub local_learning_rate: f64,
    pub global_learning_rate: f64,
    pub local_epochs: usize,
    pub rounds: usize,
    pub participation: f64,
    pub kappa: f64,
    pub session_kappa: f64,
    pub session_weighting: bool,
    pub lstm_epochs: usize,
    pub lstm_learning_rate: f64,
    /// Gradient norm cap for sequence autoencoder training; 0 disables it.
    pub lstm_clip_norm: f64,
    pub profile_pretrain_epochs: usize,
    pub profile_epochs: usize,
    pub profile_learning_rate: f64,
    pub profile_global_learning_rate: f64,
    /// The global profile is updated on rounds divisible by this value.
    pub profile_refresh_every: usize,
    /// Checkpoint every this many rounds; 0 writes only the final checkpoint.
    pub checkpoint_every: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            local_learning_rate: 0.1,
            global_learning_rate: 1.0,
            local_epochs: 5,
            rounds: 30,
            participation: 1.0,
            kappa: 1e-6,
            session_kappa: 1e-6,
            session_weighting: true,
            lstm_epochs: 10,
            lstm_learning_rate: 0.05,
            lstm_clip_norm: 5.0,
            profile_pretrain_epochs: 30,
            profile_epochs: 2,
            profile_learning_rate: 0.05,
            profile_global_learning_rate: 1.0,
            profile_refresh_every: 1,
            checkpoint_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub strategies: Vec<StrategyKind>,
    pub output_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub model: ModelConfig,
    pub training: TrainingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: vec![1],
            strategies: vec![StrategyKind::Fedavg, StrategyKind::UserWeighted],
            output_dir: PathBuf::from("results"),
            scenario: ScenarioConfig::default(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
        }
    }
}

fn field_err(field: &str, reason: impl Into<String>) -> Error {
    Error::ConfigValidation {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be non-negative, got {v}")))
    }
}

fn at_least_one(field: &str, v: usize) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(field_err(field, "must be at least 1"))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(field_err("seeds", "at least one seed is required"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(field_err("seeds", "duplicate seed"));
        }
        if self.strategies.is_empty() {
            return Err(field_err("strategies", "at least one strategy is required"));
        }
        let mut strategies = self.strategies.clone();
        strategies.sort();
        strategies.dedup();
        if strategies.len() != self.strategies.len() {
            return Err(field_err("strategies", "duplicate strategy"));
        }

        let s = &self.scenario;
        at_least_one("scenario.nodes", s.nodes)?;
        at_least_one("scenario.teachers", s.teachers)?;
        at_least_one("scenario.initial_sessions", s.initial_sessions)?;
        at_least_one("scenario.eval_samples", s.eval_samples)?;
        s.session_spec()
            .validate()
            .map_err(|e| field_err("scenario.session_length", e.to_string()))?;
        non_negative("scenario.coupling_strength", s.coupling_strength)?;
        s.catalog.validate().map_err(|e| field_err("scenario.catalog", e.to_string()))?;
        if s.archetypes.is_empty() {
            return Err(field_err("scenario.archetypes", "at least one archetype is required"));
        }
        for a in &s.archetypes {
            a.validate(s.catalog.human_sensors.len(), s.catalog.action_dim)
                .map_err(|e| field_err("scenario.archetypes", e.to_string()))?;
        }
        if s.archetypes.iter().map(|a| a.weight).sum::<f64>() <= 0.0 {
            return Err(field_err("scenario.archetypes", "weights sum to zero"));
        }

        let m = &self.model;
        if m.policy_hidden.contains(&0) {
            return Err(field_err("model.policy_hidden", "layer widths must be at least 1"));
        }
        if m.ground_truth_hidden.contains(&0) {
            return Err(field_err("model.ground_truth_hidden", "layer widths must be at least 1"));
        }
        at_least_one("model.representation_dim", m.representation_dim)?;
        at_least_one("model.profile_hidden", m.profile_hidden)?;
        at_least_one("model.profile_code", m.profile_code)?;

        let t = &self.training;
        non_negative("training.local_learning_rate", t.local_learning_rate)?;
        non_negative("training.global_learning_rate", t.global_learning_rate)?;
        if !(t.participation > 0.0 && t.participation <= 1.0) {
            return Err(field_err(
                "training.participation",
                format!("must be in (0, 1] so that a round has participants, got {}", t.participation),
            ));
        }
        positive("training.kappa", t.kappa)?;
        positive("training.session_kappa", t.session_kappa)?;
        non_negative("training.lstm_learning_rate", t.lstm_learning_rate)?;
        non_negative("training.lstm_clip_norm", t.lstm_clip_norm)?;
        non_negative("training.profile_learning_rate", t.profile_learning_rate)?;
        non_negative("training.profile_global_learning_rate", t.profile_global_learning_rate)?;
        at_least_one("training.profile_refresh_every", t.profile_refresh_every)?;
        Ok(())
    }

    /// SHA-256 over every field that influences results. Output location,
    /// checkpoint cadence and the round count are left out, so a run can be
    /// extended from its checkpoints.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let root = v.as_object_mut().expect("config is an object");
        root.remove("output_dir");
        let training = root
            .get_mut("training")
            .and_then(|t| t.as_object_mut())
            .expect("training section");
        training.remove("rounds");
        training.remove("checkpoint_every");
        let canonical = serde_json::to_string(&v).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to toml")
    }
}

/// Parses and validates a configuration. Returns the config and the dotted
/// names of the fields that took their default value.
pub fn parse_config(text: &str) -> Result<(ExperimentConfig, Vec<String>)> {
    let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    config.validate()?;
    let defaults = toml::Table::try_from(ExperimentConfig::default()).expect("defaults serialize");
    let mut missing = Vec::new();
    collect_missing(&defaults, &raw, "", &mut missing);
    Ok((config, missing))
}

fn collect_missing(defaults: &toml::Table, given: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in defaults {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (value, given.get(key)) {
            (toml::Value::Table(d), None) => collect_missing(d, &toml::Table::new(), &path, out),
            (toml::Value::Table(d), Some(toml::Value::Table(g))) => collect_missing(d, g, &path, out),
            (_, None) => out.push(path),
            _ => {}
        }
    }
}

/// Reads `path` and applies [`parse_config`].
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{LstmAutoencoder, SensorEncoder, StreamNormalizer};
use crate::nn::{ParamVector, Parameterized, SimRng};
use crate::profile::{
    build_profile_model, extract_profile, ProfileDims, SessionEncoding, SessionFeatures, StackedProfileModel,
    UserProfile,
};
use crate::world::SessionRecord;

use super::aggregate::Upload;
use super::local::{compute_update, local_train, session_weights, LocalTrainOutcome, SessionBatch};
use super::policy::PolicyModel;

/// Sequence autoencoder pretraining settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationSettings {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
}

/// Profile autoencoder training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSettings {
    pub pretrain_epochs: usize,
    pub refresh_epochs: usize,
    pub learning_rate: f64,
}

/// Local policy training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    pub session_kappa: f64,
    /// When false every session gets the same weight.
    pub session_weighting: bool,
}

/// Initial parameters shared by every node so that trained models stay
/// comparable across the network.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedInit {
    pub sequence_models: Vec<LstmAutoencoder>,
    pub profile_model: StackedProfileModel,
}

impl SharedInit {
    /// One sequence autoencoder per sensor dimension in `sensor_dims`, plus a
    /// profile model whose sequence-representation input is their concatenation.
    pub fn generate(
        sensor_dims: &[usize],
        attribute_dim: usize,
        state_dim: usize,
        representation_dim: usize,
        per_stream_hidden: usize,
        code: usize,
        rng: &SimRng,
    ) -> Result<Self> {
        if sensor_dims.is_empty() {
            return Err(Error::Empty("sensor list"));
        }
        let sequence_models = sensor_dims
            .iter()
            .enumerate()
            .map(|(k, &d)| LstmAutoencoder::init(d, representation_dim, &mut rng.fork_indexed("sequence_model", k as u64)))
            .collect();
        let dims = ProfileDims {
            de: attribute_dim,
            ds: state_dim,
            dr: representation_dim * sensor_dims.len(),
            per_stream_hidden,
            code,
        };
        let profile_model = build_profile_model(dims, &mut rng.fork("profile_model"))?;
        Ok(SharedInit {
            sequence_models,
            profile_model,
        })
    }

    pub fn initial_profile(&self) -> UserProfile {
        extract_profile(&self.profile_model)
    }
}

/// One (node, teacher) pair. The session data stays private to this type;
/// only [`Upload`]s leave it.
#[derive(Debug, Clone)]
pub struct NodeState {
    node: usize,
    teacher: usize,
    attributes: Vec<f64>,
    sessions: Vec<SessionRecord>,
    features: Vec<SessionFeatures>,
    encoders: Vec<SensorEncoder>,
    profile_model: StackedProfileModel,
    local_model: Option<ParamVector>,
}

impl NodeState {
    /// Pretrains the node's sequence autoencoders and profile model on its
    /// initial sessions, starting from the shared initialization.
    #[allow(clippy::too_many_arguments)]
    pub fn bootstrap(
        node: usize,
        teacher: usize,
        attributes: Vec<f64>,
        sessions: Vec<SessionRecord>,
        init: &SharedInit,
        representation: &RepresentationSettings,
        profile: &ProfileSettings,
        rng: &SimRng,
    ) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::Empty("initial sessions"));
        }
        let mut encoders = Vec::with_capacity(init.sequence_models.len());
        for (k, start) in init.sequence_models.iter().enumerate() {
            let raw = sessions
                .iter()
                .map(|s| {
                    s.streams
                        .get(k)
                        .cloned()
                        .ok_or_else(|| Error::invalid("session", format!("missing stream {k}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let normalizer = StreamNormalizer::fit(&raw)?;
            let normalized = raw.iter().map(|s| normalizer.apply(s)).collect::<Result<Vec<_>>>()?;
            let mut autoencoder = start.clone();
            if representation.epochs > 0 {
                autoencoder.train(
                    &normalized,
                    representation.epochs,
                    representation.learning_rate,
                    representation.clip_norm,
                    &mut rng.fork_indexed("sequence_train", k as u64),
                )?;
            }
            encoders.push(SensorEncoder {
                sensor: k,
                normalizer,
                autoencoder,
            });
        }
        let mut state = Self::restore(node, teacher, attributes, Vec::new(), encoders, init.profile_model.clone(), None)?;
        for s in sessions {
            state.receive_session(s)?;
        }
        if profile.pretrain_epochs > 0 {
            state.profile_model.train(
                &state.features,
                profile.pretrain_epochs,
                profile.learning_rate,
                &mut rng.fork("profile_pretrain"),
            )?;
        }
        Ok(state)
    }

    /// Rebuilds a node from trained components; session features are
    /// recomputed with the given encoders.
    pub fn restore(
        node: usize,
        teacher: usize,
        attributes: Vec<f64>,
        sessions: Vec<SessionRecord>,
        encoders: Vec<SensorEncoder>,
        profile_model: StackedProfileModel,
        local_model: Option<ParamVector>,
    ) -> Result<Self> {
        crate::error::check_len("attribute vector", profile_model.dims().de, attributes.len())?;
        let mut state = NodeState {
            node,
            teacher,
            attributes,
            sessions: Vec::new(),
            features: Vec::new(),
            encoders,
            profile_model,
            local_model,
        };
        for s in sessions {
            state.receive_session(s)?;
        }
        Ok(state)
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn teacher(&self) -> usize {
        self.teacher
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sessions.iter().map(|s| s.samples.len()).sum()
    }

    /// Indices of the held sessions, in storage order.
    pub fn session_indices(&self) -> Vec<usize> {
        self.sessions.iter().map(|s| s.index).collect()
    }

    pub fn encoders(&self) -> &[SensorEncoder] {
        &self.encoders
    }

    pub fn profile_model(&self) -> &StackedProfileModel {
        &self.profile_model
    }

    pub fn local_model(&self) -> Option<&ParamVector> {
        self.local_model.as_ref()
    }

    fn features_for(&self, record: &SessionRecord) -> Result<SessionFeatures> {
        if record.streams.len() != self.encoders.len() {
            return Err(Error::invalid(
                "session",
                format!("{} streams for {} sensor encoders", record.streams.len(), self.encoders.len()),
            ));
        }
        let mut dr = Vec::new();
        for (enc, seq) in self.encoders.iter().zip(&record.streams) {
            dr.extend(enc.represent(seq)?.0);
        }
        Ok(SessionFeatures {
            de: self.attributes.clone(),
            ds: record.state.clone(),
            dr,
        })
    }

    /// Stores a new session and its features. Session indices must increase.
    pub fn receive_session(&mut self, record: SessionRecord) -> Result<()> {
        if let Some(last) = self.sessions.last() {
            if record.index <= last.index {
                return Err(Error::invalid(
                    "session",
                    format!("index {} does not follow {}", record.index, last.index),
                ));
            }
        }
        if record.samples.is_empty() {
            return Err(Error::Empty("session samples"));
        }
        if record.samples.iter().any(|s| s.session != record.index) {
            return Err(Error::invalid("session", "sample tagged with a different session index"));
        }
        let f = self.features_for(&record)?;
        self.profile_model.loss(&f)?;
        self.features.push(f);
        self.sessions.push(record);
        Ok(())
    }

    /// Warm-started profile training on every session held so far.
    pub fn refresh_profile(&mut self, epochs: usize, learning_rate: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
        if epochs == 0 {
            return Ok(vec![self.profile_model.corpus_loss(&self.features)?]);
        }
        self.profile_model.train(&self.features, epochs, learning_rate, rng)
    }

    pub fn profile(&self) -> UserProfile {
        extract_profile(&self.profile_model)
    }

    pub fn session_encodings(&self) -> Result<Vec<SessionEncoding>> {
        self.features.iter().map(|f| self.profile_model.encode(f)).collect()
    }

    /// Weights aligned with [`Self::session_indices`].
    pub fn session_weights(&self, kappa: f64) -> Result<Vec<f64>> {
        session_weights(&self.session_encodings()?, kappa)
    }

    fn batch(&self) -> SessionBatch {
        SessionBatch::from_samples(self.sessions.iter().flat_map(|s| s.samples.iter().cloned()))
    }

    /// Trains a local copy of `global` on the node's sessions and keeps it.
    pub fn local_train(&mut self, global: &PolicyModel, settings: &LocalSettings) -> Result<LocalTrainOutcome> {
        let weights = if settings.session_weighting {
            self.session_weights(settings.session_kappa)?
        } else {
            vec![1.0; self.sessions.len()]
        };
        let out = local_train(global, &self.batch(), &weights, settings.learning_rate, settings.epochs)?;
        self.local_model = Some(out.model.params());
        Ok(out)
    }

    /// The delta against `global` and the current profile.
    pub fn upload(&self, global: &PolicyModel) -> Result<Upload> {
        let local = self
            .local_model
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("node {} has not trained locally", self.node)))?;
        Ok(Upload {
            update: compute_update(local, &global.params(), self.node, self.teacher, self.sample_count())?,
            profile: self.profile(),
        })
    }
}

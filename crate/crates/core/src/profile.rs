//! Multi-stream stacked autoencoder for user profiles.
//!
//! Three input streams (static user attributes, per-session user state, and
//! the concatenated sequence representations) each pass through their own
//! tanh layer. A fusion layer maps the concatenated stream codes to the shared
//! session encoding. The decoder mirrors the encoder shape for shape. The
//! encoder half of the trained parameters is the user profile.

use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::nn::{
    mse_loss, sgd_step, split_layer_grads, Activation, DenseLayer, Layout, ParamVector, Parameterized, SimRng,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDims {
    pub de: usize,
    pub ds: usize,
    pub dr: usize,
    pub per_stream_hidden: usize,
    pub code: usize,
}

impl ProfileDims {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("de", self.de),
            ("ds", self.ds),
            ("dr", self.dr),
            ("per_stream_hidden", self.per_stream_hidden),
            ("code", self.code),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::invalid("dims", format!("`{name}` must be at least 1")));
            }
        }
        Ok(())
    }

    fn stream_dims(&self) -> [usize; 3] {
        [self.de, self.ds, self.dr]
    }
}

/// Inputs for one session: attributes, user state, sequence representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    pub de: Vec<f64>,
    pub ds: Vec<f64>,
    pub dr: Vec<f64>,
}

impl SessionFeatures {
    fn streams(&self) -> [&[f64]; 3] {
        [&self.de, &self.ds, &self.dr]
    }
}

/// Code-layer activation for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEncoding(pub Vec<f64>);

impl SessionEncoding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

const STREAM_NAMES: [&str; 3] = ["de", "ds", "dr"];

#[derive(Debug, Clone, PartialEq)]
pub struct StackedProfileModel {
    dims: ProfileDims,
    stream_encoders: [DenseLayer; 3],
    fusion: DenseLayer,
    fusion_decoder: DenseLayer,
    stream_decoders: [DenseLayer; 3],
    layout: Arc<Layout>,
    encoder_layout: Arc<Layout>,
}

struct Trace {
    stream_codes: [Vec<f64>; 3],
    joint: Vec<f64>,
    code: Vec<f64>,
    decoded_joint: Vec<f64>,
    reconstructions: [Vec<f64>; 3],
}

/// Builds a freshly initialized profile model.
pub fn build_profile_model(dims: ProfileDims, rng: &mut SimRng) -> Result<StackedProfileModel> {
    dims.validate()?;
    let h = dims.per_stream_hidden;
    let stream_encoders = dims
        .stream_dims()
        .map(|d| DenseLayer::init(d, h, Activation::Tanh, rng));
    let fusion = DenseLayer::init(3 * h, dims.code, Activation::Tanh, rng);
    let fusion_decoder = DenseLayer::init(dims.code, 3 * h, Activation::Tanh, rng);
    let stream_decoders = dims
        .stream_dims()
        .map(|d| DenseLayer::init(h, d, Activation::Identity, rng));
    Ok(StackedProfileModel::assemble(
        dims,
        stream_encoders,
        fusion,
        fusion_decoder,
        stream_decoders,
    ))
}

impl StackedProfileModel {
    fn assemble(
        dims: ProfileDims,
        stream_encoders: [DenseLayer; 3],
        fusion: DenseLayer,
        fusion_decoder: DenseLayer,
        stream_decoders: [DenseLayer; 3],
    ) -> Self {
        let mut b = Layout::builder();
        for (l, name) in stream_encoders.iter().zip(STREAM_NAMES) {
            l.push_layout(&mut b, &format!("encoder.{name}"));
        }
        fusion.push_layout(&mut b, "encoder.fusion");
        fusion_decoder.push_layout(&mut b, "decoder.fusion");
        for (l, name) in stream_decoders.iter().zip(STREAM_NAMES) {
            l.push_layout(&mut b, &format!("decoder.{name}"));
        }
        let layout = b.build();
        let encoder_layout = layout.prefix_while(|e| e.name.starts_with("encoder."));
        StackedProfileModel {
            dims,
            stream_encoders,
            fusion,
            fusion_decoder,
            stream_decoders,
            layout: Arc::new(layout),
            encoder_layout: Arc::new(encoder_layout),
        }
    }

    /// Model with every weight and bias set to zero.
    pub fn zeros(dims: ProfileDims) -> Result<Self> {
        dims.validate()?;
        let h = dims.per_stream_hidden;
        Ok(Self::assemble(
            dims,
            dims.stream_dims().map(|d| DenseLayer::zeros(d, h, Activation::Tanh)),
            DenseLayer::zeros(3 * h, dims.code, Activation::Tanh),
            DenseLayer::zeros(dims.code, 3 * h, Activation::Tanh),
            dims.stream_dims().map(|d| DenseLayer::zeros(h, d, Activation::Identity)),
        ))
    }

    pub fn dims(&self) -> ProfileDims {
        self.dims
    }

    pub fn encoder_param_count(&self) -> usize {
        self.encoder_layout.len()
    }

    /// Encoder-side layers in canonical order (three streams, then fusion).
    pub fn encoder_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.stream_encoders.iter().chain(std::iter::once(&self.fusion))
    }

    /// Decoder-side layers ordered so that entry `i` mirrors encoder layer `i`.
    pub fn mirrored_decoder_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.stream_decoders.iter().chain(std::iter::once(&self.fusion_decoder))
    }

    fn check_features(&self, f: &SessionFeatures) -> Result<()> {
        check_len("session features de", self.dims.de, f.de.len())?;
        check_len("session features ds", self.dims.ds, f.ds.len())?;
        check_len("session features dr", self.dims.dr, f.dr.len())
    }

    fn trace(&self, f: &SessionFeatures) -> Trace {
        let streams = f.streams();
        let stream_codes = [0, 1, 2].map(|s| self.stream_encoders[s].forward_unchecked(streams[s]));
        let joint: Vec<f64> = stream_codes.iter().flatten().copied().collect();
        let code = self.fusion.forward_unchecked(&joint);
        let decoded_joint = self.fusion_decoder.forward_unchecked(&code);
        let h = self.dims.per_stream_hidden;
        let reconstructions =
            [0, 1, 2].map(|s| self.stream_decoders[s].forward_unchecked(&decoded_joint[s * h..(s + 1) * h]));
        Trace {
            stream_codes,
            joint,
            code,
            decoded_joint,
            reconstructions,
        }
    }

    pub fn encode(&self, f: &SessionFeatures) -> Result<SessionEncoding> {
        self.check_features(f)?;
        let streams = f.streams();
        let joint: Vec<f64> = (0..3)
            .flat_map(|s| self.stream_encoders[s].forward_unchecked(streams[s]))
            .collect();
        Ok(SessionEncoding(self.fusion.forward_unchecked(&joint)))
    }

    pub fn reconstruct(&self, f: &SessionFeatures) -> Result<SessionFeatures> {
        self.check_features(f)?;
        let [de, ds, dr] = self.trace(f).reconstructions;
        Ok(SessionFeatures { de, ds, dr })
    }

    /// Sum of the three per-stream reconstruction MSEs.
    pub fn loss(&self, f: &SessionFeatures) -> Result<f64> {
        self.check_features(f)?;
        let t = self.trace(f);
        let streams = f.streams();
        let mut total = 0.0;
        for s in 0..3 {
            total += mse_loss(&t.reconstructions[s], streams[s])?.0;
        }
        Ok(total)
    }

    pub fn corpus_loss(&self, sessions: &[SessionFeatures]) -> Result<f64> {
        if sessions.is_empty() {
            return Err(Error::Empty("profile training sessions"));
        }
        let mut total = 0.0;
        for s in sessions {
            total += self.loss(s)?;
        }
        Ok(total / sessions.len() as f64)
    }

    pub fn loss_and_grad(&self, f: &SessionFeatures) -> Result<(f64, Vec<f64>)> {
        self.check_features(f)?;
        let t = self.trace(f);
        let streams = f.streams();
        let h = self.dims.per_stream_hidden;

        let mut grads = vec![0.0; self.layout.len()];
        let mut rest: &mut [f64] = &mut grads;
        let mut enc_slices = Vec::with_capacity(3);
        for l in &self.stream_encoders {
            let (w, b, r) = split_layer_grads(rest, l);
            enc_slices.push((w, b));
            rest = r;
        }
        let (fw, fb, rest) = split_layer_grads(rest, &self.fusion);
        let (dfw, dfb, mut rest) = split_layer_grads(rest, &self.fusion_decoder);
        let mut dec_slices = Vec::with_capacity(3);
        for l in &self.stream_decoders {
            let (w, b, r) = split_layer_grads(rest, l);
            dec_slices.push((w, b));
            rest = r;
        }

        let mut loss = 0.0;
        let mut d_joint_dec = vec![0.0; 3 * h];
        for s in 0..3 {
            let (l, g) = mse_loss(&t.reconstructions[s], streams[s])?;
            loss += l;
            let (w, b) = &mut dec_slices[s];
            self.stream_decoders[s].backward_acc(
                &t.decoded_joint[s * h..(s + 1) * h],
                &t.reconstructions[s],
                &g,
                w,
                b,
                Some(&mut d_joint_dec[s * h..(s + 1) * h]),
            );
        }
        let mut d_code = vec![0.0; self.dims.code];
        self.fusion_decoder
            .backward_acc(&t.code, &t.decoded_joint, &d_joint_dec, dfw, dfb, Some(&mut d_code));
        let mut d_joint = vec![0.0; 3 * h];
        self.fusion.backward_acc(&t.joint, &t.code, &d_code, fw, fb, Some(&mut d_joint));
        for s in 0..3 {
            let (w, b) = &mut enc_slices[s];
            self.stream_encoders[s].backward_acc(
                streams[s],
                &t.stream_codes[s],
                &d_joint[s * h..(s + 1) * h],
                w,
                b,
                None,
            );
        }
        Ok((loss, grads))
    }

    /// Per-session SGD over shuffled epochs. Returns the corpus loss before
    /// training followed by the corpus loss after each epoch.
    pub fn train(
        &mut self,
        sessions: &[SessionFeatures],
        epochs: usize,
        lr: f64,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>> {
        if sessions.is_empty() {
            return Err(Error::Empty("profile training sessions"));
        }
        for s in sessions {
            self.check_features(s)?;
        }
        let mut history = Vec::with_capacity(epochs + 1);
        history.push(self.corpus_loss(sessions)?);
        let mut order: Vec<usize> = (0..sessions.len()).collect();
        for epoch in 1..=epochs {
            order.shuffle(rng);
            for &i in &order {
                let (_, g) = self.loss_and_grad(&sessions[i])?;
                let grads = ParamVector::new(self.layout.clone(), g)?;
                let next = sgd_step(&self.params(), &grads, lr)?;
                self.set_params(&next)?;
            }
            let loss = self.corpus_loss(sessions)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            history.push(loss);
        }
        Ok(history)
    }
}

impl Parameterized for StackedProfileModel {
    fn layout(&self) -> Arc<Layout> {
        self.layout.clone()
    }

    fn params(&self) -> ParamVector {
        let mut v = Vec::with_capacity(self.layout.len());
        for l in self.encoder_layers() {
            l.write_params(&mut v);
        }
        self.fusion_decoder.write_params(&mut v);
        for l in &self.stream_decoders {
            l.write_params(&mut v);
        }
        ParamVector::new(self.layout.clone(), v).expect("layout matches layers")
    }

    fn set_params(&mut self, params: &ParamVector) -> Result<()> {
        if *params.layout().as_ref() != *self.layout {
            return Err(Error::LayoutMismatch(format!(
                "profile model expects [{}], got [{}]",
                self.layout,
                params.layout()
            )));
        }
        let mut rest = params.values();
        for l in &mut self.stream_encoders {
            rest = l.read_params(rest);
        }
        rest = self.fusion.read_params(rest);
        rest = self.fusion_decoder.read_params(rest);
        for l in &mut self.stream_decoders {
            rest = l.read_params(rest);
        }
        Ok(())
    }
}

/// Deterministic encoder forward pass.
pub fn encode_session(model: &StackedProfileModel, f: &SessionFeatures) -> Result<SessionEncoding> {
    model.encode(f)
}

/// Trains a copy of `model`; returns the trained copy and its loss history.
pub fn train_profile(
    model: &StackedProfileModel,
    sessions: &[SessionFeatures],
    epochs: usize,
    lr: f64,
    rng: &mut SimRng,
) -> Result<(StackedProfileModel, Vec<f64>)> {
    let mut m = model.clone();
    let history = m.train(sessions, epochs, lr, rng)?;
    Ok((m, history))
}

/// Encoder parameters of a trained profile model, tagged with a layout fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    params: ParamVector,
    fingerprint: u64,
}

impl UserProfile {
    pub fn from_params(params: ParamVector) -> Self {
        let fingerprint = params.layout().fingerprint();
        UserProfile { params, fingerprint }
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn ensure_comparable(&self, other: &UserProfile) -> Result<()> {
        if self.fingerprint == other.fingerprint {
            Ok(())
        } else {
            Err(Error::IncomparableProfiles {
                left: self.fingerprint,
                right: other.fingerprint,
            })
        }
    }
}

pub fn extract_profile(model: &StackedProfileModel) -> UserProfile {
    let mut v = Vec::with_capacity(model.encoder_layout.len());
    for l in model.encoder_layers() {
        l.write_params(&mut v);
    }
    let params = ParamVector::new(model.encoder_layout.clone(), v).expect("encoder layout matches");
    UserProfile::from_params(params)
}

/// Euclidean distance between profile parameter vectors.
pub fn profile_distance(a: &UserProfile, b: &UserProfile) -> Result<f64> {
    a.ensure_comparable(b)?;
    a.params.distance(&b.params)
}

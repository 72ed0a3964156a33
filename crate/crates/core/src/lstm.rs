//! Sequence-to-sequence LSTM autoencoder.
//!
//! The encoder runs over an observation sequence from a zero state; its final
//! hidden state `h_T` is the fixed-length representation of the sequence.
//! The decoder starts from the encoder's final `(h_T, c_T)`, receives a zero
//! input at every step, and a linear readout maps each decoder hidden state
//! to feature space. Reconstruction targets are the input in reverse order:
//! the first prediction approximates `u_T`, the last approximates `u_1`.
//!
//! Gate order inside the stacked weight matrix is input, forget, output,
//! candidate. Gradients use full (untruncated) backpropagation through time.

use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::nn::{
    glorot_uniform, outer_acc, sgd_step, sigmoid, split_layer_grads, Activation, DenseLayer, Layout,
    LayoutBuilder, ParamVector, Parameterized, RealMatrix, SimRng,
};

/// Standard LSTM cell with input dim `d` and hidden dim `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    input_dim: usize,
    hidden_dim: usize,
    /// `(4q) x (d + q)`, rows grouped by gate, columns `[u; h]`.
    weights: RealMatrix,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden_dim],
            c: vec![0.0; hidden_dim],
        }
    }
}

/// Everything one step needs for its backward pass.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
}

impl LstmCell {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmCell {
            input_dim,
            hidden_dim,
            weights: RealMatrix::zeros(4 * hidden_dim, input_dim + hidden_dim),
            bias: vec![0.0; 4 * hidden_dim],
        }
    }

    /// Glorot-uniform per gate block, zero biases.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut SimRng) -> Self {
        let cols = input_dim + hidden_dim;
        let mut data = Vec::with_capacity(4 * hidden_dim * cols);
        for _ in 0..4 {
            data.extend_from_slice(glorot_uniform(hidden_dim, cols, rng).as_slice());
        }
        LstmCell {
            input_dim,
            hidden_dim,
            weights: RealMatrix::from_vec(4 * hidden_dim, cols, data).expect("sized above"),
            bias: vec![0.0; 4 * hidden_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn param_count(&self) -> usize {
        4 * self.hidden_dim * (self.input_dim + self.hidden_dim + 1)
    }

    pub fn weights_mut(&mut self) -> &mut RealMatrix {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn step_cached(&self, h: &[f64], c: &[f64], u: &[f64]) -> StepCache {
        let q = self.hidden_dim;
        let mut x = Vec::with_capacity(self.input_dim + q);
        x.extend_from_slice(u);
        x.extend_from_slice(h);
        let mut z = self.bias.clone();
        self.weights.gemv_acc(&x, &mut z);
        let i: Vec<f64> = z[..q].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[q..2 * q].iter().map(|&v| sigmoid(v)).collect();
        let o: Vec<f64> = z[2 * q..3 * q].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[3 * q..].iter().map(|v| v.tanh()).collect();
        let c_new: Vec<f64> = (0..q).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
        let h_new: Vec<f64> = (0..q).map(|k| o[k] * tanh_c[k]).collect();
        StepCache {
            x,
            i,
            f,
            o,
            g,
            c_prev: c.to_vec(),
            tanh_c,
            h: h_new,
            c: c_new,
        }
    }

    /// Backward through one step. Accumulates into `gw`/`gb`; returns
    /// `(d_input, d_h_prev, d_c_prev)`.
    fn step_backward(
        &self,
        cache: &StepCache,
        dh: &[f64],
        dc_next: &[f64],
        gw: &mut [f64],
        gb: &mut [f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let q = self.hidden_dim;
        let mut dz = vec![0.0; 4 * q];
        let mut dc_prev = vec![0.0; q];
        for k in 0..q {
            let (i, f, o, g, tc) = (cache.i[k], cache.f[k], cache.o[k], cache.g[k], cache.tanh_c[k]);
            let d_o = dh[k] * tc;
            let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
            let d_i = dc * g;
            let d_g = dc * i;
            let d_f = dc * cache.c_prev[k];
            dc_prev[k] = dc * f;
            dz[k] = d_i * i * (1.0 - i);
            dz[q + k] = d_f * f * (1.0 - f);
            dz[2 * q + k] = d_o * o * (1.0 - o);
            dz[3 * q + k] = d_g * (1.0 - g * g);
        }
        outer_acc(&dz, &cache.x, gw);
        for (b, d) in gb.iter_mut().zip(&dz) {
            *b += d;
        }
        let mut dx = vec![0.0; self.input_dim + q];
        self.weights.gemv_t_acc(&dz, &mut dx);
        let dh_prev = dx.split_off(self.input_dim);
        (dx, dh_prev, dc_prev)
    }

    fn push_layout(&self, b: &mut LayoutBuilder, prefix: &str) {
        b.add(format!("{prefix}.weights"), &[4 * self.hidden_dim, self.input_dim + self.hidden_dim]);
        b.add(format!("{prefix}.bias"), &[4 * self.hidden_dim]);
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.weights.as_slice());
        out.extend_from_slice(&self.bias);
    }

    fn read_params<'a>(&mut self, values: &'a [f64]) -> &'a [f64] {
        let nw = self.weights.as_slice().len();
        let nb = self.bias.len();
        self.weights.as_mut_slice().copy_from_slice(&values[..nw]);
        self.bias.copy_from_slice(&values[nw..nw + nb]);
        &values[nw + nb..]
    }

    /// Splits a flat gradient buffer into this cell's (weights, bias) slices and the rest.
    fn split_grads<'a>(&self, buf: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64], &'a mut [f64]) {
        let nw = 4 * self.hidden_dim * (self.input_dim + self.hidden_dim);
        let (w, rest) = buf.split_at_mut(nw);
        let (b, rest) = rest.split_at_mut(4 * self.hidden_dim);
        (w, b, rest)
    }
}

/// One LSTM transition.
pub fn lstm_step(cell: &LstmCell, state: &LstmState, u: &[f64]) -> Result<LstmState> {
    check_len("lstm_step input", cell.input_dim, u.len())?;
    check_len("lstm_step hidden state", cell.hidden_dim, state.h.len())?;
    check_len("lstm_step cell state", cell.hidden_dim, state.c.len())?;
    let cache = cell.step_cached(&state.h, &state.c, u);
    Ok(LstmState {
        h: cache.h,
        c: cache.c,
    })
}

/// Multi-dimensional time series from one sensor during one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSequence {
    sensor: usize,
    steps: Vec<Vec<f64>>,
}

impl ObservationSequence {
    pub fn new(sensor: usize, steps: Vec<Vec<f64>>) -> Result<Self> {
        let first = steps.first().ok_or(Error::Empty("observation sequence"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Empty("observation feature vector"));
        }
        for s in &steps {
            check_len("observation step dim", dim, s.len())?;
        }
        Ok(ObservationSequence { sensor, steps })
    }

    pub fn sensor(&self) -> usize {
        self.sensor
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.steps[0].len()
    }
}

/// Final encoder hidden state `h_T` of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRepresentation(pub Vec<f64>);

impl SequenceRepresentation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Runs the encoder over the sequence from a zero state; returns `(h_T, c_T)`.
pub fn encode_sequence(encoder: &LstmCell, seq: &ObservationSequence) -> Result<(SequenceRepresentation, Vec<f64>)> {
    check_len("encode_sequence feature dim", encoder.input_dim, seq.dim())?;
    let mut state = LstmState::zeros(encoder.hidden_dim);
    for u in &seq.steps {
        let cache = encoder.step_cached(&state.h, &state.c, u);
        state = LstmState {
            h: cache.h,
            c: cache.c,
        };
    }
    Ok((SequenceRepresentation(state.h), state.c))
}

/// Emits `len` predictions: the first from `h_T` itself, each following one
/// from a further decoder step on a zero input.
pub fn decode_sequence(
    decoder: &LstmCell,
    readout: &DenseLayer,
    h_last: &[f64],
    c_last: &[f64],
    len: usize,
) -> Result<Vec<Vec<f64>>> {
    if len == 0 {
        return Err(Error::invalid("len", "decode length must be at least 1"));
    }
    check_len("decode_sequence h_T", decoder.hidden_dim, h_last.len())?;
    check_len("decode_sequence c_T", decoder.hidden_dim, c_last.len())?;
    check_len("decode_sequence readout input", decoder.hidden_dim, readout.input_dim())?;
    let zero = vec![0.0; decoder.input_dim];
    let mut state = LstmState {
        h: h_last.to_vec(),
        c: c_last.to_vec(),
    };
    let mut out = Vec::with_capacity(len);
    out.push(readout.forward_unchecked(&state.h));
    for _ in 1..len {
        let cache = decoder.step_cached(&state.h, &state.c, &zero);
        state = LstmState {
            h: cache.h,
            c: cache.c,
        };
        out.push(readout.forward_unchecked(&state.h));
    }
    Ok(out)
}

/// Encoder, decoder and linear readout for one sensor type.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmAutoencoder {
    encoder: LstmCell,
    decoder: LstmCell,
    readout: DenseLayer,
    layout: Arc<Layout>,
}

impl LstmAutoencoder {
    pub fn init(feature_dim: usize, hidden_dim: usize, rng: &mut SimRng) -> Self {
        let encoder = LstmCell::init(feature_dim, hidden_dim, rng);
        let decoder = LstmCell::init(feature_dim, hidden_dim, rng);
        let readout = DenseLayer::init(hidden_dim, feature_dim, Activation::Identity, rng);
        Self::from_parts(encoder, decoder, readout).expect("dims consistent by construction")
    }

    pub fn from_parts(encoder: LstmCell, decoder: LstmCell, readout: DenseLayer) -> Result<Self> {
        check_len("autoencoder decoder hidden", encoder.hidden_dim, decoder.hidden_dim)?;
        check_len("autoencoder decoder input", encoder.input_dim, decoder.input_dim)?;
        check_len("autoencoder readout input", decoder.hidden_dim, readout.input_dim())?;
        check_len("autoencoder readout output", encoder.input_dim, readout.output_dim())?;
        let mut b = Layout::builder();
        encoder.push_layout(&mut b, "encoder");
        decoder.push_layout(&mut b, "decoder");
        readout.push_layout(&mut b, "readout");
        Ok(LstmAutoencoder {
            encoder,
            decoder,
            readout,
            layout: Arc::new(b.build()),
        })
    }

    pub fn encoder(&self) -> &LstmCell {
        &self.encoder
    }

    pub fn decoder(&self) -> &LstmCell {
        &self.decoder
    }

    pub fn readout(&self) -> &DenseLayer {
        &self.readout
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.encoder.hidden_dim
    }

    pub fn encode(&self, seq: &ObservationSequence) -> Result<SequenceRepresentation> {
        encode_sequence(&self.encoder, seq).map(|(h, _)| h)
    }

    /// Predictions `û_1..û_T`; `û_t` targets `u_{T-t+1}`.
    pub fn reconstruct(&self, seq: &ObservationSequence) -> Result<Vec<Vec<f64>>> {
        let (h, c) = encode_sequence(&self.encoder, seq)?;
        decode_sequence(&self.decoder, &self.readout, &h.0, &c, seq.len())
    }

    /// Mean squared error between the reconstruction and the reversed input.
    pub fn loss(&self, seq: &ObservationSequence) -> Result<f64> {
        let rec = self.reconstruct(seq)?;
        Ok(reversed_mse(&rec, seq.steps()))
    }

    pub fn corpus_loss(&self, seqs: &[ObservationSequence]) -> Result<f64> {
        if seqs.is_empty() {
            return Err(Error::Empty("sequence corpus"));
        }
        let mut total = 0.0;
        for s in seqs {
            total += self.loss(s)?;
        }
        Ok(total / seqs.len() as f64)
    }

    /// Loss and full BPTT gradient in canonical layout.
    pub fn loss_and_grad(&self, seq: &ObservationSequence) -> Result<(f64, Vec<f64>)> {
        check_len("autoencoder feature dim", self.feature_dim(), seq.dim())?;
        let q = self.hidden_dim();
        let d = self.feature_dim();
        let t_len = seq.len();

        let mut enc = Vec::with_capacity(t_len);
        let (mut h, mut c) = (vec![0.0; q], vec![0.0; q]);
        for u in seq.steps() {
            let cache = self.encoder.step_cached(&h, &c, u);
            h = cache.h.clone();
            c = cache.c.clone();
            enc.push(cache);
        }

        let zero = vec![0.0; d];
        let mut dec_h = Vec::with_capacity(t_len);
        let mut dec = Vec::with_capacity(t_len.saturating_sub(1));
        dec_h.push(h.clone());
        for _ in 1..t_len {
            let cache = self.decoder.step_cached(&h, &c, &zero);
            h = cache.h.clone();
            c = cache.c.clone();
            dec_h.push(cache.h.clone());
            dec.push(cache);
        }

        let n = (t_len * d) as f64;
        let mut loss = 0.0;
        let mut grads = vec![0.0; self.layout.len()];
        let (enc_w, enc_b, rest) = self.encoder.split_grads(&mut grads);
        let (dec_w, dec_b, rest) = self.decoder.split_grads(rest);
        let (ro_w, ro_b, _) = split_layer_grads(rest, &self.readout);

        // Readout gradients for each decoder output.
        let mut dh_out: Vec<Vec<f64>> = Vec::with_capacity(t_len);
        for (t, hs) in dec_h.iter().enumerate() {
            let pred = self.readout.forward_unchecked(hs);
            let target = &seq.steps()[t_len - 1 - t];
            let g: Vec<f64> = pred
                .iter()
                .zip(target)
                .map(|(p, y)| {
                    let diff = p - y;
                    loss += diff * diff;
                    2.0 * diff / n
                })
                .collect();
            let mut gx = vec![0.0; q];
            self.readout.backward_acc(hs, &pred, &g, ro_w, ro_b, Some(&mut gx));
            dh_out.push(gx);
        }

        // Decoder BPTT: dec[k] produced decoder state k+1 (0-based) from state k.
        let mut dh = vec![0.0; q];
        let mut dc = vec![0.0; q];
        for k in (1..t_len).rev() {
            for (a, b) in dh.iter_mut().zip(&dh_out[k]) {
                *a += b;
            }
            let (_, dh_prev, dc_prev) = self.decoder.step_backward(&dec[k - 1], &dh, &dc, dec_w, dec_b);
            dh = dh_prev;
            dc = dc_prev;
        }
        for (a, b) in dh.iter_mut().zip(&dh_out[0]) {
            *a += b;
        }

        // Encoder BPTT from (dh_T, dc_T).
        for cache in enc.iter().rev() {
            let (_, dh_prev, dc_prev) = self.encoder.step_backward(cache, &dh, &dc, enc_w, enc_b);
            dh = dh_prev;
            dc = dc_prev;
        }

        Ok((loss / n, grads))
    }

    /// Per-sequence SGD over shuffled epochs. Returns the corpus loss before
    /// training followed by the corpus loss after each epoch.
    pub fn train(
        &mut self,
        seqs: &[ObservationSequence],
        epochs: usize,
        lr: f64,
        clip_norm: Option<f64>,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>> {
        if seqs.is_empty() {
            return Err(Error::Empty("sequence corpus"));
        }
        if epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        let d = self.feature_dim();
        for s in seqs {
            check_len("corpus feature dim", d, s.dim())?;
        }
        let mut history = Vec::with_capacity(epochs + 1);
        history.push(self.corpus_loss(seqs)?);
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        for epoch in 1..=epochs {
            order.shuffle(rng);
            for &idx in &order {
                let (_, mut g) = self.loss_and_grad(&seqs[idx])?;
                if let Some(max) = clip_norm {
                    clip_to_norm(&mut g, max);
                }
                let grads = ParamVector::new(self.layout.clone(), g)?;
                let next = sgd_step(&self.params(), &grads, lr)?;
                self.set_params(&next)?;
            }
            let loss = self.corpus_loss(seqs)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            history.push(loss);
        }
        Ok(history)
    }
}

impl Parameterized for LstmAutoencoder {
    fn layout(&self) -> Arc<Layout> {
        self.layout.clone()
    }

    fn params(&self) -> ParamVector {
        let mut v = Vec::with_capacity(self.layout.len());
        self.encoder.write_params(&mut v);
        self.decoder.write_params(&mut v);
        self.readout.write_params(&mut v);
        ParamVector::new(self.layout.clone(), v).expect("layout matches parts")
    }

    fn set_params(&mut self, params: &ParamVector) -> Result<()> {
        if *params.layout().as_ref() != *self.layout {
            return Err(Error::LayoutMismatch(format!(
                "lstm autoencoder expects [{}], got [{}]",
                self.layout,
                params.layout()
            )));
        }
        let rest = self.encoder.read_params(params.values());
        let rest = self.decoder.read_params(rest);
        self.readout.read_params(rest);
        Ok(())
    }
}

pub(crate) fn clip_to_norm(g: &mut [f64], max: f64) {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > max {
        let s = max / norm;
        for v in g.iter_mut() {
            *v *= s;
        }
    }
}

fn reversed_mse(pred: &[Vec<f64>], input: &[Vec<f64>]) -> f64 {
    let t_len = input.len();
    let mut total = 0.0;
    let mut n = 0usize;
    for (t, p) in pred.iter().enumerate() {
        for (a, b) in p.iter().zip(&input[t_len - 1 - t]) {
            total += (a - b) * (a - b);
            n += 1;
        }
    }
    total / n as f64
}

/// Output of [`train_lstm_autoencoder`].
#[derive(Debug, Clone)]
pub struct TrainedLstm {
    pub model: LstmAutoencoder,
    pub loss_history: Vec<f64>,
}

/// Initializes an autoencoder from `rng` and trains it on `seqs` with plain SGD.
pub fn train_lstm_autoencoder(
    seqs: &[ObservationSequence],
    hidden_dim: usize,
    epochs: usize,
    lr: f64,
    rng: &SimRng,
) -> Result<TrainedLstm> {
    let first = seqs.first().ok_or(Error::Empty("sequence corpus"))?;
    let mut model = LstmAutoencoder::init(first.dim(), hidden_dim, &mut rng.fork("init"));
    let loss_history = model.train(seqs, epochs, lr, None, &mut rng.fork("shuffle"))?;
    Ok(TrainedLstm { model, loss_history })
}

/// Per-dimension z-scoring fitted on one node's local sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamNormalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StreamNormalizer {
    pub fn fit(seqs: &[ObservationSequence]) -> Result<Self> {
        let first = seqs.first().ok_or(Error::Empty("normalizer corpus"))?;
        let d = first.dim();
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        let mut n = 0.0;
        for s in seqs {
            check_len("normalizer feature dim", d, s.dim())?;
            for u in s.steps() {
                for k in 0..d {
                    sum[k] += u[k];
                    sq[k] += u[k] * u[k];
                }
                n += 1.0;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / n - m * m).max(0.0);
                if var > 1e-16 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(StreamNormalizer { mean, std })
    }

    pub fn apply(&self, seq: &ObservationSequence) -> Result<ObservationSequence> {
        check_len("normalizer feature dim", self.mean.len(), seq.dim())?;
        let steps = seq
            .steps()
            .iter()
            .map(|u| {
                u.iter()
                    .zip(self.mean.iter().zip(&self.std))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect()
            })
            .collect();
        ObservationSequence::new(seq.sensor, steps)
    }
}

/// Node-local representation pipeline for one sensor type: z-scoring
/// followed by the autoencoder's encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorEncoder {
    pub sensor: usize,
    pub normalizer: StreamNormalizer,
    pub autoencoder: LstmAutoencoder,
}

impl SensorEncoder {
    pub fn represent(&self, raw: &ObservationSequence) -> Result<SequenceRepresentation> {
        if raw.sensor() != self.sensor {
            return Err(Error::invalid(
                "sensor",
                format!("encoder for sensor {} got sequence from sensor {}", self.sensor, raw.sensor()),
            ));
        }
        self.autoencoder.encode(&self.normalizer.apply(raw)?)
    }
}

use std::collections::BTreeMap;

use crate::error::{check_len, Error, Result};
use crate::nn::{mse_loss, sgd_step, ParamVector, Parameterized};
use crate::profile::SessionEncoding;

use super::policy::{FeedbackSample, PolicyModel};

/// Inverse-distance weights of session encodings around their mean.
pub fn session_weights(encodings: &[SessionEncoding], kappa: f64) -> Result<Vec<f64>> {
    let first = encodings.first().ok_or(Error::Empty("session encodings"))?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("session_kappa", format!("must be positive, got {kappa}")));
    }
    let dim = first.0.len();
    let mut mean = vec![0.0; dim];
    for e in encodings {
        check_len("session encoding", dim, e.0.len())?;
        for (m, v) in mean.iter_mut().zip(&e.0) {
            *m += v;
        }
    }
    let n = encodings.len() as f64;
    for m in &mut mean {
        *m /= n;
    }
    Ok(encodings
        .iter()
        .map(|e| {
            let d = e.0.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            1.0 / (kappa + d)
        })
        .collect())
}

/// Demonstration samples grouped by session, in ascending session order.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBatch {
    sessions: Vec<(usize, Vec<FeedbackSample>)>,
}

impl SessionBatch {
    pub fn from_samples(samples: impl IntoIterator<Item = FeedbackSample>) -> Self {
        let mut map: BTreeMap<usize, Vec<FeedbackSample>> = BTreeMap::new();
        for s in samples {
            map.entry(s.session).or_default().push(s);
        }
        SessionBatch {
            sessions: map.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn sample_count(&self) -> usize {
        self.sessions.iter().map(|(_, s)| s.len()).sum()
    }

    pub fn session_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.sessions.iter().map(|(id, _)| *id)
    }

    pub fn sessions(&self) -> &[(usize, Vec<FeedbackSample>)] {
        &self.sessions
    }
}

/// Mean per-sample MSE of one session and its parameter gradient.
fn session_loss_and_grad(model: &PolicyModel, samples: &[FeedbackSample]) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::Empty("session samples"));
    }
    let mlp = model.mlp();
    let mut grads = vec![0.0; model.layout().len()];
    let mut loss = 0.0;
    for s in samples {
        let trace = mlp.forward_trace(&s.input)?;
        let (l, g) = mse_loss(trace.output(), &s.target)?;
        loss += l;
        mlp.backward_acc(&trace, &g, &mut grads);
    }
    let n = samples.len() as f64;
    grads.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grads))
}

/// Session-weighted loss `sum(w * L) / sum(w)` and its gradient.
pub fn weighted_local_loss(model: &PolicyModel, batch: &SessionBatch, weights: &[f64]) -> Result<(f64, ParamVector)> {
    if batch.is_empty() {
        return Err(Error::Empty("local dataset"));
    }
    check_len("session weights", batch.len(), weights.len())?;
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid("weights", "session weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights", "session weights sum to zero"));
    }
    let layout = model.layout();
    let mut grad = vec![0.0; layout.len()];
    let mut loss = 0.0;
    for ((_, samples), &w) in batch.sessions.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let (l, g) = session_loss_and_grad(model, samples)?;
        let c = w / total;
        loss += c * l;
        for (acc, v) in grad.iter_mut().zip(&g) {
            *acc += c * v;
        }
    }
    Ok((loss, ParamVector::new(layout, grad)?))
}

/// Result of [`local_train`].
#[derive(Debug, Clone)]
pub struct LocalTrainOutcome {
    pub model: PolicyModel,
    /// Weighted loss before the first step.
    pub initial_loss: f64,
    /// Weighted loss of the returned model.
    pub final_loss: f64,
}

/// Full-batch gradient descent on the weighted local loss, starting from `global`.
pub fn local_train(
    global: &PolicyModel,
    batch: &SessionBatch,
    weights: &[f64],
    learning_rate: f64,
    epochs: usize,
) -> Result<LocalTrainOutcome> {
    if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
        return Err(Error::invalid("local_learning_rate", format!("must be non-negative, got {learning_rate}")));
    }
    let mut model = global.clone();
    let (mut loss, mut grad) = weighted_local_loss(&model, batch, weights)?;
    if !loss.is_finite() {
        return Err(Error::Divergence { epoch: 0, loss });
    }
    let initial_loss = loss;
    for epoch in 1..=epochs {
        let next = sgd_step(&model.params(), &grad, learning_rate)?;
        model.set_params(&next)?;
        (loss, grad) = weighted_local_loss(&model, batch, weights)?;
        if !loss.is_finite() || !next.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
    }
    Ok(LocalTrainOutcome {
        model,
        initial_loss,
        final_loss: loss,
    })
}

/// Parameter delta uploaded by one node.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    pub delta: ParamVector,
    pub node: usize,
    pub teacher: usize,
    pub samples: usize,
}

/// `local - global`, tagged with its origin.
pub fn compute_update(
    local: &ParamVector,
    global: &ParamVector,
    node: usize,
    teacher: usize,
    samples: usize,
) -> Result<LocalUpdate> {
    Ok(LocalUpdate {
        delta: local.sub(global)?,
        node,
        teacher,
        samples,
    })
}

//! Deterministic fixtures shared by the `pipeline` benchmarks.

use std::sync::Arc;

use fedlfd_core::federated::{LocalUpdate, Upload};
use fedlfd_core::harness::ExperimentConfig;
use fedlfd_core::lstm::ObservationSequence;
use fedlfd_core::nn::{Layout, ParamVector, SimRng};
use fedlfd_core::profile::{ProfileDims, SessionFeatures, UserProfile};
use fedlfd_core::world::sinusoid_corpus;
use rand::Rng;

/// The 3-dim sinusoid corpus: 20 sequences of length 10 to 30.
pub fn sinusoids(seed: u64) -> Vec<ObservationSequence> {
    sinusoid_corpus(20, 3, 10, 30, &mut SimRng::from_seed(seed)).expect("valid corpus parameters")
}

pub const PROFILE_DIMS: ProfileDims = ProfileDims {
    de: 8,
    ds: 3,
    dr: 28,
    per_stream_hidden: 4,
    code: 3,
};

pub fn profile_sessions(n: usize, seed: u64) -> Vec<SessionFeatures> {
    let mut rng = SimRng::from_seed(seed);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..1.0)).collect() };
    (0..n)
        .map(|_| SessionFeatures {
            de: draw(PROFILE_DIMS.de),
            ds: draw(PROFILE_DIMS.ds),
            dr: draw(PROFILE_DIMS.dr),
        })
        .collect()
}

fn vector(layout: &Arc<Layout>, rng: &mut SimRng) -> ParamVector {
    let values = (0..layout.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ParamVector::new(layout.clone(), values).expect("length matches layout")
}

/// `n` uploads with `params`-long deltas and 200-long profiles, plus a
/// global profile to weight them against.
pub fn uploads(n: usize, params: usize, seed: u64) -> (Vec<Upload>, UserProfile) {
    let mut rng = SimRng::from_seed(seed);
    let delta_layout = Arc::new(Layout::builder().push("w", &[params]).build());
    let profile_layout = Arc::new(Layout::builder().push("q", &[200]).build());
    let uploads = (0..n)
        .map(|i| Upload {
            update: LocalUpdate {
                delta: vector(&delta_layout, &mut rng),
                node: i,
                teacher: i,
                samples: 10,
            },
            profile: UserProfile::from_params(vector(&profile_layout, &mut rng)),
        })
        .collect();
    let global = UserProfile::from_params(vector(&profile_layout, &mut rng));
    (uploads, global)
}

/// The default scenario with a single seed.
pub fn scenario_config() -> ExperimentConfig {
    ExperimentConfig {
        seeds: vec![1],
        ..ExperimentConfig::default()
    }
}

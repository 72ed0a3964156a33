//! Behavioral archetypes for simulated teachers.
//!
//! All distributions here are synthetic fixtures chosen so that the learners
//! have something recoverable to find; they make no claim about real people.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

/// Levels of the categorical attributes, in one-hot order.
pub const EDUCATION_LEVELS: [&str; 3] = ["secondary", "undergraduate", "graduate"];
pub const EXPERIENCE_LEVELS: [&str; 3] = ["novice", "intermediate", "expert"];

/// Reference constants for z-scoring continuous attributes. Fixed, so the
/// encoding of a teacher never depends on who else is in the population.
pub const AGE_REFERENCE: Gaussian = Gaussian { mean: 40.0, std: 12.0 };
pub const HEIGHT_REFERENCE: Gaussian = Gaussian { mean: 170.0, std: 10.0 };

/// Width of the encoded attribute vector: age, height, two one-hots.
pub const ATTRIBUTE_DIM: usize = 2 + EDUCATION_LEVELS.len() + EXPERIENCE_LEVELS.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeModel {
    pub age: Gaussian,
    pub height_cm: Gaussian,
    pub education: Vec<f64>,
    pub experience: Vec<f64>,
}

/// Hidden strain process behind the user-state detectors and demonstration quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDynamics {
    pub baseline_strain: f64,
    /// Strain added per session index.
    pub strain_drift: f64,
    pub strain_noise: f64,
    pub detector_noise: f64,
}

/// Sinusoid-plus-noise generator for one human sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamModel {
    pub amplitude: f64,
    /// Cycles per sample.
    pub frequency: f64,
    pub noise: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserArchetype {
    pub name: String,
    /// Relative share of the teacher population.
    pub weight: f64,
    pub attributes: AttributeModel,
    pub state: StateDynamics,
    /// One per human sensor, in catalog order.
    pub streams: Vec<StreamModel>,
    pub demo_noise: f64,
    pub outlier_probability: f64,
    pub outlier_noise_multiplier: f64,
    /// Systematic offset added to this archetype's demonstrated actions.
    pub action_bias: Vec<f64>,
}

impl UserArchetype {
    pub fn validate(&self, human_sensors: usize, action_dim: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("archetype", format!("`{}`: {reason}", self.name)));
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return bad(format!("weight {} must be non-negative", self.weight));
        }
        if !(0.0..=1.0).contains(&self.outlier_probability) {
            return bad(format!("outlier_probability {} outside [0, 1]", self.outlier_probability));
        }
        let scales = [
            ("demo_noise", self.demo_noise),
            ("outlier_noise_multiplier", self.outlier_noise_multiplier),
            ("strain_noise", self.state.strain_noise),
            ("detector_noise", self.state.detector_noise),
            ("age.std", self.attributes.age.std),
            ("height_cm.std", self.attributes.height_cm.std),
        ];
        for (name, v) in scales {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be non-negative"));
            }
        }
        for (name, probs, n) in [
            ("education", &self.attributes.education, EDUCATION_LEVELS.len()),
            ("experience", &self.attributes.experience, EXPERIENCE_LEVELS.len()),
        ] {
            if probs.len() != n || probs.iter().any(|p| !(*p >= 0.0)) || probs.iter().sum::<f64>() <= 0.0 {
                return bad(format!("{name} needs {n} non-negative weights with a positive sum"));
            }
        }
        if self.streams.len() != human_sensors {
            return bad(format!("{} stream models for {human_sensors} human sensors", self.streams.len()));
        }
        if self.streams.iter().any(|s| !(s.noise >= 0.0)) {
            return bad("stream noise must be non-negative".into());
        }
        if self.action_bias.len() != action_dim {
            return bad(format!("action_bias has {} entries, action_dim is {action_dim}", self.action_bias.len()));
        }
        Ok(())
    }
}

fn streams(amp: f64, freq: [f64; 3], noise: f64) -> Vec<StreamModel> {
    freq.iter()
        .map(|&f| StreamModel {
            amplitude: amp,
            frequency: f,
            noise,
            baseline: 0.0,
        })
        .collect()
}

/// Built-in population: two well-behaved archetypes and one deviant one.
pub fn default_archetypes() -> Vec<UserArchetype> {
    vec![
        UserArchetype {
            name: "attentive".into(),
            weight: 0.4,
            attributes: AttributeModel {
                age: Gaussian { mean: 36.0, std: 6.0 },
                height_cm: Gaussian { mean: 172.0, std: 7.0 },
                education: vec![0.2, 0.4, 0.4],
                experience: vec![0.1, 0.4, 0.5],
            },
            state: StateDynamics {
                baseline_strain: 0.2,
                strain_drift: 0.0,
                strain_noise: 0.1,
                detector_noise: 0.05,
            },
            streams: streams(1.0, [0.08, 0.05, 0.12], 0.1),
            demo_noise: 0.1,
            outlier_probability: 0.1,
            outlier_noise_multiplier: 2.0,
            action_bias: vec![0.0, 0.0],
        },
        UserArchetype {
            name: "relaxed".into(),
            weight: 0.4,
            attributes: AttributeModel {
                age: Gaussian { mean: 30.0, std: 6.0 },
                height_cm: Gaussian { mean: 168.0, std: 8.0 },
                education: vec![0.3, 0.5, 0.2],
                experience: vec![0.3, 0.5, 0.2],
            },
            state: StateDynamics {
                baseline_strain: 0.35,
                strain_drift: 0.0,
                strain_noise: 0.1,
                detector_noise: 0.05,
            },
            streams: streams(1.0, [0.08, 0.05, 0.12], 0.15),
            demo_noise: 0.15,
            outlier_probability: 0.1,
            outlier_noise_multiplier: 2.0,
            action_bias: vec![0.05, -0.05],
        },
        UserArchetype {
            name: "strained".into(),
            weight: 0.2,
            attributes: AttributeModel {
                age: Gaussian { mean: 55.0, std: 6.0 },
                height_cm: Gaussian { mean: 165.0, std: 8.0 },
                education: vec![0.8, 0.2, 0.0],
                experience: vec![0.9, 0.1, 0.0],
            },
            state: StateDynamics {
                baseline_strain: 1.5,
                strain_drift: 0.0,
                strain_noise: 0.3,
                detector_noise: 0.1,
            },
            streams: streams(1.4, [0.2, 0.15, 0.25], 0.4),
            demo_noise: 0.4,
            outlier_probability: 0.3,
            outlier_noise_multiplier: 2.0,
            action_bias: vec![0.8, -0.6],
        },
    ]
}

//! Synthetic scenario generator: teachers, feedback sessions, sensor
//! streams and demonstrations with a known ground-truth policy.
//!
//! Each session carries a hidden strain level. The same strain drives the
//! user-state detector readings and inflates the demonstration noise, so a
//! profile built from observable signals is informative about feedback
//! quality by construction. Outlier sessions shift the stream baselines and
//! the strain by `coupling_strength` noise units and multiply both stream and
//! demonstration noise. The generator keeps the outlier flag in
//! [`GeneratedSession`]; the [`SessionRecord`] handed to learners has no such
//! field.

mod archetype;
mod catalog;

use std::f64::consts::TAU;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use archetype::{
    default_archetypes, AttributeModel, Gaussian, StateDynamics, StreamModel, UserArchetype, AGE_REFERENCE,
    ATTRIBUTE_DIM, EDUCATION_LEVELS, EXPERIENCE_LEVELS, HEIGHT_REFERENCE,
};
pub use catalog::{SensorCatalog, SensorSpec};

use crate::error::{Error, Result};
use crate::federated::{FeedbackSample, PolicyArchitecture, PolicyModel};
use crate::lstm::ObservationSequence;
use crate::nn::{mse_loss, SimRng};

/// Width of the user-state vector: fatigue, stress, attention.
pub const STATE_DIM: usize = 3;

fn normal(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Raw attributes of one teacher, sampled once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherAttributes {
    pub age: f64,
    pub height_cm: f64,
    pub education: usize,
    pub experience: usize,
}

impl TeacherAttributes {
    /// Z-scored continuous attributes against fixed references, then one-hot categories.
    pub fn encode(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(ATTRIBUTE_DIM);
        v.push((self.age - AGE_REFERENCE.mean) / AGE_REFERENCE.std);
        v.push((self.height_cm - HEIGHT_REFERENCE.mean) / HEIGHT_REFERENCE.std);
        v.extend((0..EDUCATION_LEVELS.len()).map(|i| f64::from(u8::from(i == self.education))));
        v.extend((0..EXPERIENCE_LEVELS.len()).map(|i| f64::from(u8::from(i == self.experience))));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Teacher {
    pub id: usize,
    pub archetype: usize,
    pub attributes: TeacherAttributes,
}

/// One (node, teacher) pairing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAssignment {
    pub node: usize,
    pub teacher: usize,
    pub robot_type: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub teachers: Vec<Teacher>,
    pub assignments: Vec<NodeAssignment>,
}

/// Largest-remainder apportionment of `total` over `weights`.
fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest: Vec<usize> = (0..weights.len()).collect();
    rest.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = total - counts.iter().sum::<usize>();
    for &i in rest.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

fn sample_category(probs: &[f64], rng: &mut SimRng) -> usize {
    WeightedIndex::new(probs).expect("validated category weights").sample(rng)
}

/// Assigns archetypes in proportion to their weights, samples attributes,
/// and pairs teacher `m` with node `m % nodes`.
pub fn generate_population(
    catalog: &SensorCatalog,
    archetypes: &[UserArchetype],
    nodes: usize,
    teachers: usize,
    rng: &mut SimRng,
) -> Result<Population> {
    if archetypes.is_empty() {
        return Err(Error::Empty("archetype list"));
    }
    if nodes == 0 || teachers == 0 {
        return Err(Error::invalid("population", "node and teacher counts must be at least 1"));
    }
    catalog.validate()?;
    for a in archetypes {
        a.validate(catalog.human_sensors.len(), catalog.action_dim)?;
    }
    let weights: Vec<f64> = archetypes.iter().map(|a| a.weight).collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid("archetype", "weights sum to zero"));
    }
    let mut labels: Vec<usize> = apportion(&weights, teachers)
        .into_iter()
        .enumerate()
        .flat_map(|(a, n)| std::iter::repeat_n(a, n))
        .collect();
    labels.shuffle(rng);
    let teachers: Vec<Teacher> = labels
        .into_iter()
        .enumerate()
        .map(|(id, archetype)| {
            let attrs = &archetypes[archetype].attributes;
            let attributes = TeacherAttributes {
                age: attrs.age.mean + attrs.age.std * normal(rng),
                height_cm: attrs.height_cm.mean + attrs.height_cm.std * normal(rng),
                education: sample_category(&attrs.education, rng),
                experience: sample_category(&attrs.experience, rng),
            };
            Teacher {
                id,
                archetype,
                attributes,
            }
        })
        .collect();
    let assignments = teachers
        .iter()
        .map(|t| {
            let node = t.id % nodes;
            NodeAssignment {
                node,
                teacher: t.id,
                robot_type: catalog.robot_types[node % catalog.robot_types.len()].clone(),
            }
        })
        .collect();
    Ok(Population { teachers, assignments })
}

/// Frozen target mapping plus per-archetype action offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPolicy {
    model: PolicyModel,
    biases: Vec<Vec<f64>>,
}

impl GroundTruthPolicy {
    pub fn new(model: PolicyModel, biases: Vec<Vec<f64>>) -> Result<Self> {
        let out = model.architecture().output_dim;
        for b in &biases {
            crate::error::check_len("archetype bias", out, b.len())?;
        }
        Ok(GroundTruthPolicy { model, biases })
    }

    /// Random tanh network (linear when `hidden` is empty) with the archetypes' biases.
    pub fn generate(
        catalog: &SensorCatalog,
        archetypes: &[UserArchetype],
        hidden: Vec<usize>,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let arch = PolicyArchitecture {
            input_dim: catalog.state_dim(),
            hidden,
            output_dim: catalog.action_dim,
        };
        let model = PolicyModel::init(arch, rng)?;
        Self::new(model, archetypes.iter().map(|a| a.action_bias.clone()).collect())
    }

    pub fn model(&self) -> &PolicyModel {
        &self.model
    }

    pub fn state_dim(&self) -> usize {
        self.model.architecture().input_dim
    }

    pub fn action(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.model.act(state)
    }

    pub fn bias(&self, archetype: usize) -> Option<&[f64]> {
        self.biases.get(archetype).map(Vec::as_slice)
    }
}

/// Per-session generator settings shared by all teachers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub min_length: usize,
    pub max_length: usize,
    pub samples_per_session: usize,
    pub coupling_strength: f64,
}

impl SessionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_length < 2 || self.min_length > self.max_length {
            return Err(Error::invalid(
                "session_length",
                format!("need 2 <= min <= max, got [{}, {}]", self.min_length, self.max_length),
            ));
        }
        if self.samples_per_session == 0 {
            return Err(Error::invalid("samples_per_session", "must be at least 1"));
        }
        if !(self.coupling_strength >= 0.0 && self.coupling_strength.is_finite()) {
            return Err(Error::invalid("coupling_strength", "must be non-negative"));
        }
        Ok(())
    }
}

/// What a learner may see of one feedback session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub index: usize,
    pub length: usize,
    /// One sequence per human sensor, in catalog order.
    pub streams: Vec<ObservationSequence>,
    /// Detector readings: fatigue, stress, attention.
    pub state: Vec<f64>,
    pub samples: Vec<FeedbackSample>,
}

/// A session together with the generator's ground truth about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSession {
    pub record: SessionRecord,
    pub is_outlier: bool,
    pub strain: f64,
}

impl GeneratedSession {
    pub fn into_record(self) -> SessionRecord {
        self.record
    }
}

/// Draws one feedback session for `teacher`.
pub fn generate_session(
    teacher: &Teacher,
    archetypes: &[UserArchetype],
    catalog: &SensorCatalog,
    ground_truth: &GroundTruthPolicy,
    spec: &SessionSpec,
    index: usize,
    rng: &mut SimRng,
) -> Result<GeneratedSession> {
    spec.validate()?;
    let arch = archetypes
        .get(teacher.archetype)
        .ok_or_else(|| Error::invalid("archetype", format!("index {} out of range", teacher.archetype)))?;
    let bias = ground_truth
        .bias(teacher.archetype)
        .ok_or_else(|| Error::invalid("archetype", format!("no bias for archetype {}", teacher.archetype)))?;
    let length = rng.random_range(spec.min_length..=spec.max_length);
    let is_outlier = rng.random_bool(arch.outlier_probability);
    let c = spec.coupling_strength;
    let mult = if is_outlier { arch.outlier_noise_multiplier } else { 1.0 };

    let st = &arch.state;
    let mut strain = st.baseline_strain + st.strain_drift * index as f64 + st.strain_noise * normal(rng);
    if is_outlier {
        strain += c * st.strain_noise;
    }
    let det = st.detector_noise;
    let state = vec![
        strain + det * normal(rng),
        0.8 * strain + 0.2 + det * normal(rng),
        1.0 - 0.5 * strain + det * normal(rng),
    ];

    let phase = rng.random_range(0.0..TAU);
    let mut streams = Vec::with_capacity(catalog.human_sensors.len());
    for (k, (sensor, model)) in catalog.human_sensors.iter().zip(&arch.streams).enumerate() {
        let n = sensor.samples_for(length);
        let shift = if is_outlier { c * model.noise } else { 0.0 };
        let noise = model.noise * mult;
        let steps = (0..n)
            .map(|t| {
                (0..sensor.dim)
                    .map(|j| {
                        let angle = TAU * model.frequency * t as f64 + phase + j as f64 * TAU / 4.0;
                        model.baseline + shift + model.amplitude * angle.sin() + noise * normal(rng)
                    })
                    .collect()
            })
            .collect();
        streams.push(ObservationSequence::new(k, steps)?);
    }

    let demo_std = arch.demo_noise * (1.0 + strain.max(0.0)) * mult;
    let mut samples = Vec::with_capacity(spec.samples_per_session);
    for _ in 0..spec.samples_per_session {
        let input: Vec<f64> = (0..ground_truth.state_dim()).map(|_| normal(rng)).collect();
        let clean = ground_truth.action(&input)?;
        let target = clean
            .iter()
            .zip(bias)
            .map(|(a, b)| a + b + demo_std * normal(rng))
            .collect();
        samples.push(FeedbackSample {
            input,
            target,
            session: index,
        });
    }

    Ok(GeneratedSession {
        record: SessionRecord {
            index,
            length,
            streams,
            state,
            samples,
        },
        is_outlier,
        strain,
    })
}

/// Mean squared error of `model` against the noiseless, unbiased ground
/// truth on `n_eval` standard-normal states.
pub fn evaluate_policy(model: &PolicyModel, ground_truth: &GroundTruthPolicy, n_eval: usize, rng: &mut SimRng) -> Result<f64> {
    if n_eval == 0 {
        return Err(Error::invalid("eval_samples", "must be at least 1"));
    }
    let mut total = 0.0;
    for _ in 0..n_eval {
        let x: Vec<f64> = (0..ground_truth.state_dim()).map(|_| normal(rng)).collect();
        total += mse_loss(&model.act(&x)?, &ground_truth.action(&x)?)?.0;
    }
    Ok(total / n_eval as f64)
}

#[derive(Serialize)]
struct CorpusLine<'a> {
    node: usize,
    teacher: usize,
    session: &'a SessionRecord,
    is_outlier: bool,
    strain: f64,
}

/// Writes one JSON object per session: `node`, `teacher`, `session` (the
/// learner-visible record), and the generator-only `is_outlier` and `strain`.
pub fn export_corpus<W: Write>(out: &mut W, sessions: &[(usize, usize, GeneratedSession)]) -> std::io::Result<()> {
    for (node, teacher, s) in sessions {
        let line = CorpusLine {
            node: *node,
            teacher: *teacher,
            session: &s.record,
            is_outlier: s.is_outlier,
            strain: s.strain,
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Multi-dimensional sinusoids with random phase, frequency and length, for
/// exercising sequence autoencoders in isolation.
pub fn sinusoid_corpus(
    count: usize,
    dim: usize,
    min_len: usize,
    max_len: usize,
    rng: &mut SimRng,
) -> Result<Vec<ObservationSequence>> {
    if min_len == 0 || min_len > max_len {
        return Err(Error::invalid("length", format!("bad range [{min_len}, {max_len}]")));
    }
    (0..count)
        .map(|_| {
            let t_len = rng.random_range(min_len..=max_len);
            let phase = rng.random_range(0.0..TAU);
            let freq = rng.random_range(0.03..0.08);
            let steps = (0..t_len)
                .map(|t| {
                    (0..dim)
                        .map(|j| (TAU * freq * t as f64 + phase + j as f64 * TAU / dim as f64).sin())
                        .collect()
                })
                .collect();
            ObservationSequence::new(0, steps)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_archetype() -> UserArchetype {
        let mut a = default_archetypes().remove(0);
        a.demo_noise = 0.0;
        a.outlier_probability = 0.0;
        a.action_bias = vec![0.0; 2];
        a.state.strain_noise = 0.0;
        a.state.detector_noise = 0.0;
        for s in &mut a.streams {
            s.noise = 0.0;
        }
        a
    }

    fn spec() -> SessionSpec {
        SessionSpec {
            min_length: 10,
            max_length: 30,
            samples_per_session: 5,
            coupling_strength: 4.0,
        }
    }

    fn gt(archetypes: &[UserArchetype], hidden: Vec<usize>, seed: u64) -> GroundTruthPolicy {
        GroundTruthPolicy::generate(&SensorCatalog::default(), archetypes, hidden, &mut SimRng::from_seed(seed)).unwrap()
    }

    #[test]
    fn apportionment_is_exact() {
        assert_eq!(apportion(&[0.4, 0.4, 0.2], 10), vec![4, 4, 2]);
        assert_eq!(apportion(&[1.0, 1.0, 1.0], 4).iter().sum::<usize>(), 4);
        assert_eq!(apportion(&[0.0, 1.0], 3), vec![0, 3]);
    }

    #[test]
    fn single_teacher_single_archetype() {
        let cat = SensorCatalog::default();
        let arch = vec![quiet_archetype()];
        let pop = generate_population(&cat, &arch, 1, 1, &mut SimRng::from_seed(1)).unwrap();
        assert_eq!(pop.teachers.len(), 1);
        assert_eq!(pop.teachers[0].archetype, 0);
        assert_eq!(pop.assignments[0].node, 0);
    }

    #[test]
    fn population_is_reproducible_and_validated() {
        let cat = SensorCatalog::default();
        let arch = default_archetypes();
        let a = generate_population(&cat, &arch, 10, 10, &mut SimRng::from_seed(9)).unwrap();
        let b = generate_population(&cat, &arch, 10, 10, &mut SimRng::from_seed(9)).unwrap();
        assert_eq!(a, b);
        let deviant = a.teachers.iter().filter(|t| t.archetype == 2).count();
        assert_eq!(deviant, 2);
        assert!(matches!(
            generate_population(&cat, &[], 1, 1, &mut SimRng::from_seed(1)),
            Err(Error::Empty(_))
        ));
        assert!(generate_population(&cat, &arch, 0, 1, &mut SimRng::from_seed(1)).is_err());
    }

    #[test]
    fn teachers_share_nodes_round_robin() {
        let pop =
            generate_population(&SensorCatalog::default(), &default_archetypes(), 3, 7, &mut SimRng::from_seed(2)).unwrap();
        let nodes: Vec<usize> = pop.assignments.iter().map(|a| a.node).collect();
        assert_eq!(nodes, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn disjoint_archetypes_are_linearly_separable() {
        let mut young = quiet_archetype();
        young.attributes.age = Gaussian { mean: 25.0, std: 2.0 };
        young.weight = 1.0;
        let mut old = quiet_archetype();
        old.attributes.age = Gaussian { mean: 65.0, std: 2.0 };
        old.weight = 1.0;
        let pop =
            generate_population(&SensorCatalog::default(), &[young, old], 200, 200, &mut SimRng::from_seed(3)).unwrap();
        let (mut max_young, mut min_old) = (f64::MIN, f64::MAX);
        for t in &pop.teachers {
            let age_z = t.attributes.encode()[0];
            if t.archetype == 0 {
                max_young = max_young.max(age_z);
            } else {
                min_old = min_old.min(age_z);
            }
        }
        // A threshold between the classes separates them on the age coordinate.
        assert!(max_young < min_old);
    }

    #[test]
    fn attribute_encoding_layout() {
        let a = TeacherAttributes {
            age: 52.0,
            height_cm: 160.0,
            education: 2,
            experience: 0,
        };
        assert_eq!(a.encode(), vec![1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn noiseless_targets_equal_ground_truth() {
        let arch = vec![quiet_archetype()];
        let g = gt(&arch, vec![4], 5);
        let teacher = Teacher {
            id: 0,
            archetype: 0,
            attributes: TeacherAttributes {
                age: 30.0,
                height_cm: 170.0,
                education: 0,
                experience: 0,
            },
        };
        let s =
            generate_session(&teacher, &arch, &SensorCatalog::default(), &g, &spec(), 0, &mut SimRng::from_seed(6)).unwrap();
        assert!(!s.is_outlier);
        for sample in &s.record.samples {
            assert_eq!(sample.target, g.action(&sample.input).unwrap());
        }
    }

    #[test]
    fn stream_shapes_follow_catalog() {
        let arch = default_archetypes();
        let cat = SensorCatalog::default();
        let g = gt(&arch, vec![], 5);
        let pop = generate_population(&cat, &arch, 1, 1, &mut SimRng::from_seed(1)).unwrap();
        let s = generate_session(&pop.teachers[0], &arch, &cat, &g, &spec(), 3, &mut SimRng::from_seed(2)).unwrap();
        let r = &s.record;
        assert!((10..=30).contains(&r.length));
        assert_eq!(r.streams.len(), 3);
        for (seq, sensor) in r.streams.iter().zip(&cat.human_sensors) {
            assert_eq!(seq.dim(), sensor.dim);
            assert_eq!(seq.len(), sensor.samples_for(r.length));
        }
        assert_eq!(r.state.len(), STATE_DIM);
        assert!(r.samples.iter().all(|x| x.session == 3 && x.input.len() == 4));
    }

    #[test]
    fn certain_outliers_are_always_flagged() {
        let mut a = quiet_archetype();
        a.outlier_probability = 1.0;
        let arch = vec![a];
        let g = gt(&arch, vec![], 1);
        let t = Teacher {
            id: 0,
            archetype: 0,
            attributes: TeacherAttributes {
                age: 40.0,
                height_cm: 170.0,
                education: 1,
                experience: 1,
            },
        };
        let mut rng = SimRng::from_seed(4);
        for i in 0..20 {
            let s = generate_session(&t, &arch, &SensorCatalog::default(), &g, &spec(), i, &mut rng).unwrap();
            assert!(s.is_outlier);
        }
    }

    #[test]
    fn outlier_sessions_have_worse_demonstrations() {
        let arch = default_archetypes();
        let cat = SensorCatalog::default();
        let g = gt(&arch, vec![4], 11);
        let pop = generate_population(&cat, &arch, 10, 10, &mut SimRng::from_seed(12)).unwrap();
        let mut err = [(0.0, 0usize), (0.0, 0usize)];
        let mut rng = SimRng::from_seed(13);
        for i in 0..1000 {
            let t = &pop.teachers[i % pop.teachers.len()];
            let s = generate_session(t, &arch, &cat, &g, &spec(), i, &mut rng).unwrap();
            let bias = g.bias(t.archetype).unwrap();
            let slot = &mut err[usize::from(s.is_outlier)];
            for x in &s.record.samples {
                let clean = g.action(&x.input).unwrap();
                let e: f64 = x
                    .target
                    .iter()
                    .zip(clean.iter().zip(bias))
                    .map(|(t, (c, b))| (t - c - b).powi(2))
                    .sum();
                slot.0 += e;
                slot.1 += 1;
            }
        }
        let clean = err[0].0 / err[0].1 as f64;
        let outlier = err[1].0 / err[1].1 as f64;
        assert!(err[1].1 > 0);
        assert!(outlier > clean, "outlier {outlier} vs clean {clean}");
    }

    #[test]
    fn identical_policy_scores_zero() {
        let arch = default_archetypes();
        let g = gt(&arch, vec![], 21);
        let loss = evaluate_policy(g.model(), &g, 50, &mut SimRng::from_seed(1)).unwrap();
        assert_eq!(loss, 0.0);
        assert!(evaluate_policy(g.model(), &g, 0, &mut SimRng::from_seed(1)).is_err());
    }

    #[test]
    fn zero_policy_loss_matches_monte_carlo_second_moment() {
        let arch = default_archetypes();
        let g = gt(&arch, vec![6], 22);
        let zero = PolicyModel::from_params(
            g.model().architecture().clone(),
            &crate::nn::ParamVector::zeros(crate::nn::Parameterized::layout(g.model())),
        )
        .unwrap();
        let loss = evaluate_policy(&zero, &g, 4000, &mut SimRng::from_seed(31)).unwrap();
        // Independent estimate of E|gt(x)|^2 / dim with a different stream.
        let mut rng = SimRng::from_seed(32);
        let n = 20000;
        let mut second = 0.0;
        for _ in 0..n {
            let x: Vec<f64> = (0..4).map(|_| normal(&mut rng)).collect();
            second += g.action(&x).unwrap().iter().map(|v| v * v).sum::<f64>() / 2.0;
        }
        second /= n as f64;
        assert!(loss >= 0.0);
        assert!((loss - second).abs() < 0.1 * second, "loss {loss} vs {second}");
    }

    #[test]
    fn corpus_export_is_line_delimited() {
        let arch = default_archetypes();
        let cat = SensorCatalog::default();
        let g = gt(&arch, vec![], 1);
        let pop = generate_population(&cat, &arch, 2, 2, &mut SimRng::from_seed(1)).unwrap();
        let mut rng = SimRng::from_seed(3);
        let sessions: Vec<_> = (0..3)
            .map(|i| (0, 1, generate_session(&pop.teachers[1], &arch, &cat, &g, &spec(), i, &mut rng).unwrap()))
            .collect();
        let mut buf = Vec::new();
        export_corpus(&mut buf, &sessions).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let v: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
        assert_eq!(v["session"]["index"], 2);
        assert!(v["is_outlier"].is_boolean());
    }

    #[test]
    fn generation_is_reproducible() {
        let arch = default_archetypes();
        let cat = SensorCatalog::default();
        let g = gt(&arch, vec![3], 8);
        let pop = generate_population(&cat, &arch, 2, 2, &mut SimRng::from_seed(1)).unwrap();
        let a = generate_session(&pop.teachers[0], &arch, &cat, &g, &spec(), 0, &mut SimRng::from_seed(5)).unwrap();
        let b = generate_session(&pop.teachers[0], &arch, &cat, &g, &spec(), 0, &mut SimRng::from_seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_length_range_is_rejected() {
        let mut s = spec();
        s.min_length = 12;
        s.max_length = 11;
        assert!(s.validate().is_err());
    }
}

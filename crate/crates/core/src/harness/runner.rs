use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federated::{
    run_round, AggregationStrategy, LocalSettings, NodeState, PolicyArchitecture, PolicyModel, ProfileSettings,
    RepresentationSettings, RoundConfig, RoundReport, SharedInit, StrategyKind,
};
use crate::lstm::{SensorEncoder, StreamNormalizer};
use crate::nn::{Layout, ParamVector, Parameterized, SimRng};
use crate::profile::UserProfile;
use crate::world::{
    evaluate_policy, generate_population, generate_session, GeneratedSession, GroundTruthPolicy, Population,
    SessionRecord, ATTRIBUTE_DIM, STATE_DIM,
};

use super::checkpoint::Checkpoint;
use super::compare::compare_strategies;
use super::config::ExperimentConfig;
use super::metrics::{metrics_file_name, read_metrics, MetricsRow, MetricsWriter};

/// Everything about one seed's world that does not change during training.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ExperimentConfig,
    seed: u64,
    root: SimRng,
    population: Population,
    ground_truth: GroundTruthPolicy,
    init: SharedInit,
}

impl Scenario {
    pub fn build(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let root = SimRng::from_seed(seed);
        let s = &config.scenario;
        let population = generate_population(&s.catalog, &s.archetypes, s.nodes, s.teachers, &mut root.fork("population"))?;
        let ground_truth = GroundTruthPolicy::generate(
            &s.catalog,
            &s.archetypes,
            config.model.ground_truth_hidden.clone(),
            &mut root.fork("ground_truth"),
        )?;
        let sensor_dims: Vec<usize> = s.catalog.human_sensors.iter().map(|x| x.dim).collect();
        let init = SharedInit::generate(
            &sensor_dims,
            ATTRIBUTE_DIM,
            STATE_DIM,
            config.model.representation_dim,
            config.model.profile_hidden,
            config.model.profile_code,
            &root.fork("shared_init"),
        )?;
        Ok(Scenario {
            config: config.clone(),
            seed,
            root,
            population,
            ground_truth,
            init,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn ground_truth(&self) -> &GroundTruthPolicy {
        &self.ground_truth
    }

    pub fn shared_init(&self) -> &SharedInit {
        &self.init
    }

    /// Session `index` of `teacher`; a pure function of the seed and the two ids.
    pub fn session(&self, teacher: usize, index: usize) -> Result<GeneratedSession> {
        let t = self
            .population
            .teachers
            .get(teacher)
            .ok_or_else(|| Error::invalid("teacher", format!("no teacher {teacher}")))?;
        let s = &self.config.scenario;
        let mut rng = self
            .root
            .fork("sessions")
            .fork_indexed("teacher", teacher as u64)
            .fork_indexed("session", index as u64);
        generate_session(t, &s.archetypes, &s.catalog, &self.ground_truth, &s.session_spec(), index, &mut rng)
    }

    /// Number of sessions each teacher holds after `round` rounds.
    pub fn sessions_after(&self, round: usize) -> usize {
        self.config.scenario.initial_sessions + round * self.config.scenario.sessions_per_round
    }

    fn records(&self, teacher: usize, range: std::ops::Range<usize>) -> Result<Vec<SessionRecord>> {
        range.map(|i| self.session(teacher, i).map(GeneratedSession::into_record)).collect()
    }

    pub fn policy_architecture(&self) -> PolicyArchitecture {
        PolicyArchitecture {
            input_dim: self.config.scenario.catalog.state_dim(),
            hidden: self.config.model.policy_hidden.clone(),
            output_dim: self.config.scenario.catalog.action_dim,
        }
    }

    pub fn initial_policy(&self) -> Result<PolicyModel> {
        PolicyModel::init(self.policy_architecture(), &mut self.root.fork("policy"))
    }

    /// Test loss on the same evaluation states every time.
    pub fn evaluate(&self, model: &PolicyModel) -> Result<f64> {
        evaluate_policy(
            model,
            &self.ground_truth,
            self.config.scenario.eval_samples,
            &mut self.root.fork("evaluation"),
        )
    }

    pub fn representation_settings(&self) -> RepresentationSettings {
        let t = &self.config.training;
        RepresentationSettings {
            hidden_dim: self.config.model.representation_dim,
            epochs: t.lstm_epochs,
            learning_rate: t.lstm_learning_rate,
            clip_norm: (t.lstm_clip_norm > 0.0).then_some(t.lstm_clip_norm),
        }
    }

    pub fn profile_settings(&self) -> ProfileSettings {
        let t = &self.config.training;
        ProfileSettings {
            pretrain_epochs: t.profile_pretrain_epochs,
            refresh_epochs: t.profile_epochs,
            learning_rate: t.profile_learning_rate,
        }
    }

    pub fn round_config(&self, round: usize) -> RoundConfig {
        let t = &self.config.training;
        RoundConfig {
            global_learning_rate: t.global_learning_rate,
            participation: t.participation,
            local: LocalSettings {
                learning_rate: t.local_learning_rate,
                epochs: t.local_epochs,
                session_kappa: t.session_kappa,
                session_weighting: t.session_weighting,
            },
            profile_refresh_epochs: t.profile_epochs,
            profile_learning_rate: t.profile_learning_rate,
            profile_global_learning_rate: t.profile_global_learning_rate,
            update_global_profile: round.is_multiple_of(t.profile_refresh_every),
        }
    }

    /// Pretrains one node per teacher on its initial sessions.
    pub fn bootstrap_nodes(&self) -> Result<Vec<NodeState>> {
        let repr = self.representation_settings();
        let prof = self.profile_settings();
        let initial = self.config.scenario.initial_sessions;
        self.population
            .assignments
            .par_iter()
            .map(|a| {
                let teacher = &self.population.teachers[a.teacher];
                NodeState::bootstrap(
                    a.node,
                    a.teacher,
                    teacher.attributes.encode(),
                    self.records(a.teacher, 0..initial)?,
                    &self.init,
                    &repr,
                    &prof,
                    &self.root.fork("pretrain").fork_indexed("teacher", a.teacher as u64),
                )
            })
            .collect()
    }

    pub fn strategy(&self, kind: StrategyKind) -> Result<AggregationStrategy> {
        match kind {
            StrategyKind::Fedavg => Ok(AggregationStrategy::FedAvg),
            StrategyKind::UserWeighted => {
                AggregationStrategy::user_weighted(self.config.training.kappa, self.init.initial_profile())
            }
        }
    }
}

/// In-memory state of one (seed, strategy) run.
#[derive(Debug, Clone)]
pub struct CellRun {
    scenario: Scenario,
    kind: StrategyKind,
    strategy: AggregationStrategy,
    global: PolicyModel,
    nodes: Vec<NodeState>,
    round: usize,
}

impl CellRun {
    pub fn start(config: &ExperimentConfig, seed: u64, kind: StrategyKind) -> Result<Self> {
        let scenario = Scenario::build(config, seed)?;
        let nodes = scenario.bootstrap_nodes()?;
        Ok(CellRun {
            strategy: scenario.strategy(kind)?,
            global: scenario.initial_policy()?,
            kind,
            nodes,
            round: 0,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn strategy(&self) -> &AggregationStrategy {
        &self.strategy
    }

    pub fn global(&self) -> &PolicyModel {
        &self.global
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn test_loss(&self) -> Result<f64> {
        self.scenario.evaluate(&self.global)
    }

    /// Delivers this round's new sessions to every node, then runs the round.
    pub fn step(&mut self) -> Result<RoundReport> {
        let r = self.round + 1;
        let range = self.scenario.sessions_after(r - 1)..self.scenario.sessions_after(r);
        for node in &mut self.nodes {
            for record in self.scenario.records(node.teacher(), range.clone())? {
                node.receive_session(record)?;
            }
        }
        let config = self.scenario.round_config(r);
        let rng = self.scenario.root.fork_indexed("round", r as u64);
        let (next, report) = run_round(&self.global, &mut self.nodes, &mut self.strategy, &config, r, &rng)?;
        self.global = next;
        self.round = r;
        Ok(report)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let meta = CheckpointMeta {
            config_hash: self.scenario.config.hash(),
            seed: self.scenario.seed,
            strategy: self.kind,
            round: self.round,
            rng_key: hex::encode(self.scenario.root.key()),
            nodes: self.nodes.len(),
        };
        let mut c = Checkpoint::new();
        c.push_text("meta", toml::to_string(&meta).expect("meta serializes"));
        c.push_text("config", self.scenario.config.to_toml());
        c.push_params("global.policy", &self.global.params());
        if let Some(q) = self.strategy.global_profile() {
            c.push_params("global.profile", q.params());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            c.push_params(format!("node{i}.profile_model"), &node.profile_model().params());
            if let Some(w) = node.local_model() {
                c.push_params(format!("node{i}.local_model"), w);
            }
            for (k, enc) in node.encoders().iter().enumerate() {
                c.push_params(format!("node{i}.sensor{k}.autoencoder"), &enc.autoencoder.params());
                c.push_params(format!("node{i}.sensor{k}.normalizer"), &normalizer_params(&enc.normalizer));
            }
        }
        c
    }

    /// Rebuilds a run from a checkpoint written with `config`.
    pub fn restore(checkpoint: &Checkpoint, config: &ExperimentConfig) -> Result<Self> {
        let meta = CheckpointMeta::read(checkpoint)?;
        let hash = config.hash();
        if meta.config_hash != hash {
            return Err(Error::HashMismatch {
                checkpoint: meta.config_hash,
                config: hash,
            });
        }
        let scenario = Scenario::build(config, meta.seed)?;
        if hex::encode(scenario.root.key()) != meta.rng_key {
            return Err(Error::Integrity("random stream key does not match the seed".into()));
        }
        let count = scenario.sessions_after(meta.round);
        if meta.nodes != scenario.population.assignments.len() {
            return Err(Error::Integrity(format!(
                "checkpoint holds {} nodes, scenario has {}",
                meta.nodes,
                scenario.population.assignments.len()
            )));
        }
        let nodes = scenario
            .population
            .assignments
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut profile_model = scenario.init.profile_model.clone();
                profile_model.set_params(checkpoint.params(&format!("node{i}.profile_model"))?)?;
                let encoders = scenario
                    .init
                    .sequence_models
                    .iter()
                    .enumerate()
                    .map(|(k, start)| {
                        let mut autoencoder = start.clone();
                        autoencoder.set_params(checkpoint.params(&format!("node{i}.sensor{k}.autoencoder"))?)?;
                        let normalizer = normalizer_from(checkpoint.params(&format!("node{i}.sensor{k}.normalizer"))?)?;
                        Ok(SensorEncoder {
                            sensor: k,
                            normalizer,
                            autoencoder,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                NodeState::restore(
                    a.node,
                    a.teacher,
                    scenario.population.teachers[a.teacher].attributes.encode(),
                    scenario.records(a.teacher, 0..count)?,
                    encoders,
                    profile_model,
                    checkpoint.optional_params(&format!("node{i}.local_model"))?.cloned(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut strategy = scenario.strategy(meta.strategy)?;
        if let AggregationStrategy::UserWeighted { global_profile, .. } = &mut strategy {
            let q = checkpoint.params("global.profile")?;
            q.ensure_same_layout(global_profile.params())?;
            *global_profile = UserProfile::from_params(q.clone());
        }
        let global = scenario.initial_policy()?.with_params(checkpoint.params("global.policy")?)?;
        Ok(CellRun {
            scenario,
            kind: meta.strategy,
            strategy,
            global,
            nodes,
            round: meta.round,
        })
    }
}

fn normalizer_params(n: &StreamNormalizer) -> ParamVector {
    let d = n.mean.len();
    let layout = Layout::builder().push("mean", &[d]).push("std", &[d]).build();
    let mut v = n.mean.clone();
    v.extend(&n.std);
    ParamVector::new(layout.into(), v).expect("normalizer layout")
}

fn normalizer_from(p: &ParamVector) -> Result<StreamNormalizer> {
    let mean = p.tensor("mean").ok_or_else(|| Error::Integrity("normalizer without mean".into()))?;
    let std = p.tensor("std").ok_or_else(|| Error::Integrity("normalizer without std".into()))?;
    Ok(StreamNormalizer {
        mean: mean.to_vec(),
        std: std.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointMeta {
    config_hash: String,
    seed: u64,
    strategy: StrategyKind,
    round: usize,
    rng_key: String,
    nodes: usize,
}

impl CheckpointMeta {
    fn read(c: &Checkpoint) -> Result<Self> {
        toml::from_str(c.text("meta")?).map_err(|e| Error::Integrity(format!("bad checkpoint metadata: {e}")))
    }
}

/// Config stored inside a checkpoint file.
pub fn checkpoint_config(c: &Checkpoint) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(c.text("config")?).map_err(|e| Error::Integrity(format!("bad embedded config: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// Result of one (seed, strategy) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub seed: u64,
    pub strategy: StrategyKind,
    pub rounds_completed: usize,
    pub initial_test_loss: f64,
    pub final_test_loss: f64,
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub cells: usize,
    pub diverged: usize,
    pub mean_final_test_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub rounds: usize,
    pub cells_total: usize,
    pub cells_diverged: usize,
    pub strategies: Vec<StrategySummary>,
    pub cells: Vec<CellStatus>,
}

impl RunSummary {
    pub fn any_diverged(&self) -> bool {
        self.cells_diverged > 0
    }
}

/// Command-line level overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed_offset: u64,
    pub output_dir: Option<PathBuf>,
    pub quiet: bool,
}

impl RunOptions {
    /// Applies the overrides to a copy of `config`.
    pub fn apply(&self, config: &ExperimentConfig) -> ExperimentConfig {
        let mut c = config.clone();
        c.seeds = c.seeds.iter().map(|s| s + self.seed_offset).collect();
        if let Some(dir) = &self.output_dir {
            c.output_dir = dir.clone();
        }
        c
    }
}

/// Line-oriented log file shared by concurrent cells.
pub struct RunLog {
    file: Mutex<File>,
    quiet: bool,
}

impl RunLog {
    pub fn open(path: &Path, append: bool, quiet: bool) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(RunLog {
            file: Mutex::new(file),
            quiet,
        })
    }

    pub fn line(&self, msg: &str) {
        if !self.quiet {
            log::info!("{msg}");
        }
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        // A failed log write must not abort training; results go to other files.
        let _ = writeln!(f, "{msg}");
    }
}

pub fn status_file_name(seed: u64, strategy: StrategyKind) -> String {
    format!("status_seed{seed}_{}.toml", strategy.name())
}

pub fn checkpoint_file_name(seed: u64, strategy: StrategyKind, round: usize) -> String {
    format!("ckpt_seed{seed}_{}_r{round:04}.bin", strategy.name())
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn status_from_metrics(dir: &Path, seed: u64, kind: StrategyKind, error: Option<String>) -> Result<CellStatus> {
    let rows = read_metrics(&dir.join(metrics_file_name(seed, kind)))?;
    let first = rows.first().ok_or_else(|| Error::Integrity("metrics file has no rows".into()))?;
    let last = rows.last().expect("non-empty");
    Ok(CellStatus {
        seed,
        strategy: kind,
        rounds_completed: last.round,
        initial_test_loss: first.test_loss,
        final_test_loss: last.test_loss,
        diverged: error.is_some(),
        error,
    })
}

/// Drives `cell` up to `rounds`, appending metrics and writing checkpoints.
fn drive(cell: &mut CellRun, writer: &mut MetricsWriter, dir: &Path, log: &RunLog) -> Result<Option<String>> {
    let config = cell.scenario.config.clone();
    let (seed, kind) = (cell.scenario.seed, cell.kind);
    let every = config.training.checkpoint_every;
    while cell.round < config.training.rounds {
        let started = Instant::now();
        let report = match cell.step() {
            Ok(r) => r,
            Err(e @ Error::Divergence { .. }) => {
                let msg = format!("round {}: {e}", cell.round + 1);
                log.line(&format!("seed {seed} {kind}: diverged at {msg}"));
                return Ok(Some(msg));
            }
            Err(e) => return Err(e),
        };
        let loss = cell.test_loss()?;
        if !loss.is_finite() {
            let msg = format!("round {}: test loss {loss}", cell.round);
            log.line(&format!("seed {seed} {kind}: diverged at {msg}"));
            return Ok(Some(msg));
        }
        let ms = started.elapsed().as_millis() as u64;
        writer.append(&MetricsRow::from_report(seed, kind, &report, loss, ms))?;
        if every > 0 && cell.round.is_multiple_of(every) && cell.round < config.training.rounds {
            cell.checkpoint()
                .save(&dir.join(checkpoint_file_name(seed, kind, cell.round)))?;
        }
    }
    cell.checkpoint()
        .save(&dir.join(checkpoint_file_name(seed, kind, cell.round)))?;
    Ok(None)
}

fn run_cell(config: &ExperimentConfig, seed: u64, kind: StrategyKind, log: &RunLog) -> Result<CellStatus> {
    let dir = &config.output_dir;
    log.line(&format!("seed {seed} {kind}: pretraining"));
    let mut cell = CellRun::start(config, seed, kind)?;
    let mut writer = MetricsWriter::create(&dir.join(metrics_file_name(seed, kind)))?;
    writer.append(&MetricsRow::initial(seed, kind, cell.test_loss()?))?;
    let error = drive(&mut cell, &mut writer, dir, log)?;
    let status = status_from_metrics(dir, seed, kind, error)?;
    write_toml(&dir.join(status_file_name(seed, kind)), &status)?;
    log.line(&format!(
        "seed {seed} {kind}: finished round {} with test loss {}",
        status.rounds_completed, status.final_test_loss
    ));
    Ok(status)
}

/// Collects the status files of every configured cell into `summary.toml`.
pub fn write_summary(config: &ExperimentConfig) -> Result<RunSummary> {
    let dir = &config.output_dir;
    let mut cells = Vec::new();
    for &kind in &config.strategies {
        for &seed in &config.seeds {
            let path = dir.join(status_file_name(seed, kind));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let status: CellStatus =
                toml::from_str(&text).map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
            cells.push(status);
        }
    }
    let strategies = config
        .strategies
        .iter()
        .map(|&kind| {
            let mine: Vec<&CellStatus> = cells.iter().filter(|c| c.strategy == kind).collect();
            StrategySummary {
                strategy: kind,
                cells: mine.len(),
                diverged: mine.iter().filter(|c| c.diverged).count(),
                mean_final_test_loss: mine.iter().map(|c| c.final_test_loss).sum::<f64>() / mine.len() as f64,
            }
        })
        .collect();
    let summary = RunSummary {
        config_hash: config.hash(),
        rounds: config.training.rounds,
        cells_total: cells.len(),
        cells_diverged: cells.iter().filter(|c| c.diverged).count(),
        strategies,
        cells,
    };
    write_toml(&dir.join("summary.toml"), &summary)?;
    Ok(summary)
}

fn write_comparison(config: &ExperimentConfig, log: &RunLog) -> Result<()> {
    match compare_strategies(&config.output_dir) {
        Ok(report) => write_toml(&config.output_dir.join("comparison.toml"), &report),
        Err(Error::Precondition(msg)) => {
            log.line(&format!("comparison skipped: {msg}"));
            Ok(())
        }
        Err(e) => Err(e),
    }
}

/// Runs every (seed, strategy) cell of `config` and writes all artifacts.
/// `defaulted` lists fields that took default values; they are echoed to the log.
pub fn run_experiment(config: &ExperimentConfig, defaulted: &[String], options: &RunOptions) -> Result<RunSummary> {
    let config = options.apply(config);
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let log = RunLog::open(&dir.join("run.log"), false, options.quiet)?;
    log.line(&format!("config hash {}", config.hash()));
    let defaults = toml::Table::try_from(&config).expect("config serializes");
    for field in defaulted {
        let value = field
            .split('.')
            .try_fold(toml::Value::Table(defaults.clone()), |v, key| v.get(key).cloned());
        match value {
            Some(toml::Value::Array(a)) if a.iter().any(|x| x.is_table()) => {
                log.line(&format!("default {field} = <{} entries>", a.len()))
            }
            Some(v) => log.line(&format!("default {field} = {v}")),
            None => log.line(&format!("default {field}")),
        }
    }
    let cells: Vec<(u64, StrategyKind)> = config
        .seeds
        .iter()
        .flat_map(|&s| config.strategies.iter().map(move |&k| (s, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(seed, kind)| run_cell(&config, seed, kind, &log))
        .collect::<Result<Vec<_>>>()?;
    let summary = write_summary(&config)?;
    write_comparison(&config, &log)?;
    Ok(summary)
}

/// Continues the cell stored in `checkpoint` up to the configured round
/// count. Without an explicit `config` the embedded one is used.
pub fn resume(checkpoint: &Path, config: Option<&ExperimentConfig>, options: &RunOptions) -> Result<RunSummary> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let config = match config {
        Some(c) => options.apply(c),
        None => {
            let mut c = checkpoint_config(&ckpt)?;
            if let Some(dir) = &options.output_dir {
                c.output_dir = dir.clone();
            }
            c
        }
    };
    config.validate()?;
    let mut cell = CellRun::restore(&ckpt, &config)?;
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let log = RunLog::open(&dir.join("run.log"), true, options.quiet)?;
    let (seed, kind) = (cell.scenario.seed, cell.kind);
    log.line(&format!(
        "seed {seed} {kind}: resuming from round {} toward {}",
        cell.round, config.training.rounds
    ));
    let metrics = dir.join(metrics_file_name(seed, kind));
    let mut writer = MetricsWriter::truncate_after(&metrics, cell.round)?;
    let error = drive(&mut cell, &mut writer, &dir, &log)?;
    let status = status_from_metrics(&dir, seed, kind, error)?;
    write_toml(&dir.join(status_file_name(seed, kind)), &status)?;
    let summary = write_summary(&config)?;
    write_comparison(&config, &log)?;
    Ok(summary)
}

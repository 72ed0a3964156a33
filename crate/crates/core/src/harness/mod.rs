//! Experiment orchestration: configuration, (seed, strategy) grid runs,
//! per-round metrics, checkpoints with bit-exact resume, and strategy
//! comparison reports.
//!
//! Output directory layout:
//!
//! | file | content |
//! |------|---------|
//! | `run.log` | progress lines and the defaulted config fields |
//! | `metrics_seed{S}_{strategy}.csv` | one row per round, round 0 first |
//! | `status_seed{S}_{strategy}.toml` | outcome of one cell |
//! | `ckpt_seed{S}_{strategy}_r{RRRR}.bin` | checkpoints |
//! | `summary.toml` | config hash and all cell outcomes |
//! | `comparison.toml` | per-strategy statistics over seeds |

mod checkpoint;
mod compare;
mod config;
mod metrics;
mod runner;

pub use checkpoint::{Checkpoint, Section};
pub use compare::{compare_cells, compare_strategies, ComparisonReport, StrategyStats};
pub use config::{load_config, parse_config, ExperimentConfig, ModelConfig, ScenarioConfig, TrainingConfig};
pub use metrics::{format_shares, metrics_file_name, parse_shares, read_metrics, MetricsRow, MetricsWriter};
pub use runner::{
    checkpoint_config, checkpoint_file_name, resume, run_experiment, status_file_name, write_summary, CellRun,
    CellStatus, RunLog, RunOptions, RunSummary, Scenario, StrategySummary,
};

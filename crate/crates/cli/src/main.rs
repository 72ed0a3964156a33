//! `fedlfd` command-line entry point.
//!
//! Exit status: 0 on success, 1 for configuration problems (including a
//! checkpoint that belongs to a different config and comparisons without
//! enough data), 2 when at least one cell diverged (results are still
//! written), 3 for I/O and checkpoint integrity failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedlfd_core::harness::{compare_strategies, load_config, resume, run_experiment, RunOptions, RunSummary};
use fedlfd_core::Error;

#[derive(Debug, Parser)]
#[command(name = "fedlfd", version, about = "Federated learning-from-demonstration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (seed, strategy) cell of an experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunFlags,
    },
    /// Continue a cell from one of its checkpoints.
    Resume {
        checkpoint: PathBuf,
        /// Config to continue with; defaults to the one stored in the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        opts: RunFlags,
    },
    /// Compare strategies from the metrics files in a results directory.
    Compare {
        dir: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and validate a config, then print its hash.
    Validate {
        config: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Added to every seed in the config.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(long)]
    quiet: bool,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed_offset: self.seed_offset,
            output_dir: self.out.clone(),
            quiet: self.quiet,
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ConfigParse(_) | Error::ConfigValidation { .. } | Error::HashMismatch { .. } | Error::Precondition(_) => {
            EXIT_CONFIG
        }
        Error::Io { .. } | Error::Integrity(_) => EXIT_IO,
        Error::Divergence { .. } => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

fn init_logging(quiet: bool) {
    let level = if quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn print_summary(summary: &RunSummary, dir: &Path) -> u8 {
    println!("config hash {}", summary.config_hash);
    for s in &summary.strategies {
        println!(
            "{:<14} cells {:>3}  diverged {:>3}  mean final test loss {:.6}",
            s.strategy.name(),
            s.cells,
            s.diverged,
            s.mean_final_test_loss
        );
    }
    println!("results in {}", dir.display());
    if summary.any_diverged() {
        for c in summary.cells.iter().filter(|c| c.diverged) {
            eprintln!(
                "seed {} {} diverged: {}",
                c.seed,
                c.strategy.name(),
                c.error.as_deref().unwrap_or("non-finite loss")
            );
        }
        EXIT_DIVERGED
    } else {
        0
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { config, opts } => {
            let (cfg, defaulted) = load_config(&config)?;
            let options = opts.options();
            let dir = options.apply(&cfg).output_dir;
            let summary = run_experiment(&cfg, &defaulted, &options)?;
            Ok(print_summary(&summary, &dir))
        }
        Command::Resume { checkpoint, config, opts } => {
            let cfg = config.as_deref().map(load_config).transpose()?.map(|(c, _)| c);
            let options = opts.options();
            let summary = resume(&checkpoint, cfg.as_ref(), &options)?;
            let dir = match (&options.output_dir, &cfg) {
                (Some(d), _) => d.clone(),
                (None, Some(c)) => c.output_dir.clone(),
                (None, None) => checkpoint.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            Ok(print_summary(&summary, &dir))
        }
        Command::Compare { dir, .. } => {
            let report = compare_strategies(&dir)?;
            let path = dir.join("comparison.toml");
            std::fs::write(&path, report.to_toml()).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            println!("ranking: {}", report.ranking.join(" > "));
            for s in &report.strategies {
                println!(
                    "{:<14} wins {:>3}/{}  final loss {:.6} ± {:.6}",
                    s.strategy,
                    s.wins,
                    report.seeds.len(),
                    s.mean_final_loss,
                    s.std_final_loss
                );
            }
            println!("ties {}; report written to {}", report.ties, path.display());
            Ok(0)
        }
        Command::Validate { config, .. } => {
            let (cfg, defaulted) = load_config(&config)?;
            println!("config hash {}", cfg.hash());
            for field in &defaulted {
                println!("default {field}");
            }
            println!("{} ok", config.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        Command::Run { opts, .. } | Command::Resume { opts, .. } => opts.quiet,
        Command::Compare { quiet, .. } | Command::Validate { quiet, .. } => *quiet,
    };
    init_logging(quiet);
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

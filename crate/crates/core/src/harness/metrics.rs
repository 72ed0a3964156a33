use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federated::{RoundReport, StrategyKind, UserShare};

/// One line of a per-cell metrics file. Round 0 describes the initial model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub strategy: String,
    pub round: usize,
    pub participants: usize,
    pub test_loss: f64,
    pub mean_local_loss: Option<f64>,
    pub gamma_norm: Option<f64>,
    /// `node-teacher:share` pairs separated by `;`, user weighting only.
    pub shares: String,
    /// Always the last column, so it can be cut off for comparisons.
    pub wall_time_ms: u64,
}

impl MetricsRow {
    pub fn initial(seed: u64, strategy: StrategyKind, test_loss: f64) -> Self {
        MetricsRow {
            seed,
            strategy: strategy.name().to_owned(),
            round: 0,
            participants: 0,
            test_loss,
            mean_local_loss: None,
            gamma_norm: None,
            shares: String::new(),
            wall_time_ms: 0,
        }
    }

    pub fn from_report(seed: u64, strategy: StrategyKind, report: &RoundReport, test_loss: f64, wall_time_ms: u64) -> Self {
        MetricsRow {
            seed,
            strategy: strategy.name().to_owned(),
            round: report.round,
            participants: report.participants.len(),
            test_loss,
            mean_local_loss: report.mean_local_loss(),
            gamma_norm: report.gamma_norm,
            shares: report.shares.as_deref().map(format_shares).unwrap_or_default(),
            wall_time_ms,
        }
    }

    pub fn parsed_shares(&self) -> Result<Vec<(usize, usize, f64)>> {
        parse_shares(&self.shares)
    }
}

pub fn format_shares(shares: &[UserShare]) -> String {
    shares
        .iter()
        .map(|s| format!("{}-{}:{}", s.node, s.teacher, s.share))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_shares(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|item| {
            let bad = || Error::Integrity(format!("malformed share `{item}`"));
            let (ids, share) = item.split_once(':').ok_or_else(bad)?;
            let (node, teacher) = ids.split_once('-').ok_or_else(bad)?;
            Ok((
                node.parse().map_err(|_| bad())?,
                teacher.parse().map_err(|_| bad())?,
                share.parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

pub fn metrics_file_name(seed: u64, strategy: StrategyKind) -> String {
    format!("metrics_seed{seed}_{}.csv", strategy.name())
}

/// Append-only writer that flushes after every row.
pub struct MetricsWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    /// Starts a fresh file with a header row.
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(MetricsWriter {
            path: path.to_owned(),
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(file),
        })
    }

    /// Keeps the header and the rows with `round <= last_round`, then
    /// continues appending after them.
    pub fn truncate_after(path: &Path, last_round: usize) -> Result<Self> {
        let kept: Vec<MetricsRow> = read_metrics(path)?
            .into_iter()
            .filter(|r| r.round <= last_round)
            .collect();
        let mut w = Self::create(path)?;
        for r in &kept {
            w.append(r)?;
        }
        Ok(w)
    }

    pub fn append(&mut self, row: &MetricsRow) -> Result<()> {
        let path = &self.path;
        self.inner
            .serialize(row)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        self.inner.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let file = OpenOptions::new().read(true).open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Integrity(format!("{}: {e}", path.display()))))
        .collect()
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::{read_metrics, MetricsRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: String,
    pub seeds: Vec<u64>,
    pub final_losses: Vec<f64>,
    pub mean_final_loss: f64,
    pub std_final_loss: f64,
    pub min_final_loss: f64,
    pub max_final_loss: f64,
    /// Seeds on which this strategy had the strictly lowest final loss.
    pub wins: usize,
    /// Mean test loss over seeds for each round index.
    pub mean_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Strategy names, best first (lower mean final loss, then more wins).
    pub ranking: Vec<String>,
    pub ties: usize,
    pub seeds: Vec<u64>,
    pub strategies: Vec<StrategyStats>,
}

impl ComparisonReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

/// Builds a report from `metrics_seed*_*.csv` files in `dir`.
pub fn compare_strategies(dir: &Path) -> Result<ComparisonReport> {
    let mut cells: BTreeMap<String, BTreeMap<u64, Vec<MetricsRow>>> = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with("metrics_seed") && name.ends_with(".csv") {
            paths.push(path);
        }
    }
    paths.sort();
    for path in paths {
        let rows = read_metrics(&path)?;
        let first = rows
            .first()
            .ok_or_else(|| Error::Precondition(format!("{} has no rows", path.display())))?;
        cells
            .entry(first.strategy.clone())
            .or_default()
            .insert(first.seed, rows);
    }
    compare_cells(&cells)
}

/// Same as [`compare_strategies`] on already-loaded rows, keyed by strategy then seed.
pub fn compare_cells(cells: &BTreeMap<String, BTreeMap<u64, Vec<MetricsRow>>>) -> Result<ComparisonReport> {
    if cells.len() < 2 {
        return Err(Error::Precondition(format!(
            "comparison needs at least two strategies, found {}",
            cells.len()
        )));
    }
    let seeds: Vec<u64> = cells.values().next().expect("non-empty").keys().copied().collect();
    for (strategy, by_seed) in cells {
        let have: Vec<u64> = by_seed.keys().copied().collect();
        if have != seeds {
            return Err(Error::Precondition(format!(
                "strategy `{strategy}` has seeds {have:?}, expected {seeds:?}"
            )));
        }
    }
    if seeds.len() < 2 {
        return Err(Error::Precondition(format!(
            "comparison needs at least two seeds, found {}",
            seeds.len()
        )));
    }

    let finals: BTreeMap<&str, Vec<f64>> = cells
        .iter()
        .map(|(s, by_seed)| {
            let v = by_seed.values().map(|rows| rows.last().map_or(f64::NAN, |r| r.test_loss)).collect();
            (s.as_str(), v)
        })
        .collect();

    let mut wins: BTreeMap<&str, usize> = finals.keys().map(|s| (*s, 0)).collect();
    let mut ties = 0;
    for i in 0..seeds.len() {
        let best = finals.values().map(|v| v[i]).fold(f64::INFINITY, f64::min);
        let leaders: Vec<&str> = finals.iter().filter(|(_, v)| v[i] == best).map(|(s, _)| *s).collect();
        if leaders.len() == 1 {
            *wins.get_mut(leaders[0]).expect("known strategy") += 1;
        } else {
            ties += 1;
        }
    }

    let mut strategies: Vec<StrategyStats> = cells
        .iter()
        .map(|(strategy, by_seed)| {
            let fl = &finals[strategy.as_str()];
            let n = fl.len() as f64;
            let mean = fl.iter().sum::<f64>() / n;
            let var = fl.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let rounds = by_seed.values().map(Vec::len).min().unwrap_or(0);
            let mean_curve = (0..rounds)
                .map(|r| by_seed.values().map(|rows| rows[r].test_loss).sum::<f64>() / n)
                .collect();
            StrategyStats {
                strategy: strategy.clone(),
                seeds: seeds.clone(),
                final_losses: fl.clone(),
                mean_final_loss: mean,
                std_final_loss: var.sqrt(),
                min_final_loss: fl.iter().copied().fold(f64::INFINITY, f64::min),
                max_final_loss: fl.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                wins: wins[strategy.as_str()],
                mean_curve,
            }
        })
        .collect();
    strategies.sort_by(|a, b| {
        a.mean_final_loss
            .total_cmp(&b.mean_final_loss)
            .then(b.wins.cmp(&a.wins))
            .then(a.strategy.cmp(&b.strategy))
    });
    Ok(ComparisonReport {
        ranking: strategies.iter().map(|s| s.strategy.clone()).collect(),
        ties,
        seeds,
        strategies,
    })
}

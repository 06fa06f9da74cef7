//! CSV records, summaries and cross-file rankings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const CYCLE_HEADER: [&str; 6] = [
    "run_id",
    "cycle",
    "step_number",
    "exploration_rate",
    "fitness_evals",
    "compute_time_s",
];

pub const SUMMARY_HEADER: [&str; 11] = [
    "optimizer",
    "map",
    "strategy",
    "pop_size",
    "runs",
    "mean_rate",
    "min_rate",
    "max_rate",
    "mean_steps",
    "mean_fitness_evals",
    "mean_compute_time_s",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleCsvRow {
    pub run_id: String,
    pub cycle: usize,
    pub step_number: u32,
    pub exploration_rate: f64,
    pub fitness_evals: usize,
    pub compute_time_s: f64,
}

/// Totals for one run, derived from its cycle rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunTotals {
    pub final_rate: f64,
    /// Steps summed over robots.
    pub steps: u32,
    pub fitness_evals: usize,
    pub compute_time_s: f64,
}

impl RunTotals {
    /// Rows may hold several robots (distinct `run_id`s) of the same run.
    pub fn from_rows(rows: &[CycleCsvRow]) -> RunTotals {
        let mut steps: BTreeMap<&str, u32> = BTreeMap::new();
        let mut t = RunTotals {
            final_rate: 0.0,
            steps: 0,
            fitness_evals: 0,
            compute_time_s: 0.0,
        };
        for r in rows {
            t.final_rate = t.final_rate.max(r.exploration_rate);
            t.fitness_evals += r.fitness_evals;
            t.compute_time_s += r.compute_time_s;
            let s = steps.entry(&r.run_id).or_default();
            *s = (*s).max(r.step_number);
        }
        t.steps = steps.values().sum();
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub optimizer: String,
    pub map: String,
    pub strategy: String,
    pub pop_size: usize,
    pub runs: usize,
    pub mean_rate: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    pub mean_steps: f64,
    pub mean_fitness_evals: f64,
    pub mean_compute_time_s: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl SummaryRow {
    pub fn from_runs(optimizer: &str, map: &str, strategy: &str, pop_size: usize, runs: &[RunTotals]) -> SummaryRow {
        SummaryRow {
            optimizer: optimizer.to_string(),
            map: map.to_string(),
            strategy: strategy.to_string(),
            pop_size,
            runs: runs.len(),
            mean_rate: mean(runs.iter().map(|r| r.final_rate)),
            min_rate: runs.iter().map(|r| r.final_rate).fold(f64::INFINITY, f64::min),
            max_rate: runs.iter().map(|r| r.final_rate).fold(f64::NEG_INFINITY, f64::max),
            mean_steps: mean(runs.iter().map(|r| r.steps as f64)),
            mean_fitness_evals: mean(runs.iter().map(|r| r.fitness_evals as f64)),
            mean_compute_time_s: mean(runs.iter().map(|r| r.compute_time_s)),
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV whose header must equal `header` exactly.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(BenchError::Schema {
            path: path.to_path_buf(),
            message: format!("expected columns [{}], found [{}]", header.join(", "), found.join(", ")),
        });
    }
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub map: String,
    pub rank: usize,
    pub optimizer: String,
    pub strategy: String,
    pub pop_size: usize,
    pub mean_rate: f64,
    pub mean_compute_time_s: f64,
}

/// Ranks summary rows per map by mean exploration rate, highest first.
/// Equal means fall back to the optimizer name, then strategy and population.
pub fn rank(rows: &[SummaryRow]) -> Vec<RankRow> {
    let mut sorted: Vec<&SummaryRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.map
            .cmp(&b.map)
            .then(b.mean_rate.total_cmp(&a.mean_rate))
            .then_with(|| a.optimizer.cmp(&b.optimizer))
            .then_with(|| a.strategy.cmp(&b.strategy))
            .then(a.pop_size.cmp(&b.pop_size))
    });
    let mut out: Vec<RankRow> = Vec::with_capacity(sorted.len());
    for r in sorted {
        let rank = match out.last() {
            Some(prev) if prev.map == r.map => prev.rank + 1,
            _ => 1,
        };
        out.push(RankRow {
            map: r.map.clone(),
            rank,
            optimizer: r.optimizer.clone(),
            strategy: r.strategy.clone(),
            pop_size: r.pop_size,
            mean_rate: r.mean_rate,
            mean_compute_time_s: r.mean_compute_time_s,
        });
    }
    out
}

/// Loads summary CSVs and ranks their rows together.
pub fn compare<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<RankRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_csv::<SummaryRow>(p.as_ref(), &SUMMARY_HEADER)?);
    }
    Ok(rank(&rows))
}

/// Plain-text table of a ranking.
pub fn format_ranking(rows: &[RankRow]) -> String {
    let mut s = format!(
        "{:<16} {:>4}  {:<8} {:<12} {:>4} {:>10} {:>14}\n",
        "map", "rank", "optimizer", "strategy", "pop", "mean_rate", "compute_s"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<16} {:>4}  {:<8} {:<12} {:>4} {:>10.2} {:>14.4}\n",
            r.map, r.rank, r.optimizer, r.strategy, r.pop_size, r.mean_rate, r.mean_compute_time_s
        ));
    }
    s
}

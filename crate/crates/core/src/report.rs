//! Per-run and aggregate CSV rows.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RUN_COLUMNS: [&str; 8] =
    ["run_id", "strategy", "seed", "timestep", "success_rate", "mean_return", "actor_loss", "critic_loss"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("no rows to report")]
    Empty,
}

/// One evaluation row of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: String,
    pub strategy: String,
    pub seed: u64,
    pub timestep: u64,
    pub success_rate: f64,
    pub mean_return: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
}

/// A run row plus the envelope of its (strategy, timestep) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub run_id: String,
    pub strategy: String,
    pub seed: u64,
    pub timestep: u64,
    pub success_rate: f64,
    pub mean_return: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_success: f64,
    pub min_success: f64,
    pub max_success: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub timestep: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub runs: usize,
}

/// Mean and min-max of `success_rate` per strategy and timestep, sorted by
/// strategy name then timestep.
pub fn envelopes(rows: &[RunRow]) -> BTreeMap<String, Vec<Envelope>> {
    let mut groups: BTreeMap<String, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.strategy.clone()).or_default().entry(r.timestep).or_default().push(r.success_rate);
    }
    groups
        .into_iter()
        .map(|(strategy, by_step)| {
            let env = by_step
                .into_iter()
                .map(|(timestep, vals)| Envelope {
                    timestep,
                    mean: vals.iter().sum::<f64>() / vals.len() as f64,
                    min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                    max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    runs: vals.len(),
                })
                .collect();
            (strategy, env)
        })
        .collect()
}

pub fn aggregate(rows: &[RunRow]) -> Vec<AggregateRow> {
    let env = envelopes(rows);
    rows.iter()
        .map(|r| {
            let e = env[&r.strategy].iter().find(|e| e.timestep == r.timestep).expect("group exists");
            AggregateRow {
                run_id: r.run_id.clone(),
                strategy: r.strategy.clone(),
                seed: r.seed,
                timestep: r.timestep,
                success_rate: r.success_rate,
                mean_return: r.mean_return,
                actor_loss: r.actor_loss,
                critic_loss: r.critic_loss,
                mean_success: e.mean,
                min_success: e.min,
                max_success: e.max,
            }
        })
        .collect()
}

/// Trapezoidal area between the success curve and 1, normalized by the time
/// span. Lower means faster learning.
pub fn area_above_curve(points: &[(u64, f64)]) -> f64 {
    if points.len() < 2 {
        return points.first().map_or(0.0, |p| 1.0 - p.1);
    }
    let span = (points[points.len() - 1].0 - points[0].0) as f64;
    let area: f64 = points
        .windows(2)
        .map(|w| {
            let dt = (w[1].0 - w[0].0) as f64;
            dt * ((1.0 - w[0].1) + (1.0 - w[1].1)) / 2.0
        })
        .sum();
    area / span
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Incremental per-run CSV writer; every row is flushed so a crashed run
/// leaves a readable prefix behind.
pub struct RunCsv<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> RunCsv<W> {
    pub fn new(inner: W) -> Self {
        RunCsv { writer: csv::Writer::from_writer(inner) }
    }

    pub fn push(&mut self, row: &RunRow) -> Result<(), ReportError> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Reads run rows from any CSV that has at least the per-run columns.
pub fn read_run_rows(path: &Path) -> Result<Vec<RunRow>, ReportError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    for column in RUN_COLUMNS {
        if !headers.iter().any(|h| h == column) {
            return Err(ReportError::MissingColumn { path: path.display().to_string(), column: column.to_string() });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: RunRow = record.deserialize(Some(&headers))?;
        rows.push(row);
    }
    Ok(rows)
}

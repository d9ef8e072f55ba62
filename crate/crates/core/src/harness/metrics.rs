//! Per-seed metric CSVs and their cross-seed aggregate.
//!
//! Per-seed file: a `# multigoal-metrics v1` line, then the columns
//! `seed,epoch,episodes_seen,test_success_rate,mean_test_return`.
//! Aggregate file: a `# multigoal-aggregate v1` line, then
//! `epoch,episodes_seen,seeds,success_mean,success_std,return_mean,return_std`
//! with population standard deviations.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::EpochStats;
use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "# multigoal-metrics v1";
pub const METRICS_COLUMNS: &str = "seed,epoch,episodes_seen,test_success_rate,mean_test_return";
pub const AGGREGATE_HEADER: &str = "# multigoal-aggregate v1";
pub const AGGREGATE_COLUMNS: &str =
    "epoch,episodes_seen,seeds,success_mean,success_std,return_mean,return_std";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub epoch: usize,
    pub episodes_seen: u64,
    pub test_success_rate: f64,
    pub mean_test_return: f64,
}

impl MetricsRow {
    pub fn from_stats(seed: u64, s: &EpochStats) -> MetricsRow {
        MetricsRow {
            seed,
            epoch: s.epoch,
            episodes_seen: s.episodes_seen,
            test_success_rate: s.test_success_rate,
            mean_test_return: s.mean_test_return,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub epoch: usize,
    pub episodes_seen: u64,
    pub seeds: usize,
    pub success_mean: f64,
    pub success_std: f64,
    pub return_mean: f64,
    pub return_std: f64,
}

pub fn format_metrics(rows: &[MetricsRow]) -> String {
    let mut s = format!("{METRICS_HEADER}\n{METRICS_COLUMNS}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.seed, r.epoch, r.episodes_seen, r.test_success_rate, r.mean_test_return
        )
        .expect("writing to a String");
    }
    s
}

fn body<'a>(
    text: &'a str,
    header: &str,
    columns: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    let bad = |what: &str, got: Option<(usize, &str)>| {
        Error::Format(format!(
            "expected {what}, found '{}'",
            got.map_or("", |l| l.1)
        ))
    };
    match lines.next() {
        Some((_, h)) if h == header => {}
        other => return Err(bad(header, other)),
    }
    match lines.next() {
        Some((_, c)) if c == columns => {}
        other => return Err(bad(columns, other)),
    }
    Ok(lines.filter(|(_, l)| !l.is_empty()))
}

fn field<T: std::str::FromStr>(line: usize, name: &str, v: Option<&str>) -> Result<T> {
    v.and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format(format!("line {}: bad or missing {name}", line + 1)))
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>> {
    body(text, METRICS_HEADER, METRICS_COLUMNS)?
        .map(|(i, l)| {
            let mut f = l.split(',');
            let row = MetricsRow {
                seed: field(i, "seed", f.next())?,
                epoch: field(i, "epoch", f.next())?,
                episodes_seen: field(i, "episodes_seen", f.next())?,
                test_success_rate: field(i, "test_success_rate", f.next())?,
                mean_test_return: field(i, "mean_test_return", f.next())?,
            };
            if f.next().is_some() {
                return Err(Error::Format(format!("line {}: too many fields", i + 1)));
            }
            Ok(row)
        })
        .collect()
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    Ok(std::fs::write(path, format_metrics(rows))?)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    parse_metrics(&std::fs::read_to_string(path)?)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Mean and population standard deviation across runs, epoch by epoch, over
/// the epochs every run reached.
pub fn aggregate(runs: &[Vec<MetricsRow>]) -> Vec<AggregateRow> {
    let epochs = runs.iter().map(Vec::len).min().unwrap_or(0);
    (0..epochs)
        .map(|e| {
            let sr: Vec<f64> = runs.iter().map(|r| r[e].test_success_rate).collect();
            let ret: Vec<f64> = runs.iter().map(|r| r[e].mean_test_return).collect();
            let (success_mean, success_std) = mean_std(&sr);
            let (return_mean, return_std) = mean_std(&ret);
            AggregateRow {
                epoch: runs[0][e].epoch,
                episodes_seen: runs[0][e].episodes_seen,
                seeds: runs.len(),
                success_mean,
                success_std,
                return_mean,
                return_std,
            }
        })
        .collect()
}

pub fn format_aggregate(rows: &[AggregateRow]) -> String {
    let mut s = format!("{AGGREGATE_HEADER}\n{AGGREGATE_COLUMNS}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.epoch,
            r.episodes_seen,
            r.seeds,
            r.success_mean,
            r.success_std,
            r.return_mean,
            r.return_std
        )
        .expect("writing to a String");
    }
    s
}

pub fn parse_aggregate(text: &str) -> Result<Vec<AggregateRow>> {
    body(text, AGGREGATE_HEADER, AGGREGATE_COLUMNS)?
        .map(|(i, l)| {
            let mut f = l.split(',');
            Ok(AggregateRow {
                epoch: field(i, "epoch", f.next())?,
                episodes_seen: field(i, "episodes_seen", f.next())?,
                seeds: field(i, "seeds", f.next())?,
                success_mean: field(i, "success_mean", f.next())?,
                success_std: field(i, "success_std", f.next())?,
                return_mean: field(i, "return_mean", f.next())?,
                return_std: field(i, "return_std", f.next())?,
            })
        })
        .collect()
}

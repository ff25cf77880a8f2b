//! Lifetime and throughput summaries, and multi-seed aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::RoundRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no round records to summarize")]
    NoRecords,
    #[error("no summaries to aggregate")]
    NoSummaries,
    #[error(
        "round records are not consecutive from 1 (found round {found} at position {position})"
    )]
    NonConsecutive { position: usize, found: u64 },
}

/// First/half/last node death rounds and final message totals of one run.
///
/// When the run stopped with survivors, unreached death rounds are reported
/// as `rounds_simulated` and `censored` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub fnd: u64,
    pub hnd: u64,
    pub lnd: u64,
    pub total_msgs_to_bs: u64,
    pub total_msgs_to_ch: u64,
    pub total_relayed: u64,
    pub rounds_simulated: u64,
    pub censored: bool,
}

impl Summary {
    /// Summary of a run that produced no rounds. If every node was dead at
    /// deployment all three death rounds are 0.
    pub fn without_rounds(all_dead: bool) -> Self {
        Self {
            fnd: 0,
            hnd: 0,
            lnd: 0,
            total_msgs_to_bs: 0,
            total_msgs_to_ch: 0,
            total_relayed: 0,
            rounds_simulated: 0,
            censored: !all_dead,
        }
    }
}

pub fn summarize(records: &[RoundRecord], deployed: usize) -> Result<Summary, MetricsError> {
    let last = records.last().ok_or(MetricsError::NoRecords)?;
    for (i, rec) in records.iter().enumerate() {
        if rec.round != i as u64 + 1 {
            return Err(MetricsError::NonConsecutive {
                position: i,
                found: rec.round,
            });
        }
    }
    let half = deployed / 2;
    let first_round = |pred: &dyn Fn(usize) -> bool| {
        records
            .iter()
            .find(|r| pred(r.alive_total()))
            .map(|r| r.round)
    };
    let fnd = first_round(&|alive| alive < deployed);
    let hnd = first_round(&|alive| alive <= half);
    let lnd = first_round(&|alive| alive == 0);
    let end = last.round;
    Ok(Summary {
        fnd: fnd.unwrap_or(end),
        hnd: hnd.unwrap_or(end),
        lnd: lnd.unwrap_or(end),
        total_msgs_to_bs: last.msgs_to_bs,
        total_msgs_to_ch: last.msgs_to_ch,
        total_relayed: last.msgs_relayed,
        rounds_simulated: end,
        censored: lnd.is_none(),
    })
}

/// Population statistics of one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricStats {
    /// Order-independent: values are sorted before accumulation.
    pub fn from_values(values: &[u64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let n = sorted.len() as f64;
        let sum: u128 = sorted.iter().map(|&v| v as u128).sum();
        let mean = sum as f64 / n;
        let var = sorted
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        Self {
            mean,
            stddev: var.sqrt(),
            min: *sorted.first().unwrap_or(&0) as f64,
            max: *sorted.last().unwrap_or(&0) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub seeds: usize,
    pub censored_runs: usize,
    pub fnd: MetricStats,
    pub hnd: MetricStats,
    pub lnd: MetricStats,
    pub total_msgs_to_bs: MetricStats,
    pub total_msgs_to_ch: MetricStats,
    pub total_relayed: MetricStats,
    pub rounds_simulated: MetricStats,
}

pub fn aggregate_runs(summaries: &[Summary]) -> Result<AggregateSummary, MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::NoSummaries);
    }
    let stats = |f: fn(&Summary) -> u64| {
        MetricStats::from_values(&summaries.iter().map(f).collect::<Vec<_>>())
    };
    Ok(AggregateSummary {
        seeds: summaries.len(),
        censored_runs: summaries.iter().filter(|s| s.censored).count(),
        fnd: stats(|s| s.fnd),
        hnd: stats(|s| s.hnd),
        lnd: stats(|s| s.lnd),
        total_msgs_to_bs: stats(|s| s.total_msgs_to_bs),
        total_msgs_to_ch: stats(|s| s.total_msgs_to_ch),
        total_relayed: stats(|s| s.total_relayed),
        rounds_simulated: stats(|s| s.rounds_simulated),
    })
}

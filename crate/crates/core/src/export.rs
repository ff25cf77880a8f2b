//! Per-round CSV export/import and the run summary document.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;
use crate::engine::RoundRecord;
use crate::metrics::{AggregateSummary, Summary};

pub const ROUND_COLUMNS: [&str; 10] = [
    "round",
    "alive_normal",
    "alive_advanced",
    "alive_total",
    "ch_count",
    "sleeping",
    "residual_total_j",
    "msgs_to_ch",
    "msgs_to_bs",
    "msgs_relayed",
];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: bad value `{value}` in column {column}")]
    Value {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: alive_total does not equal alive_normal + alive_advanced")]
    Inconsistent { line: u64 },
}

/// Writes one header row and one row per record. Floats use the shortest
/// decimal form that parses back to the same value.
pub fn write_rounds<W: Write>(records: &[RoundRecord], out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUND_COLUMNS)?;
    for r in records {
        w.write_record([
            r.round.to_string(),
            r.alive_normal.to_string(),
            r.alive_advanced.to_string(),
            r.alive_total().to_string(),
            r.ch_count.to_string(),
            r.sleeping.to_string(),
            r.residual_total.to_string(),
            r.msgs_to_ch.to_string(),
            r.msgs_to_bs.to_string(),
            r.msgs_relayed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_rounds(records: &[RoundRecord], path: impl AsRef<Path>) -> Result<(), ExportError> {
    let file = File::create(path)?;
    write_rounds(records, std::io::BufWriter::new(file))
}

pub fn read_rounds<R: Read>(input: R) -> Result<Vec<RoundRecord>, ExportError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ROUND_COLUMNS {
        return Err(ExportError::Header(header));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        fn field<T: std::str::FromStr>(
            row: &csv::StringRecord,
            i: usize,
            line: u64,
        ) -> Result<T, ExportError> {
            let raw = row.get(i).unwrap_or("");
            raw.parse().map_err(|_| ExportError::Value {
                line,
                column: ROUND_COLUMNS[i],
                value: raw.to_string(),
            })
        }
        let rec = RoundRecord {
            round: field(&row, 0, line)?,
            alive_normal: field(&row, 1, line)?,
            alive_advanced: field(&row, 2, line)?,
            ch_count: field(&row, 4, line)?,
            sleeping: field(&row, 5, line)?,
            residual_total: field(&row, 6, line)?,
            msgs_to_ch: field(&row, 7, line)?,
            msgs_to_bs: field(&row, 8, line)?,
            msgs_relayed: field(&row, 9, line)?,
        };
        let total: usize = field(&row, 3, line)?;
        if total != rec.alive_total() {
            return Err(ExportError::Inconsistent { line });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn import_rounds(path: impl AsRef<Path>) -> Result<Vec<RoundRecord>, ExportError> {
    read_rounds(std::io::BufReader::new(File::open(path)?))
}

/// Summary document written next to every run's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub protocol: String,
    pub seed: u64,
    pub deployed: usize,
    pub summary: Summary,
    pub config: SimConfig,
}

/// Aggregate document for one protocol over many seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub protocol: String,
    pub seeds: Vec<u64>,
    pub aggregate: AggregateSummary,
    pub per_seed: Vec<Summary>,
    pub config: SimConfig,
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<(), ExportError> {
    let mut file = std::io::BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

pub fn read_run_report(path: impl AsRef<Path>) -> Result<RunReport, ExportError> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}

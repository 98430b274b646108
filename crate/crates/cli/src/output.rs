//! Result rows and their CSV / JSONL writers.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use crate::config::Format;

/// One result line. The column set is fixed; experiments that report
/// several numbers per point emit several rows with different `metric`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub code: String,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    pub v: String,
    pub schedule: String,
    pub p_flip: f64,
    pub p_meas: f64,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub n_trials: u64,
    pub censored: u64,
    pub seed: u64,
}

#[cfg(test)]
pub const COLUMNS: [&str; 15] = [
    "experiment",
    "code",
    "d",
    "L",
    "Z",
    "v",
    "schedule",
    "p_flip",
    "p_meas",
    "metric",
    "value",
    "stderr",
    "n_trials",
    "censored",
    "seed",
];

/// Serializes rows one at a time and flushes after each, so an
/// interrupted run leaves only complete lines behind.
pub struct RowWriter<W: Write> {
    inner: Sink<W>,
}

enum Sink<W: Write> {
    Csv(csv::Writer<W>),
    Jsonl(W),
}

impl<W: Write> RowWriter<W> {
    pub fn new(w: W, format: Format) -> Self {
        let inner = match format {
            Format::Csv => Sink::Csv(csv::WriterBuilder::new().has_headers(true).from_writer(w)),
            Format::Jsonl => Sink::Jsonl(w),
        };
        RowWriter { inner }
    }

    pub fn write(&mut self, row: &Row) -> Result<()> {
        match &mut self.inner {
            Sink::Csv(w) => {
                w.serialize(row)?;
                w.flush()?;
            }
            Sink::Jsonl(w) => {
                serde_json::to_writer(&mut *w, row)?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::SweepAxis;
use crate::estimators::Estimator;
use crate::{Error, Result};

pub const RESULT_COLUMNS: [&str; 7] = [
    "sweep_axis",
    "sweep_value",
    "estimator",
    "nmse_db_mean",
    "nmse_db_std",
    "trials",
    "walltime_ms_mean",
];

pub const TRIAL_COLUMNS: [&str; 7] = [
    "sweep_axis",
    "sweep_value",
    "trial",
    "estimator",
    "nmse_linear",
    "nmse_db",
    "walltime_ms",
];

/// Aggregate over all trials of one estimator at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_axis: SweepAxis,
    pub sweep_value: f64,
    pub estimator: Estimator,
    pub nmse_db_mean: f64,
    pub nmse_db_std: f64,
    pub trials: usize,
    pub walltime_ms_mean: f64,
}

/// One estimator on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_axis: SweepAxis,
    pub sweep_value: f64,
    pub trial: usize,
    pub estimator: Estimator,
    pub nmse_linear: f64,
    pub nmse_db: f64,
    pub walltime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

fn write_records<T: Serialize, W: Write>(
    out: W,
    header: &[&str],
    records: &[T],
    format: OutputFormat,
) -> std::result::Result<(), String> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            w.write_record(header).map_err(|e| e.to_string())?;
            for r in records {
                w.serialize(r).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records).map_err(|e| e.to_string())?;
            out.write_all(b"\n").map_err(|e| e.to_string())?;
            out.flush().map_err(|e| e.to_string())
        }
    }
}

fn parse_records<T: DeserializeOwned>(
    text: &str,
    header: &[&str],
    format: OutputFormat,
) -> std::result::Result<Vec<T>, String> {
    match format {
        OutputFormat::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let found = r.headers().map_err(|e| e.to_string())?;
            if found.iter().ne(header.iter().copied()) {
                return Err(format!("unexpected header {found:?}"));
            }
            r.deserialize()
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| e.to_string())
        }
        OutputFormat::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
    }
}

/// Writes result rows; CSV always carries the header, even with no rows.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow], format: OutputFormat) -> Result<()> {
    write_records(out, &RESULT_COLUMNS, rows, format).map_err(|message| Error::Format {
        path: "<writer>".into(),
        message,
    })
}

pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(BufWriter::new(file), &RESULT_COLUMNS, rows, format).map_err(|message| {
        Error::Format {
            path: path.into(),
            message,
        }
    })
}

pub fn parse_results(text: &str, format: OutputFormat) -> Result<Vec<ResultRow>> {
    parse_records(text, &RESULT_COLUMNS, format).map_err(|message| Error::Format {
        path: "<input>".into(),
        message,
    })
}

pub fn read_results(path: &Path, format: OutputFormat) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, &RESULT_COLUMNS, format).map_err(|message| Error::Format {
        path: path.into(),
        message,
    })
}

pub fn write_trials<W: Write>(out: W, records: &[TrialRecord], format: OutputFormat) -> Result<()> {
    write_records(out, &TRIAL_COLUMNS, records, format).map_err(|message| Error::Format {
        path: "<writer>".into(),
        message,
    })
}

pub fn emit_trials(records: &[TrialRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(BufWriter::new(file), &TRIAL_COLUMNS, records, format).map_err(|message| {
        Error::Format {
            path: path.into(),
            message,
        }
    })
}

pub fn parse_trials(text: &str, format: OutputFormat) -> Result<Vec<TrialRecord>> {
    parse_records(text, &TRIAL_COLUMNS, format).map_err(|message| Error::Format {
        path: "<input>".into(),
        message,
    })
}

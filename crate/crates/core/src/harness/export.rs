use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::SweepConfig;
use super::sweep::{FailureStats, SweepKind, SweepResult, SweepRow};

pub const CSV_HEADER: [&str; 11] = [
    "axis",
    "budget_K",
    "mean_ratio",
    "ci_lo",
    "ci_hi",
    "failure_rate",
    "slide_dist",
    "underspend_dist",
    "overspend_S",
    "ref_worst",
    "ref_theory",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    /// Format implied by a file extension; anything other than `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        }
    }
}

/// JSON document: the rows plus everything needed to rerun the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub kind: SweepKind,
    pub seed: u64,
    pub units: usize,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub stats: Vec<FailureStats>,
}

impl From<&SweepResult> for ExportDocument {
    fn from(r: &SweepResult) -> Self {
        Self {
            kind: r.kind,
            seed: r.config.seed,
            units: r.units,
            config: r.config.clone(),
            rows: r.rows.clone(),
            stats: r.stats.clone(),
        }
    }
}

pub fn to_csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json_string(result: &SweepResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ExportDocument::from(result))?)
}

pub fn export_results(result: &SweepResult, path: &Path, format: ExportFormat) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => to_csv_string(&result.rows)?,
        ExportFormat::Json => to_json_string(result)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Rows of an exported CSV, checking the header exactly.
pub fn read_csv_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_rows(&text).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_csv_rows(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format {
            path: "<csv>".into(),
            message: format!(
                "unexpected header '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 15] = [
    "scenario",
    "estimator",
    "param_name",
    "param_value",
    "n1",
    "n2",
    "R",
    "B",
    "alpha",
    "reps",
    "reject_rate",
    "se",
    "mean_stat",
    "mean_time_s",
    "seed",
];

/// One (grid point, estimator) result.
///
/// Timing benchmarks leave `reject_rate` and `se` empty and report the
/// median time per evaluation in `mean_time_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub estimator: String,
    pub param_name: String,
    pub param_value: f64,
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "R")]
    pub r: Option<usize>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    pub alpha: Option<f64>,
    pub reps: usize,
    pub reject_rate: Option<f64>,
    pub se: Option<f64>,
    pub mean_stat: f64,
    pub mean_time_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// The configuration that produced the rows.
    pub config: serde_json::Value,
    pub rows: Vec<ResultRow>,
}

impl ExperimentRecord {
    /// Rows for one estimator, in grid order.
    pub fn rows_for<'a>(&'a self, estimator: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.estimator == estimator)
    }
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
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid(format!("unknown output format `{s}`"))),
        }
    }
}

/// Writes `rec` as CSV rows or as a JSON document.
pub fn write_results<W: Write>(rec: &ExperimentRecord, out: W, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            // Header written by hand so that an empty record still gets one.
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for row in &rec.rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rec)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn emit_results(rec: &ExperimentRecord, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let file = File::create(path)?;
    write_results(rec, BufWriter::new(file), format)
}

/// Parses CSV produced by [`write_results`].
pub fn read_csv_rows<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::invalid("CSV header does not match the result schema"));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

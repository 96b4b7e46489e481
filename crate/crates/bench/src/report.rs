//! CSV and JSON output of benchmark results.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::runner::BenchResult;

pub const CSV_HEADER: [&str; 10] = [
    "suite",
    "shape_m",
    "shape_k",
    "bits",
    "variant",
    "workers",
    "iters",
    "median_us",
    "attained_gbs",
    "predicted_gbs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// JSON document: the run seed plus the result rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub results: Vec<BenchResult>,
}

pub fn write_csv<W: Write>(results: &[BenchResult], sink: W) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(source: R) -> anyhow::Result<Vec<BenchResult>> {
    let mut rd = csv::Reader::from_reader(source);
    anyhow::ensure!(rd.headers()?.iter().eq(CSV_HEADER), "unexpected CSV header");
    Ok(rd.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_json<W: Write>(report: &BenchReport, mut sink: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut sink, report)?;
    writeln!(sink)?;
    Ok(())
}

pub fn read_json<R: Read>(source: R) -> anyhow::Result<BenchReport> {
    Ok(serde_json::from_reader(source)?)
}

/// Writes `results` to `destination`, or stdout when `None`. CSV has no
/// room for the seed, so it goes to stderr.
pub fn report(
    results: &[BenchResult],
    seed: u64,
    format: ReportFormat,
    destination: Option<&Path>,
) -> anyhow::Result<()> {
    anyhow::ensure!(!results.is_empty(), "no results to report");
    let sink: Box<dyn Write> = match destination {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        ReportFormat::Csv => {
            eprintln!("seed {seed}");
            write_csv(results, sink)
        }
        ReportFormat::Json => write_json(&BenchReport { seed, results: results.to_vec() }, sink),
    }
}

//! Record files: a flat CSV table and a JSON-lines file with full traces.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use protoselect::eval::RunRecord;
use serde::{Deserialize, Serialize};

/// One CSV row; optional fields are left empty when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub algorithm: String,
    pub strategy: Option<String>,
    pub k: usize,
    pub r: usize,
    pub skew: Option<f64>,
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    pub accounting_mode: String,
    pub bai_queries: u64,
    pub maintenance_queries: u64,
    pub total_queries: u64,
    pub final_objective: f64,
    pub accuracy: Option<f64>,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

impl From<&RunRecord> for CsvRow {
    fn from(r: &RunRecord) -> Self {
        let p = &r.params;
        Self {
            algorithm: r.algorithm.to_string(),
            strategy: p.strategy.map(|s| s.to_string()),
            k: p.k,
            r: p.r,
            skew: p.skew,
            epsilon: p.epsilon,
            nu: p.nu,
            delta: p.delta,
            seed: p.seed,
            accounting_mode: r.accounting_mode.to_string(),
            bai_queries: r.bai_queries,
            maintenance_queries: r.maintenance_queries,
            total_queries: r.total_queries,
            final_objective: r.final_objective,
            accuracy: r.accuracy,
            wall_time_ms: r.wall_time_ms,
            error: r.error.clone(),
        }
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rdr.deserialize()
        .collect::<Result<Vec<CsvRow>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

pub fn write_jsonl(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.as_ref().is_ok_and(|l| l.trim().is_empty()))
        .map(|(n, line)| {
            let line = line?;
            serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))
        })
        .collect()
}

//! Per-cell aggregation of run records.

use std::collections::BTreeMap;

use protoselect::eval::RunRecord;
use serde::{Deserialize, Serialize};

use crate::output::CsvRow;

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub strategy: Option<String>,
    pub k: usize,
    pub r: usize,
    pub skew: Option<f64>,
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub accounting_mode: String,
    pub runs: usize,
    pub failures: usize,
    pub queries_mean: Option<f64>,
    pub queries_sd: Option<f64>,
    pub objective_mean: Option<f64>,
    pub objective_sd: Option<f64>,
    pub accuracy_mean: Option<f64>,
    pub accuracy_sd: Option<f64>,
}

fn cell_key(r: &CsvRow) -> String {
    let o = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "{}|{}|{}|{}|{}|{}|{}|{}|{}",
        r.algorithm,
        r.strategy.as_deref().unwrap_or(""),
        r.k,
        r.r,
        o(r.skew),
        o(r.epsilon),
        o(r.nu),
        o(r.delta),
        r.accounting_mode
    )
}

/// Groups rows by cell (everything but the seed and the measurements), in
/// order of first appearance. Error rows count as failures only.
pub fn summarize(rows: &[CsvRow]) -> Vec<CellSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&CsvRow>> = BTreeMap::new();
    for row in rows {
        let key = cell_key(row);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    order
        .iter()
        .map(|key| {
            let group = &groups[key];
            let first = group[0];
            let ok: Vec<&CsvRow> = group
                .iter()
                .copied()
                .filter(|r| r.error.is_none())
                .collect();
            let queries = mean_sd(
                &ok.iter()
                    .map(|r| r.total_queries as f64)
                    .collect::<Vec<_>>(),
            );
            let objective = mean_sd(&ok.iter().map(|r| r.final_objective).collect::<Vec<_>>());
            let accuracy = mean_sd(&ok.iter().filter_map(|r| r.accuracy).collect::<Vec<_>>());
            CellSummary {
                algorithm: first.algorithm.clone(),
                strategy: first.strategy.clone(),
                k: first.k,
                r: first.r,
                skew: first.skew,
                epsilon: first.epsilon,
                nu: first.nu,
                delta: first.delta,
                accounting_mode: first.accounting_mode.clone(),
                runs: group.len(),
                failures: group.len() - ok.len(),
                queries_mean: queries.map(|s| s.0),
                queries_sd: queries.map(|s| s.1),
                objective_mean: objective.map(|s| s.0),
                objective_sd: objective.map(|s| s.1),
                accuracy_mean: accuracy.map(|s| s.0),
                accuracy_sd: accuracy.map(|s| s.1),
            }
        })
        .collect()
}

/// Mean objective-versus-queries curve of one cell, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub cell: CellSummary,
    pub queries: Vec<f64>,
    pub objective: Vec<f64>,
}

/// Element-wise mean traces per cell over the successful runs.
pub fn summarize_traces(records: &[RunRecord]) -> Vec<TraceSummary> {
    let rows: Vec<CsvRow> = records.iter().map(CsvRow::from).collect();
    let cells = summarize(&rows);
    cells
        .into_iter()
        .map(|cell| {
            let members: Vec<&RunRecord> = records
                .iter()
                .zip(&rows)
                .filter(|(r, row)| r.error.is_none() && cell_key(row) == cell_key_of(&cell))
                .map(|(r, _)| r)
                .collect();
            let len = members
                .iter()
                .map(|r| r.objective_trace.len())
                .min()
                .unwrap_or(0);
            let avg = |f: &dyn Fn(&RunRecord, usize) -> f64| -> Vec<f64> {
                (0..len)
                    .map(|t| members.iter().map(|r| f(r, t)).sum::<f64>() / members.len() as f64)
                    .collect()
            };
            TraceSummary {
                queries: avg(&|r, t| r.query_trace.get(t).copied().unwrap_or(0) as f64),
                objective: avg(&|r, t| r.objective_trace[t]),
                cell,
            }
        })
        .collect()
}

fn cell_key_of(c: &CellSummary) -> String {
    cell_key(&CsvRow {
        algorithm: c.algorithm.clone(),
        strategy: c.strategy.clone(),
        k: c.k,
        r: c.r,
        skew: c.skew,
        epsilon: c.epsilon,
        nu: c.nu,
        delta: c.delta,
        seed: 0,
        accounting_mode: c.accounting_mode.clone(),
        bai_queries: 0,
        maintenance_queries: 0,
        total_queries: 0,
        final_objective: 0.0,
        accuracy: None,
        wall_time_ms: 0.0,
        error: None,
    })
}

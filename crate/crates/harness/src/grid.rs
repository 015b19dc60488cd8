//! Seeded experiment grids.
//!
//! A cell fixes the algorithm and its parameters; each cell runs several
//! times with seed `base_seed + fnv1a64(cell key) + run` (wrapping), so a
//! single cell can be replayed from its key alone.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use protoselect::bandit::BaiStrategy;
use protoselect::dataset::{
    build_skewed_target, gaussian_mixture, least_populated_label, load_binary_matrix, load_csv,
    load_idx, PointSet, ProblemInstance, TargetWeights,
};
use protoselect::eval::{
    coherence_gap, label_accuracy, objective, AccountingMode, Algorithm, RunParams, RunRecord,
};
use protoselect::exact::{build_traced, spot_greedy_traced, swap, GreedyTrace};
use protoselect::protobandit::{protobandit, ProtoBanditConfig};
use protoselect::PrototypeState;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, FileFormat, FileSpec};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "PROTOSELECT_THREADS";

/// Largest tolerated `|f(M) − (1 − Σ q_j D_j)|` after a run.
const COHERENCE_TOLERANCE: f64 = 1e-9;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn cell_seed(base_seed: u64, cell_key: &str, run: usize) -> u64 {
    base_seed
        .wrapping_add(fnv1a64(cell_key.as_bytes()))
        .wrapping_add(run as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub strategy: Option<BaiStrategy>,
    pub k: usize,
    pub r: usize,
    pub skew: Option<f64>,
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub accounting: AccountingMode,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

impl Cell {
    /// Canonical key; also the input of the seed hash.
    pub fn key(&self) -> String {
        format!(
            "algorithm={};strategy={};k={};r={};skew={};epsilon={};nu={};delta={};accounting={}",
            self.algorithm,
            opt(self.strategy),
            self.k,
            self.r,
            opt(self.skew),
            opt(self.epsilon),
            opt(self.nu),
            opt(self.delta),
            self.accounting
        )
    }

    fn params(&self, seed: u64) -> RunParams {
        RunParams {
            k: self.k,
            r: self.r,
            epsilon: self.epsilon,
            nu: self.nu,
            delta: self.delta,
            skew: self.skew,
            strategy: self.strategy,
            seed,
        }
    }
}

/// Every cell of the grid, in a fixed order.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let skews: Vec<Option<f64>> = if config.skew.is_empty() {
        vec![None]
    } else {
        config.skew.iter().map(|&s| Some(s)).collect()
    };
    let mut out = Vec::new();
    for &algorithm in &config.algorithms {
        for &skew in &skews {
            for &k in &config.k {
                if algorithm == Algorithm::ProtoBandit {
                    for &epsilon in &config.epsilon {
                        for &nu in &config.nu {
                            for &strategy in &config.strategies {
                                out.push(Cell {
                                    algorithm,
                                    strategy: Some(strategy),
                                    k,
                                    r: 1,
                                    skew,
                                    epsilon: Some(epsilon),
                                    nu: Some(nu),
                                    delta: Some(config.delta),
                                    accounting: config.accounting_mode,
                                });
                            }
                        }
                    }
                } else {
                    out.push(Cell {
                        algorithm,
                        strategy: None,
                        k,
                        r: config.r,
                        skew,
                        epsilon: None,
                        nu: None,
                        delta: None,
                        accounting: AccountingMode::Cached,
                    });
                }
            }
        }
    }
    out
}

fn load_file(spec: &FileSpec) -> Result<PointSet> {
    let points = match spec.format {
        FileFormat::Csv => load_csv(&spec.path, spec.has_labels)?,
        FileFormat::Idx => load_idx(&spec.path, spec.labels_path.as_deref())?,
        FileFormat::Binary => load_binary_matrix(&spec.path)?,
    };
    Ok(points)
}

/// Source points and the pool targets are built from.
pub fn load_dataset(config: &ExperimentConfig) -> Result<(Arc<PointSet>, PointSet)> {
    let d = &config.dataset;
    let split_seed = cell_seed(config.base_seed, "source-sample", 0);
    let pool = match (&d.synthetic, &d.source) {
        (Some(s), _) => gaussian_mixture(s.components, s.points, s.dims, s.seed)?,
        (None, Some(f)) => load_file(f).with_context(|| format!("loading {}", f.path.display()))?,
        (None, None) => bail!("no dataset configured"),
    };
    if pool.len() < config.source_size {
        bail!(
            "source_size {} exceeds the {} available points",
            config.source_size,
            pool.len()
        );
    }
    let (source, rest) = pool.split_sample(config.source_size, split_seed)?;
    let targets = match &d.target {
        Some(f) => load_file(f).with_context(|| format!("loading {}", f.path.display()))?,
        None => rest,
    };
    if targets.is_empty() {
        bail!("the target pool is empty");
    }
    Ok((Arc::new(source), targets))
}

/// One instance per skew value (with `k = 1`; runs re-key it).
pub fn skew_instances(
    config: &ExperimentConfig,
    source: &Arc<PointSet>,
    pool: &PointSet,
) -> Result<Vec<(Option<f64>, ProblemInstance)>> {
    if config.skew.is_empty() {
        let target = Arc::new(pool.clone());
        let weights = TargetWeights::uniform(target.len())?;
        return Ok(vec![(
            None,
            ProblemInstance::euclidean(source.clone(), target, weights, 1)?,
        )]);
    }
    let label = match config.skew_label {
        Some(l) => l,
        None => least_populated_label(pool)
            .ok_or_else(|| anyhow!("skewed targets need labeled data"))?,
    };
    config
        .skew
        .iter()
        .map(|&theta| {
            let seed = cell_seed(config.base_seed, &format!("skew={theta}"), 0);
            let (target, weights) = build_skewed_target(pool, label, theta, seed)?;
            let instance =
                ProblemInstance::euclidean(source.clone(), Arc::new(target), weights, 1)?;
            Ok((Some(theta), instance))
        })
        .collect()
}

fn exact_record(
    algorithm: Algorithm,
    params: RunParams,
    trace: GreedyTrace,
    queries: u64,
) -> RunRecord {
    let mut record = RunRecord::new(algorithm, params);
    record.bai_queries = queries;
    record.total_queries = queries;
    record.objective_trace = trace.objective;
    record.query_trace = trace.queries;
    record
}

/// Runs one cell once on a fresh copy of `base`.
pub fn run_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    base: &ProblemInstance,
    seed: u64,
) -> Result<RunRecord> {
    let instance = base.fresh(cell.k, cell.algorithm == Algorithm::SpotM)?;
    let params = cell.params(seed);
    let started = Instant::now();
    let (state, mut record): (PrototypeState, RunRecord) = match cell.algorithm {
        Algorithm::Build => {
            let (state, trace) = build_traced(&instance, cell.r, seed)?;
            (
                state,
                exact_record(cell.algorithm, params, trace, instance.provider().queries()),
            )
        }
        Algorithm::SpotGreedy | Algorithm::SpotM => {
            let (state, trace) = spot_greedy_traced(&instance, cell.r, seed)?;
            (
                state,
                exact_record(cell.algorithm, params, trace, instance.provider().queries()),
            )
        }
        Algorithm::Pam => {
            let (mut state, trace) = build_traced(&instance, cell.r, seed)?;
            for _ in 0..config.max_swap_passes {
                let (next, converged) = swap(&instance, &state, config.swap_l)?;
                state = next;
                if converged {
                    break;
                }
            }
            (
                state,
                exact_record(cell.algorithm, params, trace, instance.provider().queries()),
            )
        }
        Algorithm::ProtoBandit => {
            let mut pb = ProtoBanditConfig::new(
                cell.epsilon.context("epsilon missing")?,
                cell.nu.context("nu missing")?,
                cell.delta.context("delta missing")?,
                cell.strategy.context("strategy missing")?,
                seed,
            )?
            .with_accounting(cell.accounting);
            pb.max_pulls = config.max_pulls;
            let (state, mut record) = protobandit(&instance, &pb)?;
            record.params = params;
            (state, record)
        }
    };
    let elapsed = started.elapsed().as_secs_f64() * 1e3;

    let gap = coherence_gap(&instance, &state)?;
    if gap > COHERENCE_TOLERANCE {
        bail!("cached objective differs from direct evaluation by {gap:e}");
    }
    record.chosen = state.chosen().to_vec();
    record.final_objective = objective(&instance, state.chosen())?;
    let labeled = instance.source().is_some_and(|s| s.labels().is_some())
        && instance.target().is_some_and(|t| t.labels().is_some());
    record.accuracy = if labeled {
        Some(label_accuracy(&instance, state.chosen())?)
    } else {
        None
    };
    record.wall_time_ms = if config.record_wall_time {
        elapsed
    } else {
        0.0
    };
    Ok(record)
}

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every cell `runs_per_cell` times; a failing run becomes an error
/// record. Records come back sorted by cell key, then run index.
pub fn run_experiments(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let (source, pool) = load_dataset(config)?;
    let instances = skew_instances(config, &source, &pool)?;

    let mut jobs = Vec::new();
    for cell in cells(config) {
        let key = cell.key();
        let runs = if cell.algorithm == Algorithm::ProtoBandit {
            config.runs_per_cell
        } else {
            config.exact_runs()
        };
        for run in 0..runs {
            jobs.push((key.clone(), run, cell.clone()));
        }
    }
    jobs.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));

    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let pool_threads = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()?;
    let records = pool_threads.install(|| {
        jobs.par_iter()
            .map(|(key, run, cell)| {
                let seed = cell_seed(config.base_seed, key, *run);
                let base = &instances
                    .iter()
                    .find(|(s, _)| *s == cell.skew)
                    .expect("an instance exists for every skew")
                    .1;
                let record = run_cell(config, cell, base, seed).unwrap_or_else(|e| {
                    RunRecord::failed(cell.algorithm, cell.params(seed), format!("{e:#}"))
                });
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                eprintln!(
                    "[{n}/{total}] {key} run {run}{}",
                    if record.error.is_some() {
                        " FAILED"
                    } else {
                        ""
                    }
                );
                record
            })
            .collect::<Vec<_>>()
    });
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn seeds_differ_per_run_and_cell() {
        assert_ne!(cell_seed(0, "a", 0), cell_seed(0, "a", 1));
        assert_ne!(cell_seed(0, "a", 0), cell_seed(0, "b", 0));
        assert_eq!(cell_seed(5, "a", 2), fnv1a64(b"a").wrapping_add(7));
    }
}

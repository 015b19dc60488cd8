//! Objective evaluation, the brute-force optimum and accuracy scoring.
//!
//! Everything here queries through a shadow provider, so evaluating a run
//! never changes the query count the run reports.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::bandit::BaiStrategy;
use crate::dataset::ProblemInstance;
use crate::metric::SIMILARITY_OFFSET;
use crate::{Error, PrototypeState, Result};

/// Largest number of subsets [`brute_force_optimum`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "build")]
    Build,
    #[serde(rename = "pam")]
    Pam,
    #[serde(rename = "spot_greedy")]
    SpotGreedy,
    #[serde(rename = "spot_m")]
    SpotM,
    #[serde(rename = "protobandit")]
    ProtoBandit,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Self::Build,
        Self::Pam,
        Self::SpotGreedy,
        Self::SpotM,
        Self::ProtoBandit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Build => "build",
            Self::Pam => "pam",
            Self::SpotGreedy => "spot_greedy",
            Self::SpotM => "spot_m",
            Self::ProtoBandit => "protobandit",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm {s:?}")))
    }
}

/// How ProtoBandit charges the `D_j` values its pulls read.
///
/// `Cached` keeps `D_j` up to date with `|T|` queries per selection and
/// charges one query per pull. `Strict` charges `i − 1` queries per pull in
/// iteration `i` (recomputing `D_j` from the chosen set) and no maintenance.
/// Both modes make the same selections.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountingMode {
    #[default]
    Cached,
    Strict,
}

impl AccountingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cached => "cached",
            Self::Strict => "strict",
        }
    }
}

impl fmt::Display for AccountingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccountingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cached" => Ok(Self::Cached),
            "strict" => Ok(Self::Strict),
            _ => Err(Error::Parameter(format!("unknown accounting mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub k: usize,
    pub r: usize,
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub skew: Option<f64>,
    pub strategy: Option<BaiStrategy>,
    pub seed: u64,
}

/// One experiment outcome.
///
/// `total_queries = bai_queries + maintenance_queries` in the recorded
/// accounting mode. For the exact algorithms `bai_queries` holds the gain
/// evaluations (including SWAP) and maintenance is zero. ProtoBandit runs
/// also carry the strict-mode BAI charge whatever mode was recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub params: RunParams,
    pub accounting_mode: AccountingMode,
    pub bai_queries: u64,
    pub maintenance_queries: u64,
    pub total_queries: u64,
    pub strict_bai_queries: Option<u64>,
    /// Objective after each of the `k` selections.
    pub objective_trace: Vec<f64>,
    /// Cumulative recorded queries after each selection.
    pub query_trace: Vec<u64>,
    /// BAI pulls per iteration (ProtoBandit only).
    pub pulls_trace: Vec<u64>,
    /// Distinct candidate arms per iteration (ProtoBandit only).
    pub arms_trace: Vec<usize>,
    pub final_objective: f64,
    pub accuracy: Option<f64>,
    pub wall_time_ms: f64,
    pub chosen: Vec<usize>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn new(algorithm: Algorithm, params: RunParams) -> Self {
        Self {
            algorithm,
            params,
            accounting_mode: AccountingMode::Cached,
            bai_queries: 0,
            maintenance_queries: 0,
            total_queries: 0,
            strict_bai_queries: None,
            objective_trace: Vec::new(),
            query_trace: Vec::new(),
            pulls_trace: Vec::new(),
            arms_trace: Vec::new(),
            final_objective: 0.0,
            accuracy: None,
            wall_time_ms: 0.0,
            chosen: Vec::new(),
            error: None,
        }
    }

    /// A record for a run that failed with `error`.
    pub fn failed(algorithm: Algorithm, params: RunParams, error: impl fmt::Display) -> Self {
        Self {
            error: Some(error.to_string()),
            ..Self::new(algorithm, params)
        }
    }
}

fn check_chosen(instance: &ProblemInstance, chosen: &[usize]) -> Result<()> {
    let n = instance.n_sources();
    let mut seen = vec![false; n];
    for &i in chosen {
        if i >= n {
            return Err(Error::Parameter(format!("source index {i} out of range")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Parameter(format!("source index {i} repeated")));
        }
    }
    Ok(())
}

/// `f(M) = Σ_j q_j max_{i ∈ M} (1 − d(j, i))`, with `f(∅) = 0`.
pub fn objective(instance: &ProblemInstance, chosen: &[usize]) -> Result<f64> {
    check_chosen(instance, chosen)?;
    if chosen.is_empty() {
        return Ok(0.0);
    }
    let shadow = instance.provider().shadow();
    let mut best = vec![f64::NEG_INFINITY; instance.n_targets()];
    let mut column = vec![0.0; instance.n_targets()];
    for &i in chosen {
        shadow.column(i, &mut column)?;
        for (b, d) in best.iter_mut().zip(&column) {
            *b = b.max(SIMILARITY_OFFSET - d);
        }
    }
    Ok(instance
        .weights()
        .as_slice()
        .iter()
        .zip(&best)
        .map(|(q, b)| q * b)
        .sum())
}

/// `|f(M) − (1 − Σ_j q_j D_j)|` for a state's chosen set.
pub fn coherence_gap(instance: &ProblemInstance, state: &PrototypeState) -> Result<f64> {
    let direct = objective(instance, state.chosen())?;
    Ok((direct - state.objective(instance.weights().as_slice())).abs())
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut c: u128 = 1;
    for t in 0..k as u128 {
        c = c * (n as u128 - t) / (t + 1);
        if c > BRUTE_FORCE_LIMIT * 1_000 {
            return c;
        }
    }
    c
}

/// Best `k`-subset by exhaustive search; the lexicographically least one
/// wins ties. Refuses more than [`BRUTE_FORCE_LIMIT`] subsets.
pub fn brute_force_optimum(instance: &ProblemInstance) -> Result<(Vec<usize>, f64)> {
    let (n_s, n_t, k) = (instance.n_sources(), instance.n_targets(), instance.k());
    let count = binomial(n_s, k);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::Size(format!(
            "C({n_s}, {k}) subsets exceeds the brute-force limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    let shadow = instance.provider().shadow();
    let mut sim = vec![0.0; n_s * n_t];
    for (i, col) in sim.chunks_mut(n_t).enumerate() {
        shadow.column(i, col)?;
        col.iter_mut().for_each(|d| *d = SIMILARITY_OFFSET - *d);
    }
    let q = instance.weights().as_slice();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in (0..n_s).combinations(k) {
        let value: f64 = (0..n_t)
            .map(|j| {
                let top = subset
                    .iter()
                    .map(|&i| sim[i * n_t + j])
                    .fold(f64::NEG_INFINITY, f64::max);
                q[j] * top
            })
            .sum();
        // combinations arrive in lexicographic order, so only a clear win replaces
        if best.as_ref().is_none_or(|(_, v)| value > v + 1e-12) {
            best = Some((subset, value));
        }
    }
    Ok(best.expect("k ≤ |S| yields at least one subset"))
}

/// Weighted fraction of targets whose nearest chosen prototype carries the
/// same label (lowest source index on distance ties).
pub fn accuracy(
    instance: &ProblemInstance,
    chosen: &[usize],
    target_labels: &[i64],
    source_labels: &[i64],
) -> Result<f64> {
    check_chosen(instance, chosen)?;
    if chosen.is_empty() {
        return Err(Error::Parameter(
            "accuracy needs at least one prototype".into(),
        ));
    }
    if target_labels.len() != instance.n_targets() || source_labels.len() != instance.n_sources() {
        return Err(Error::Label("label count differs from point count".into()));
    }
    let shadow = instance.provider().shadow();
    let n_t = instance.n_targets();
    let mut order = chosen.to_vec();
    order.sort_unstable();
    let mut nearest = vec![(f64::INFINITY, 0usize); n_t];
    let mut column = vec![0.0; n_t];
    for &i in &order {
        shadow.column(i, &mut column)?;
        for (slot, &d) in nearest.iter_mut().zip(&column) {
            if d < slot.0 {
                *slot = (d, i);
            }
        }
    }
    Ok(instance
        .weights()
        .as_slice()
        .iter()
        .zip(&nearest)
        .zip(target_labels)
        .filter(|((_, (_, i)), &label)| source_labels[*i] == label)
        .map(|((q, _), _)| q)
        .sum())
}

/// [`accuracy`] with the labels stored on the instance's point sets.
pub fn label_accuracy(instance: &ProblemInstance, chosen: &[usize]) -> Result<f64> {
    let missing = || Error::Label("instance points carry no labels".into());
    let source = instance
        .source()
        .and_then(|s| s.labels())
        .ok_or_else(missing)?;
    let target = instance
        .target()
        .and_then(|t| t.labels())
        .ok_or_else(missing)?;
    accuracy(instance, chosen, target, source)
}

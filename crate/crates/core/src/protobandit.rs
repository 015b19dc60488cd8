//! ProtoBandit: randomized greedy prototype selection with best-arm
//! identification.
//!
//! Each of the `k` iterations samples a candidate subset `R` of
//! `⌈|S|/k · ln(1/ε)⌉` unchosen sources, finds an approximately best gain in
//! `R` by sampling targets, and adds it. The number of pulls depends only on
//! `|R|`, the tolerance and the error probability, never on `|T|`.

use std::f64::consts::E;
use std::time::Instant;

use rand::Rng;

use crate::bandit::{self, BaiProblem, BaiStrategy, GainOracle, TargetSampler};
use crate::dataset::ProblemInstance;
use crate::eval::{AccountingMode, Algorithm, RunParams, RunRecord};
use crate::{seeded, Error, PrototypeState, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProtoBanditConfig {
    pub epsilon: f64,
    pub nu: f64,
    pub delta: f64,
    pub strategy: BaiStrategy,
    pub rng_seed: u64,
    pub accounting: AccountingMode,
    /// Pull budget per iteration for the KL-LUCB strategies.
    pub max_pulls: Option<u64>,
}

impl ProtoBanditConfig {
    pub fn new(
        epsilon: f64,
        nu: f64,
        delta: f64,
        strategy: BaiStrategy,
        rng_seed: u64,
    ) -> Result<Self> {
        let config = Self {
            epsilon,
            nu,
            delta,
            strategy,
            rng_seed,
            accounting: AccountingMode::Cached,
            max_pulls: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_accounting(mut self, accounting: AccountingMode) -> Self {
        self.accounting = accounting;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Parameter(format!(
                "epsilon {} outside (0, 1)",
                self.epsilon
            )));
        }
        let nu_max = 1.0 - 1.0 / E - self.epsilon;
        if !(self.nu > 0.0 && self.nu < nu_max) {
            return Err(Error::Parameter(format!(
                "nu {} outside (0, 1 - 1/e - epsilon) = (0, {nu_max:.6})",
                self.nu
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.05) {
            return Err(Error::Parameter(format!(
                "delta {} outside (0, 0.05)",
                self.delta
            )));
        }
        Ok(())
    }

    /// BAI tolerance `ν / (1 − 1/e − ε)`.
    pub fn bai_tolerance(&self) -> f64 {
        self.nu / (1.0 - 1.0 / E - self.epsilon)
    }

    /// BAI error probability `δ / k`.
    pub fn bai_error_prob(&self, k: usize) -> f64 {
        self.delta / k as f64
    }
}

/// `⌈|S|/k · ln(1/ε)⌉`, clamped to `[1, remaining]`.
pub fn subset_size(source_size: usize, k: usize, epsilon: f64, remaining: usize) -> usize {
    let raw = (source_size as f64 / k as f64 * (1.0 / epsilon).ln()).ceil();
    (raw.max(1.0) as usize).clamp(1, remaining.max(1))
}

/// Worst-case budget on strict-mode BAI queries:
/// `9·k·|S|·ν₀⁻²·ln(1/ε)·ln(k/δ)` with `ν₀ = ν / (1 − ε − 1/e)`.
pub fn strict_query_bound(source_size: usize, k: usize, epsilon: f64, nu: f64, delta: f64) -> f64 {
    let nu0 = nu / (1.0 - epsilon - 1.0 / E);
    9.0 * k as f64 * source_size as f64 / (nu0 * nu0)
        * (1.0 / epsilon).ln()
        * (k as f64 / delta).ln()
}

/// Draws `size` positions with replacement from `remaining`, then removes
/// duplicates; the result is ascending.
fn sample_candidates(remaining: &[usize], size: usize, rng: &mut crate::SeedRng) -> Vec<usize> {
    let mut drawn: Vec<usize> = (0..size)
        .map(|_| remaining[rng.random_range(0..remaining.len())])
        .collect();
    drawn.sort_unstable();
    drawn.dedup();
    drawn
}

/// Runs ProtoBandit on `instance` and returns the final state and its record.
///
/// Pulls read `D_j` from the cached state. The record reports queries in
/// `config.accounting`; the strict charge is always filled in as well.
pub fn protobandit(
    instance: &ProblemInstance,
    config: &ProtoBanditConfig,
) -> Result<(PrototypeState, RunRecord)> {
    config.validate()?;
    let started = Instant::now();
    let provider = instance.provider();
    let (n_s, n_t, k) = (instance.n_sources(), instance.n_targets(), instance.k());
    let q = instance.weights().as_slice();
    let sampler = TargetSampler::new(q)?;
    let nu0 = config.bai_tolerance();
    let delta0 = config.bai_error_prob(k);
    let mut rng = seeded(config.rng_seed);
    let mut state = PrototypeState::empty(n_s, n_t);
    let mut column = vec![0.0; n_t];

    let mut record = RunRecord::new(
        Algorithm::ProtoBandit,
        RunParams {
            k,
            r: 1,
            epsilon: Some(config.epsilon),
            nu: Some(config.nu),
            delta: Some(config.delta),
            skew: None,
            strategy: Some(config.strategy),
            seed: config.rng_seed,
        },
    );
    record.accounting_mode = config.accounting;
    let (mut cached_bai, mut maintenance, mut strict_bai) = (0u64, 0u64, 0u64);

    for iteration in 0..k {
        let remaining = state.remaining();
        let size = subset_size(n_s, k, config.epsilon, remaining.len());
        let arms = sample_candidates(&remaining, size, &mut rng);
        record.arms_trace.push(arms.len());
        let problem = BaiProblem::new(arms, nu0, delta0)?;

        let before = provider.queries();
        let outcome = {
            let mut oracle = GainOracle::new(instance, &state, &sampler);
            bandit::identify(
                config.strategy,
                &problem,
                &mut oracle,
                &mut rng,
                config.max_pulls,
            )?
        };
        cached_bai += provider.queries() - before;
        strict_bai += iteration as u64 * outcome.pulls;
        record.pulls_trace.push(outcome.pulls);

        let before = provider.queries();
        provider.column(outcome.arm, &mut column)?;
        state.add(outcome.arm, &column)?;
        maintenance += provider.queries() - before;

        record.objective_trace.push(state.objective(q));
        record.query_trace.push(match config.accounting {
            AccountingMode::Cached => cached_bai + maintenance,
            AccountingMode::Strict => strict_bai,
        });
    }

    (record.bai_queries, record.maintenance_queries) = match config.accounting {
        AccountingMode::Cached => (cached_bai, maintenance),
        AccountingMode::Strict => (strict_bai, 0),
    };
    record.total_queries = record.bai_queries + record.maintenance_queries;
    record.strict_bai_queries = Some(strict_bai);
    record.final_objective = state.objective(q);
    record.chosen = state.chosen().to_vec();
    record.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok((state, record))
}

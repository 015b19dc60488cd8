//! Pure-exploration best-arm identification.
//!
//! An arm is a candidate source point; pulling it samples a target `j ~ q`
//! and returns `max(D_j − d(j, i), 0)`, an unbiased estimate of the arm's
//! exact greedy gain. Three strategies find a `(ν, 1)`-optimal arm (mean
//! within `ν` of the best) with probability at least `1 − δ`:
//!
//! * [`naive_elimination`]: every arm pulled `⌈2/ν² · ln(2n/δ)⌉` times.
//! * [`aba`]: aggressive halving down to about `n^{3/4}/2` arms, then naive
//!   elimination on the survivors, never exceeding `⌈18n/ν² · ln(1/δ)⌉` pulls.
//! * [`kl_lucb`]: adaptive LUCB with Bernoulli-KL confidence bounds and an
//!   optional early-stop heuristic.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ProblemInstance;
use crate::{Error, PrototypeState, Result, SeedRng};

/// Source of stochastic rewards in `[0, 1]`.
pub trait RewardOracle {
    fn pull(&mut self, arm: usize, rng: &mut SeedRng) -> Result<f64>;
}

/// Arms plus the `(ν, δ)` accuracy target.
#[derive(Debug, Clone, PartialEq)]
pub struct BaiProblem {
    arms: Vec<usize>,
    tolerance: f64,
    error_prob: f64,
}

impl BaiProblem {
    pub fn new(arms: Vec<usize>, tolerance: f64, error_prob: f64) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::Parameter(
                "a bandit problem needs at least one arm".into(),
            ));
        }
        let mut sorted = arms.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("arms must be distinct".into()));
        }
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::Parameter(format!(
                "tolerance {tolerance} outside (0, 1)"
            )));
        }
        if !(error_prob > 0.0 && error_prob < 1.0) {
            return Err(Error::Parameter(format!(
                "error probability {error_prob} outside (0, 1)"
            )));
        }
        Ok(Self {
            arms,
            tolerance,
            error_prob,
        })
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn error_prob(&self) -> f64 {
        self.error_prob
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    pub pulls: u64,
    pub reward_sum: f64,
}

impl ArmStats {
    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.reward_sum / self.pulls as f64)
    }

    fn record(&mut self, reward: f64) {
        self.pulls += 1;
        self.reward_sum += reward;
    }
}

/// Returned arm (an element of [`BaiProblem::arms`]) and the pulls spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaiOutcome {
    pub arm: usize,
    pub pulls: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaiStrategy {
    Aba,
    Naive,
    KlLucb,
    KlLucbEarly,
}

impl BaiStrategy {
    pub const ALL: [BaiStrategy; 4] = [Self::Aba, Self::Naive, Self::KlLucb, Self::KlLucbEarly];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Aba => "aba",
            Self::Naive => "naive",
            Self::KlLucb => "kl_lucb",
            Self::KlLucbEarly => "kl_lucb_early",
        }
    }
}

impl fmt::Display for BaiStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaiStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown strategy {s:?}")))
    }
}

/// Runs `strategy`; `max_pulls` only applies to the KL-LUCB variants, the
/// other two have fixed budgets.
pub fn identify<O: RewardOracle>(
    strategy: BaiStrategy,
    problem: &BaiProblem,
    oracle: &mut O,
    rng: &mut SeedRng,
    max_pulls: Option<u64>,
) -> Result<BaiOutcome> {
    match strategy {
        BaiStrategy::Aba => aba(problem, oracle, rng),
        BaiStrategy::Naive => naive_elimination(problem, oracle, rng),
        BaiStrategy::KlLucb => kl_lucb(problem, oracle, rng, false, max_pulls),
        BaiStrategy::KlLucbEarly => kl_lucb(problem, oracle, rng, true, max_pulls),
    }
}

/// Pulls per arm for naive elimination: `⌈(2/ν²)·ln(2n/δ)⌉`.
pub fn naive_pulls_per_arm(n_arms: usize, tolerance: f64, error_prob: f64) -> u64 {
    ((2.0 / (tolerance * tolerance)) * (2.0 * n_arms as f64 / error_prob).ln()).ceil() as u64
}

/// Hard pull budget of [`aba`]: `⌈18·n/ν² · ln(1/δ)⌉`.
pub fn aba_pull_cap(n_arms: usize, tolerance: f64, error_prob: f64) -> u64 {
    (18.0 * n_arms as f64 / (tolerance * tolerance) * (1.0 / error_prob).ln()).ceil() as u64
}

struct Budget {
    used: u64,
    cap: Option<u64>,
}

impl Budget {
    fn take(&mut self) -> bool {
        if self.cap.is_some_and(|c| self.used >= c) {
            return false;
        }
        self.used += 1;
        true
    }
}

fn pull_arm<O: RewardOracle>(
    oracle: &mut O,
    arm: usize,
    rng: &mut SeedRng,
    stats: &mut [&mut ArmStats],
) -> Result<()> {
    let reward = oracle.pull(arm, rng)?;
    if !(0.0..=1.0).contains(&reward) {
        return Err(Error::Precondition(format!(
            "reward {reward} of arm {arm} outside [0, 1]"
        )));
    }
    for s in stats.iter_mut() {
        s.record(reward);
    }
    Ok(())
}

/// Position (into `stats`) of the best empirical mean among `alive`;
/// earliest position wins ties, unpulled arms rank last.
fn best_of(alive: &[usize], stats: &[ArmStats]) -> usize {
    let mut best = alive[0];
    for &p in &alive[1..] {
        if stats[p].mean().unwrap_or(-1.0) > stats[best].mean().unwrap_or(-1.0) {
            best = p;
        }
    }
    best
}

/// Pulls every arm `⌈(2/ν²)·ln(2n/δ)⌉` times (round-robin) and returns the
/// best empirical mean.
pub fn naive_elimination<O: RewardOracle>(
    problem: &BaiProblem,
    oracle: &mut O,
    rng: &mut SeedRng,
) -> Result<BaiOutcome> {
    let arms = problem.arms();
    let m = naive_pulls_per_arm(arms.len(), problem.tolerance, problem.error_prob);
    let mut stats = vec![ArmStats::default(); arms.len()];
    for _ in 0..m {
        for (p, &arm) in arms.iter().enumerate() {
            pull_arm(oracle, arm, rng, &mut [&mut stats[p]])?;
        }
    }
    let alive: Vec<usize> = (0..arms.len()).collect();
    Ok(BaiOutcome {
        arm: arms[best_of(&alive, &stats)],
        pulls: m * arms.len() as u64,
    })
}

/// Approximate best arm: aggressive elimination then naive elimination.
///
/// Phase 1 pulls every surviving arm `⌈(8/ν²)·ln(4R/δ)⌉` times per round and
/// keeps the better half, where `R = ⌈log₂(n / (n^{3/4}/2))⌉`, until at most
/// `max(2, ⌈n^{3/4}/2⌉)` arms remain. Phase 2 runs naive elimination on the
/// survivors with `(ν/2, δ/2)` on fresh samples. If the hard cap
/// [`aba_pull_cap`] is reached the best cumulative mean among the survivors
/// is returned.
pub fn aba<O: RewardOracle>(
    problem: &BaiProblem,
    oracle: &mut O,
    rng: &mut SeedRng,
) -> Result<BaiOutcome> {
    let arms = problem.arms();
    let n = arms.len();
    if n == 1 {
        return Ok(BaiOutcome {
            arm: arms[0],
            pulls: 0,
        });
    }
    let (nu, delta) = (problem.tolerance, problem.error_prob);
    let mut budget = Budget {
        used: 0,
        cap: Some(aba_pull_cap(n, nu, delta)),
    };
    let mut stats = vec![ArmStats::default(); n];
    let mut alive: Vec<usize> = (0..n).collect();

    let reduced = (n as f64).powf(0.75) / 2.0;
    let keep = (reduced.ceil() as usize).max(2);
    if n > keep {
        let rounds_total = (n as f64 / reduced).log2().ceil().max(1.0);
        let per_round = ((8.0 / (nu * nu)) * (4.0 * rounds_total / delta).ln()).ceil() as u64;
        while alive.len() > keep {
            for _ in 0..per_round {
                for &p in &alive {
                    if !budget.take() {
                        return Ok(BaiOutcome {
                            arm: arms[best_of(&alive, &stats)],
                            pulls: budget.used,
                        });
                    }
                    pull_arm(oracle, arms[p], rng, &mut [&mut stats[p]])?;
                }
            }
            let mut ranked = alive.clone();
            // stable sort: equal means keep the lower position first
            ranked.sort_by(|&a, &b| {
                stats[b]
                    .mean()
                    .unwrap_or(0.0)
                    .total_cmp(&stats[a].mean().unwrap_or(0.0))
            });
            ranked.truncate(alive.len().div_ceil(2));
            ranked.sort_unstable();
            alive = ranked;
        }
    }

    let m = naive_pulls_per_arm(alive.len(), nu / 2.0, delta / 2.0);
    let mut fresh = vec![ArmStats::default(); n];
    for _ in 0..m {
        for &p in &alive {
            if !budget.take() {
                return Ok(BaiOutcome {
                    arm: arms[best_of(&alive, &stats)],
                    pulls: budget.used,
                });
            }
            let (s, f) = (&mut stats[p], &mut fresh[p]);
            pull_arm(oracle, arms[p], rng, &mut [s, f])?;
        }
    }
    Ok(BaiOutcome {
        arm: arms[best_of(&alive, &fresh)],
        pulls: budget.used,
    })
}

/// Exploration constants of KL-LUCB: `β(t, δ) = ln(k₁·n·t^α / δ)`.
pub const KL_LUCB_ALPHA: f64 = 1.1;
pub const KL_LUCB_K1: f64 = 405.5;

/// Bernoulli KL divergence `kl(p, q)`.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    const EPS: f64 = 1e-15;
    let p = p.clamp(0.0, 1.0);
    let q = q.clamp(EPS, 1.0 - EPS);
    let term = |a: f64, b: f64| if a <= 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

const BISECTION_STEPS: usize = 50;

/// `max{q ∈ [p, 1] : n·kl(p, q) ≤ level}`.
pub fn kl_upper_bound(p: f64, n: u64, level: f64) -> f64 {
    let budget = level / n as f64;
    if kl_bernoulli(p, 1.0) <= budget {
        return 1.0;
    }
    let (mut lo, mut hi) = (p, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if kl_bernoulli(p, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `min{q ∈ [0, p] : n·kl(p, q) ≤ level}`.
pub fn kl_lower_bound(p: f64, n: u64, level: f64) -> f64 {
    let budget = level / n as f64;
    if kl_bernoulli(p, 0.0) <= budget {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, p);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if kl_bernoulli(p, mid) <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// KL-LUCB: each round pulls the empirical leader and the challenger with
/// the highest upper confidence bound, stopping once the leader's lower
/// bound reaches the challenger's upper bound minus `ν`.
///
/// With `early_stop`, it also stops as soon as the leader's empirical mean
/// beats the challenger's by `ν` and both arms have at least `⌈1/ν⌉` pulls.
/// This is a heuristic and carries no `(ν, δ)` guarantee. `max_pulls`
/// bounds the total pulls; the empirical leader is returned when it binds.
pub fn kl_lucb<O: RewardOracle>(
    problem: &BaiProblem,
    oracle: &mut O,
    rng: &mut SeedRng,
    early_stop: bool,
    max_pulls: Option<u64>,
) -> Result<BaiOutcome> {
    let arms = problem.arms();
    let n = arms.len();
    if n == 1 {
        return Ok(BaiOutcome {
            arm: arms[0],
            pulls: 0,
        });
    }
    let (nu, delta) = (problem.tolerance, problem.error_prob);
    let min_pulls = (1.0 / nu).ceil() as u64;
    let mut budget = Budget {
        used: 0,
        cap: max_pulls,
    };
    let mut stats = vec![ArmStats::default(); n];
    let all: Vec<usize> = (0..n).collect();
    let done = |stats: &[ArmStats], used: u64| -> BaiOutcome {
        BaiOutcome {
            arm: arms[best_of(&all, stats)],
            pulls: used,
        }
    };

    for p in 0..n {
        if !budget.take() {
            return Ok(done(&stats, budget.used));
        }
        pull_arm(oracle, arms[p], rng, &mut [&mut stats[p]])?;
    }
    let mut round: u64 = 1;
    loop {
        let level = (KL_LUCB_K1 * n as f64 * (round as f64).powf(KL_LUCB_ALPHA) / delta).ln();
        let leader = best_of(&all, &stats);
        // Pinsker: the KL bound never exceeds p + sqrt(β / 2N), so arms whose
        // cheap bound is below the best exact bound so far can be skipped
        let mut order: Vec<(f64, usize)> = (0..n)
            .filter(|&p| p != leader)
            .map(|p| {
                let s = &stats[p];
                let loose =
                    (s.mean().unwrap_or(0.0) + (level / (2.0 * s.pulls as f64)).sqrt()).min(1.0);
                (loose, p)
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut challenger = usize::MAX;
        let mut challenger_ucb = f64::NEG_INFINITY;
        for &(loose, p) in &order {
            if loose < challenger_ucb {
                break;
            }
            let ucb = kl_upper_bound(stats[p].mean().unwrap_or(0.0), stats[p].pulls, level);
            if ucb > challenger_ucb || (ucb == challenger_ucb && p < challenger) {
                challenger_ucb = ucb;
                challenger = p;
            }
        }
        let (l, c) = (&stats[leader], &stats[challenger]);
        let leader_mean = l.mean().unwrap_or(0.0);
        let leader_lcb = kl_lower_bound(leader_mean, l.pulls, level);
        if leader_lcb >= challenger_ucb - nu {
            return Ok(BaiOutcome {
                arm: arms[leader],
                pulls: budget.used,
            });
        }
        if early_stop
            && l.pulls >= min_pulls
            && c.pulls >= min_pulls
            && leader_mean - c.mean().unwrap_or(0.0) >= nu
        {
            return Ok(BaiOutcome {
                arm: arms[leader],
                pulls: budget.used,
            });
        }
        for p in [leader, challenger] {
            if !budget.take() {
                return Ok(done(&stats, budget.used));
            }
            pull_arm(oracle, arms[p], rng, &mut [&mut stats[p]])?;
        }
        round += 1;
    }
}

/// Samples target indices from `q` by inverting its cumulative sum.
#[derive(Debug, Clone)]
pub struct TargetSampler {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl TargetSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let last_positive = weights
            .iter()
            .rposition(|&w| w > 0.0)
            .ok_or_else(|| Error::Parameter("weights have no positive entry".into()))?;
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { cdf, last_positive })
    }

    #[inline]
    pub fn sample(&self, rng: &mut SeedRng) -> usize {
        let total = self.cdf[self.cdf.len() - 1];
        let u: f64 = rng.random::<f64>() * total;
        // first j with cdf[j] > u; zero-weight targets have empty intervals
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.last_positive)
    }
}

/// One stochastic reward for candidate `i`: draws `j ~ q` and returns
/// `max(D_j − d(j, i), 0)`. Costs one query; `D_j` comes from `state`.
pub fn pull(
    instance: &ProblemInstance,
    state: &PrototypeState,
    i: usize,
    sampler: &TargetSampler,
    rng: &mut SeedRng,
) -> Result<f64> {
    if state.contains(i) {
        return Err(Error::Precondition(format!("source {i} is already chosen")));
    }
    let j = sampler.sample(rng);
    let d = instance.provider().distance(j, i)?;
    Ok((state.nearest_dist()[j] - d).max(0.0))
}

/// Reward oracle whose arms are source indices of `instance`.
pub struct GainOracle<'a> {
    instance: &'a ProblemInstance,
    state: &'a PrototypeState,
    sampler: &'a TargetSampler,
}

impl<'a> GainOracle<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        state: &'a PrototypeState,
        sampler: &'a TargetSampler,
    ) -> Self {
        Self {
            instance,
            state,
            sampler,
        }
    }
}

impl RewardOracle for GainOracle<'_> {
    #[inline]
    fn pull(&mut self, arm: usize, rng: &mut SeedRng) -> Result<f64> {
        pull(self.instance, self.state, arm, self.sampler, rng)
    }
}

/// Bernoulli arms with known means; arm `a` pays 1 with probability `means[a]`.
#[derive(Debug, Clone)]
pub struct BernoulliArms {
    pub means: Vec<f64>,
}

impl RewardOracle for BernoulliArms {
    fn pull(&mut self, arm: usize, rng: &mut SeedRng) -> Result<f64> {
        Ok(if rng.random::<f64>() < self.means[arm] {
            1.0
        } else {
            0.0
        })
    }
}

//! Acceptance criteria, each a self-contained seeded experiment with a
//! fixed tolerance and runtime limit.
//!
//! ProtoBandit runs made with the `aba` strategy by the experiments are
//! collected and re-checked against the strict query budget and the ABA
//! pull cap, so those two checks cover every such run.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use protoselect::bandit::{
    aba, aba_pull_cap, identify, pull, BaiProblem, BaiStrategy, BernoulliArms, TargetSampler,
};
use protoselect::dataset::{
    gaussian_mixture, random_instance, PointSet, ProblemInstance, TargetWeights,
};
use protoselect::eval::{brute_force_optimum, objective, AccountingMode, RunRecord};
use protoselect::exact::{build, gain, spot_greedy, swap};
use protoselect::metric::DissimilarityProvider;
use protoselect::protobandit::{protobandit, strict_query_bound, ProtoBanditConfig};
use protoselect::{PrototypeState, SeedRng};
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn outcome(
    id: u8,
    name: &'static str,
    started: Instant,
    limit: Option<Duration>,
    ok: bool,
    detail: String,
) -> CriterionOutcome {
    let elapsed = started.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let detail = match limit {
        Some(l) if !in_time => format!("{detail}; exceeded the {} s limit", l.as_secs()),
        _ => detail,
    };
    CriterionOutcome {
        id,
        name,
        passed: ok && in_time,
        detail,
        elapsed,
    }
}

/// What the budget and cap checks need from one `aba` ProtoBandit run.
#[derive(Debug, Clone)]
pub struct AbaRun {
    pub n_sources: usize,
    pub k: usize,
    pub epsilon: f64,
    pub nu: f64,
    pub delta: f64,
    pub strict_bai_queries: u64,
    pub pulls_trace: Vec<u64>,
    pub arms_trace: Vec<usize>,
}

impl AbaRun {
    fn new(n_sources: usize, config: &ProtoBanditConfig, record: &RunRecord) -> Self {
        Self {
            n_sources,
            k: record.params.k,
            epsilon: config.epsilon,
            nu: config.nu,
            delta: config.delta,
            strict_bai_queries: record.strict_bai_queries.unwrap_or(0),
            pulls_trace: record.pulls_trace.clone(),
            arms_trace: record.arms_trace.clone(),
        }
    }
}

/// Copy of `base` with dissimilarities rounded to multiples of `1/levels`,
/// which makes tied gains common.
fn quantized(base: &ProblemInstance, levels: f64) -> ProblemInstance {
    let shadow = base.provider().shadow();
    let (n_s, n_t) = (base.n_sources(), base.n_targets());
    let values = (0..n_t)
        .flat_map(|j| (0..n_s).map(move |i| (j, i)))
        .map(|(j, i)| (shadow.distance(j, i).expect("in range") * levels).round() / levels)
        .collect();
    let provider =
        DissimilarityProvider::precomputed(n_t, n_s, values).expect("values stay in [0, 1]");
    ProblemInstance::with_provider(provider, base.weights().clone(), base.k()).expect("same shape")
}

/// Build and SPOTgreedy return identical ordered prototype lists on 200
/// random instances, half of them with heavily tied dissimilarities.
pub fn greedy_equivalence() -> CriterionOutcome {
    let started = Instant::now();
    let mut rng = SeedRng::seed_from_u64(0x5eed_0001);
    let (mut mismatches, mut examples) = (0usize, Vec::new());
    for t in 0..200 {
        let n_s = rng.random_range(5..=30);
        let n_t = rng.random_range(5..=50);
        let k = rng.random_range(1..=8usize).min(n_s);
        let r = rng.random_range(1..=3usize).min(k);
        let seed: u64 = rng.random();
        let base = random_instance(n_s, n_t, k, seed).expect("valid shape");
        let inst = if t % 2 == 1 {
            quantized(&base, 4.0)
        } else {
            base
        };
        let a = build(&inst.fresh(k, false).expect("valid k"), r, seed);
        let b = spot_greedy(&inst.fresh(k, false).expect("valid k"), r, seed);
        match (a, b) {
            (Ok(a), Ok(b)) if a.chosen() == b.chosen() => {}
            (a, b) => {
                mismatches += 1;
                if examples.len() < 3 {
                    examples.push(format!(
                        "instance {t}: {:?} vs {:?}",
                        a.map(|s| s.chosen().to_vec()),
                        b.map(|s| s.chosen().to_vec())
                    ));
                }
            }
        }
    }
    let detail = format!(
        "{mismatches} of 200 instances differ{}",
        if examples.is_empty() {
            String::new()
        } else {
            format!(" ({})", examples.join("; "))
        }
    );
    outcome(
        1,
        "build / spot_greedy equivalence",
        started,
        Some(Duration::from_secs(30)),
        mismatches == 0,
        detail,
    )
}

/// Mean ProtoBandit objective over 300 runs reaches
/// `(1 − 1/e − ε)·f* − ν` on 30 brute-force instances.
pub fn approximation_guarantee(aba_runs: &mut Vec<AbaRun>) -> CriterionOutcome {
    let started = Instant::now();
    let (eps, nu, delta, runs) = (0.2, 0.05, 0.04, 300);
    let factor = 1.0 - 1.0 / std::f64::consts::E - eps;
    let mut rng = SeedRng::seed_from_u64(0x5eed_0002);
    let (mut failing, mut worst_margin) = (0usize, f64::INFINITY);
    let (mut pooled_alg, mut pooled_bound, mut pointwise, mut total) = (0.0, 0.0, 0usize, 0usize);
    for idx in 0..30 {
        let n_s = rng.random_range(8..=12);
        let n_t = rng.random_range(8..=15);
        let k = 2 + idx % 2;
        let inst = random_instance(n_s, n_t, k, rng.random()).expect("valid shape");
        let (_, best) = brute_force_optimum(&inst).expect("small instance");
        let bound = factor * best - nu;
        let mut sum = 0.0;
        for run in 0..runs {
            let config =
                ProtoBanditConfig::new(eps, nu, delta, BaiStrategy::Aba, (idx * 1000 + run) as u64)
                    .expect("admissible parameters");
            let (_, record) = protobandit(&inst.fresh(k, false).expect("valid k"), &config)
                .expect("run succeeds");
            sum += record.final_objective;
            pointwise += (record.final_objective < bound) as usize;
            total += 1;
            aba_runs.push(AbaRun::new(n_s, &config, &record));
        }
        let mean = sum / runs as f64;
        pooled_alg += mean;
        pooled_bound += bound;
        worst_margin = worst_margin.min(mean - bound);
        failing += (mean < bound) as usize;
    }
    let detail = format!(
        "{failing} of 30 instances below the bound; smallest margin {worst_margin:.4}; pooled mean {:.4} vs bound {:.4}; pointwise violations {pointwise}/{total} (informational)",
        pooled_alg / 30.0,
        pooled_bound / 30.0
    );
    let ok = failing == 0 && pooled_alg >= pooled_bound;
    outcome(
        2,
        "expected approximation guarantee",
        started,
        Some(Duration::from_secs(300)),
        ok,
        detail,
    )
}

/// Strict-mode BAI charge stays strictly below
/// `9·k·|S|·ν₀⁻²·ln(1/ε)·ln(k/δ)` on every collected `aba` run.
pub fn strict_query_budget(aba_runs: &[AbaRun]) -> CriterionOutcome {
    let started = Instant::now();
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for run in aba_runs {
        let bound = strict_query_bound(run.n_sources, run.k, run.epsilon, run.nu, run.delta);
        let ratio = run.strict_bai_queries as f64 / bound;
        worst = worst.max(ratio);
        violations += (run.strict_bai_queries as f64 >= bound) as usize;
    }
    let detail = format!(
        "{violations} of {} runs at or above the budget; largest charge/budget ratio {worst:.4}",
        aba_runs.len()
    );
    outcome(
        3,
        "strict query budget",
        started,
        None,
        violations == 0 && !aba_runs.is_empty(),
        detail,
    )
}

fn mixture_instance(
    pool: &PointSet,
    source: &Arc<PointSet>,
    from: usize,
    count: usize,
    k: usize,
) -> ProblemInstance {
    let rows: Vec<usize> = (from..from + count).collect();
    let target = Arc::new(pool.subset(&rows).expect("rows in range"));
    ProblemInstance::euclidean(
        source.clone(),
        target,
        TargetWeights::uniform(count).expect("non-empty"),
        k,
    )
    .expect("valid instance")
}

/// Matched-seed ProtoBandit runs against 1,000 and 100,000 targets make
/// identical pull counts in every iteration.
pub fn target_size_independence(aba_runs: &mut Vec<AbaRun>) -> CriterionOutcome {
    let started = Instant::now();
    let (n_s, k, small, large) = (2000, 20, 1000, 100_000);
    let pool = gaussian_mixture(10, n_s + large, 10, 0x5eed_0004).expect("valid mixture");
    let source = Arc::new(
        pool.subset(&(0..n_s).collect::<Vec<_>>())
            .expect("rows in range"),
    );
    let small_inst = mixture_instance(&pool, &source, n_s, small, k);
    let large_inst = mixture_instance(&pool, &source, n_s, large, k);
    let seeds = [11u64, 12, 13];
    let mut differing = Vec::new();
    for &seed in &seeds {
        let config = ProtoBanditConfig::new(0.2, 0.05, 0.04, BaiStrategy::Aba, seed)
            .expect("admissible parameters");
        let (_, a) = protobandit(&small_inst.fresh(k, false).expect("valid k"), &config)
            .expect("run succeeds");
        let (_, b) = protobandit(&large_inst.fresh(k, false).expect("valid k"), &config)
            .expect("run succeeds");
        if a.pulls_trace != b.pulls_trace {
            differing.push(seed);
        }
        aba_runs.push(AbaRun::new(n_s, &config, &a));
        aba_runs.push(AbaRun::new(n_s, &config, &b));
    }
    let detail = format!(
        "{} of {} seed pairs differ in per-iteration pulls",
        differing.len(),
        seeds.len()
    );
    outcome(
        4,
        "target-size independence",
        started,
        Some(Duration::from_secs(120)),
        differing.is_empty(),
        detail,
    )
}

/// ProtoBandit uses at most a tenth of SPOTgreedy's queries while keeping
/// at least 95% of its objective.
pub fn query_reduction(aba_runs: &mut Vec<AbaRun>) -> CriterionOutcome {
    let started = Instant::now();
    let (n_s, n_t, k) = (1000, 20_000, 50);
    let pool = gaussian_mixture(10, n_s + n_t, 10, 0x5eed_0005).expect("valid mixture");
    let source = Arc::new(
        pool.subset(&(0..n_s).collect::<Vec<_>>())
            .expect("rows in range"),
    );
    let inst = mixture_instance(&pool, &source, n_s, n_t, k);

    let greedy_inst = inst.fresh(k, false).expect("valid k");
    let greedy = spot_greedy(&greedy_inst, 1, 0).expect("run succeeds");
    let greedy_queries = greedy_inst.provider().queries();
    let greedy_objective = greedy.objective(inst.weights().as_slice());

    let runs = 10;
    let (mut max_queries, mut objective_sum) = (0u64, 0.0);
    for seed in 0..runs {
        let config = ProtoBanditConfig::new(0.2, 0.05, 0.04, BaiStrategy::Aba, 100 + seed)
            .expect("admissible parameters")
            .with_accounting(AccountingMode::Cached);
        let (_, record) =
            protobandit(&inst.fresh(k, false).expect("valid k"), &config).expect("run succeeds");
        max_queries = max_queries.max(record.total_queries);
        objective_sum += record.final_objective;
        aba_runs.push(AbaRun::new(n_s, &config, &record));
    }
    let mean_objective = objective_sum / runs as f64;
    let queries_ok = max_queries as f64 <= greedy_queries as f64 / 10.0;
    let objective_ok = mean_objective >= 0.95 * greedy_objective;
    let detail = format!(
        "SPOTgreedy {greedy_queries} queries, objective {greedy_objective:.4}; ProtoBandit at most {max_queries} queries ({:.2}% of SPOTgreedy), mean objective {mean_objective:.4} ({:.2}% of SPOTgreedy)",
        100.0 * max_queries as f64 / greedy_queries as f64,
        100.0 * mean_objective / greedy_objective
    );
    outcome(
        5,
        "query reduction versus SPOTgreedy",
        started,
        Some(Duration::from_secs(600)),
        queries_ok && objective_ok,
        detail,
    )
}

/// Every ABA call stays within `⌈18·n/ν₀²·ln(1/δ')⌉` pulls: the calls made
/// inside the collected ProtoBandit runs plus a sweep over arm counts.
pub fn aba_pull_cap_holds(aba_runs: &[AbaRun]) -> CriterionOutcome {
    let started = Instant::now();
    let (mut calls, mut violations) = (0usize, 0usize);
    for run in aba_runs {
        let config = ProtoBanditConfig::new(run.epsilon, run.nu, run.delta, BaiStrategy::Aba, 0)
            .expect("admissible parameters");
        let (nu0, delta0) = (config.bai_tolerance(), config.bai_error_prob(run.k));
        for (&pulls, &arms) in run.pulls_trace.iter().zip(&run.arms_trace) {
            calls += 1;
            violations += (pulls > aba_pull_cap(arms, nu0, delta0)) as usize;
        }
    }
    let mut rng = SeedRng::seed_from_u64(0x5eed_0006);
    for n in [1usize, 2, 3, 5, 10, 33, 100, 161] {
        for (nu0, delta0) in [(0.1, 0.01), (0.2, 0.05), (0.1157, 0.0008)] {
            let problem = BaiProblem::new((0..n).collect(), nu0, delta0).expect("valid problem");
            let means: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..0.8)).collect();
            let out =
                aba(&problem, &mut BernoulliArms { means }, &mut rng).expect("rewards in range");
            calls += 1;
            violations += (out.pulls > aba_pull_cap(n, nu0, delta0)) as usize;
        }
    }
    let detail = format!("{violations} of {calls} ABA calls above the cap");
    outcome(6, "ABA pull cap", started, None, violations == 0, detail)
}

/// On a planted instance with gap `2ν₀`, each strategy fails to return a
/// `ν₀`-optimal arm in at most a `δ' + 3·SE` fraction of 500 trials.
pub fn bai_correctness() -> CriterionOutcome {
    let started = Instant::now();
    let (n, nu0, delta0, trials) = (10usize, 0.1, 0.05, 500u64);
    let limit = delta0 + 3.0 * (delta0 * (1.0 - delta0) / trials as f64).sqrt();
    let problem = BaiProblem::new((0..n).collect(), nu0, delta0).expect("valid problem");
    let mut parts = Vec::new();
    let mut ok = true;
    for strategy in [BaiStrategy::Aba, BaiStrategy::Naive, BaiStrategy::KlLucb] {
        let mut failures = 0u64;
        for t in 0..trials {
            let best = (t as usize * 7) % n;
            let mut means = vec![0.4; n];
            means[best] = 0.4 + 2.0 * nu0;
            let mut rng = SeedRng::seed_from_u64(0x5eed_0007 ^ (t << 8) ^ strategy as u64);
            let out = identify(
                strategy,
                &problem,
                &mut BernoulliArms {
                    means: means.clone(),
                },
                &mut rng,
                None,
            )
            .expect("rewards in range");
            failures += (means[out.arm] < means[best] - nu0) as u64;
        }
        let rate = failures as f64 / trials as f64;
        ok &= rate <= limit;
        parts.push(format!("{strategy} {failures}/{trials}"));
    }
    let detail = format!(
        "failures {} (limit {:.4} per strategy)",
        parts.join(", "),
        limit
    );
    outcome(
        7,
        "best-arm identification correctness",
        started,
        Some(Duration::from_secs(180)),
        ok,
        detail,
    )
}

fn sorted_caches(instance: &ProblemInstance, chosen: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let shadow = instance.provider().shadow();
    (0..instance.n_targets())
        .map(|j| {
            let mut ds: Vec<f64> = chosen
                .iter()
                .map(|&i| shadow.distance(j, i).expect("in range"))
                .collect();
            ds.sort_by(f64::total_cmp);
            (
                ds.first().copied().unwrap_or(1.0),
                ds.get(1).copied().unwrap_or(1.0),
            )
        })
        .unzip()
}

fn coherent(instance: &ProblemInstance, state: &PrototypeState) -> bool {
    let (d, e) = sorted_caches(instance, state.chosen());
    state.nearest_dist() == d.as_slice() && state.second_dist() == e.as_slice()
}

fn identity_gap(instance: &ProblemInstance, state: &PrototypeState) -> f64 {
    let direct = objective(instance, state.chosen()).expect("valid set");
    (direct - state.objective(instance.weights().as_slice())).abs()
}

/// Pull unbiasedness, submodularity and monotonicity, cache coherence,
/// the objective identity, the exact BUILD query count and SWAP monotonicity.
pub fn property_suites() -> CriterionOutcome {
    let started = Instant::now();
    let mut rng = SeedRng::seed_from_u64(0x5eed_0008);
    let mut failures: Vec<String> = Vec::new();

    // pulls: 10^5 per arm against the exact gain
    let inst = random_instance(30, 20, 2, rng.random()).expect("valid shape");
    let state = build(&inst.fresh(2, false).expect("valid k"), 1, 0).expect("run succeeds");
    let sampler = TargetSampler::new(inst.weights().as_slice()).expect("positive weights");
    let mut biased = 0;
    let arms: Vec<usize> = state.remaining().into_iter().take(5).collect();
    for &i in &arms {
        let exact = gain(&inst, &state, i).expect("unchosen arm");
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| pull(&inst, &state, i, &sampler, &mut rng).expect("unchosen arm"))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if (mean - exact).abs() > 3.0 * (var / n as f64).sqrt() {
            biased += 1;
        }
    }
    if biased > 0 {
        failures.push(format!("{biased} of {} arms with biased pulls", arms.len()));
    }

    // 1,000 random triples A ⊆ B, x ∉ B
    let mut broken = 0;
    for _ in 0..1000 {
        let n_s = rng.random_range(3..=20);
        let inst =
            random_instance(n_s, rng.random_range(1..=30), 1, rng.random()).expect("valid shape");
        let x = rng.random_range(0..n_s);
        let b: Vec<usize> = (0..n_s)
            .filter(|&i| i != x && rng.random_bool(0.5))
            .collect();
        let a: Vec<usize> = b.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let f = |set: &[usize]| objective(&inst, set).expect("valid set");
        let plus = |set: &[usize]| {
            let mut s = set.to_vec();
            s.push(x);
            f(&s)
        };
        let (fa, fb, fax, fbx) = (f(&a), f(&b), plus(&a), plus(&b));
        let submodular = fax - fa >= fbx - fb - 1e-9;
        let monotone = fb >= fa - 1e-9 && fax >= fa - 1e-9 && fbx >= fb - 1e-9;
        let bounded = [fa, fb, fax, fbx]
            .iter()
            .all(|v| (-1e-12..=1.0 + 1e-12).contains(v));
        broken += (!(submodular && monotone && bounded)) as usize;
    }
    if broken > 0 {
        failures.push(format!(
            "{broken} of 1000 triples break submodularity or monotonicity"
        ));
    }

    // build + swap passes: coherence, identity, query count, monotone cost
    let (mut incoherent, mut identity, mut miscounted, mut increased, mut passes) = (0, 0, 0, 0, 0);
    for _ in 0..100 {
        let n_s = rng.random_range(4..=25);
        let n_t = rng.random_range(1..=40);
        let k = rng.random_range(1..=6usize).min(n_s - 1);
        let inst = random_instance(n_s, n_t, k, rng.random()).expect("valid shape");
        let q = inst.weights().as_slice();
        let mut state = build(&inst, 1, rng.random()).expect("run succeeds");
        let expected: u64 = (0..k).map(|t| ((n_s - t) * n_t) as u64).sum();
        miscounted += (inst.provider().queries() != expected) as usize;
        incoherent += !coherent(&inst, &state) as usize;
        identity += (identity_gap(&inst, &state) > 1e-12) as usize;
        let l = rng.random_range(1..=k);
        for _ in 0..100 {
            let (next, converged) = swap(&inst, &state, l).expect("full state");
            passes += 1;
            incoherent += !coherent(&inst, &next) as usize;
            identity += (identity_gap(&inst, &next) > 1e-12) as usize;
            increased += (next.cost(q) > state.cost(q) + 1e-12) as usize;
            state = next;
            if converged {
                break;
            }
        }
    }
    for (count, what) in [
        (incoherent, "incoherent caches"),
        (identity, "objective identity gaps above 1e-12"),
        (miscounted, "wrong BUILD query counts"),
        (increased, "SWAP passes that raised the cost"),
    ] {
        if count > 0 {
            failures.push(format!("{count} {what}"));
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "{} arms × 10^5 pulls, 1000 triples, 100 BUILD runs, {passes} SWAP passes: all hold",
            arms.len()
        )
    } else {
        failures.join("; ")
    };
    outcome(
        8,
        "property suites",
        started,
        None,
        failures.is_empty(),
        detail,
    )
}

/// Runs every criterion, calling `report` as each finishes; the result is
/// ordered by id.
pub fn run_all(mut report: impl FnMut(&CriterionOutcome)) -> Vec<CriterionOutcome> {
    let mut aba_runs = Vec::new();
    let mut out = Vec::new();
    let mut record = |o: CriterionOutcome| {
        report(&o);
        out.push(o);
    };
    record(greedy_equivalence());
    record(approximation_guarantee(&mut aba_runs));
    record(target_size_independence(&mut aba_runs));
    record(query_reduction(&mut aba_runs));
    record(strict_query_budget(&aba_runs));
    record(aba_pull_cap_holds(&aba_runs));
    record(bai_correctness());
    record(property_suites());
    out.sort_by_key(|o| o.id);
    out
}

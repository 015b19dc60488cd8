use protoselect::bandit::{
    aba, aba_pull_cap, identify, kl_lucb, naive_elimination, pull, BaiProblem, BaiStrategy,
    BernoulliArms, RewardOracle, TargetSampler,
};
use protoselect::dataset::{random_instance, ProblemInstance, TargetWeights};
use protoselect::exact::{build, gain};
use protoselect::metric::DissimilarityProvider;
use protoselect::{PrototypeState, Result, SeedRng};
use rand::SeedableRng;

fn rng(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Arm 0 has mean `0.5 + gap/2`, the rest `0.5 − gap/2`.
fn planted(n: usize, gap: f64) -> BernoulliArms {
    let mut means = vec![0.5 - gap / 2.0; n];
    means[0] = 0.5 + gap / 2.0;
    BernoulliArms { means }
}

#[test]
fn single_target_pull_is_deterministic() {
    let provider = DissimilarityProvider::precomputed(1, 2, vec![0.4, 0.9]).unwrap();
    let inst =
        ProblemInstance::with_provider(provider, TargetWeights::uniform(1).unwrap(), 1).unwrap();
    let state = PrototypeState::empty(2, 1);
    let sampler = TargetSampler::new(inst.weights().as_slice()).unwrap();
    let mut r = rng(0);
    for _ in 0..10 {
        assert!((pull(&inst, &state, 0, &sampler, &mut r).unwrap() - 0.6).abs() < 1e-15);
    }
    assert_eq!(inst.provider().queries(), 10);
}

#[test]
fn pull_is_unbiased() {
    let inst = random_instance(10, 20, 3, 5).unwrap();
    let state = build(&inst.fresh(2, false).unwrap(), 1, 0).unwrap();
    let sampler = TargetSampler::new(inst.weights().as_slice()).unwrap();
    let mut r = rng(9);
    for i in state.remaining() {
        let exact = gain(&inst, &state, i).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| pull(&inst, &state, i, &sampler, &mut r).unwrap())
            .collect();
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * se + 1e-12,
            "arm {i}: {mean} vs {exact} (se {se})"
        );
    }
}

#[test]
fn pull_rejects_chosen_arm() {
    let inst = random_instance(4, 5, 2, 1).unwrap();
    let state = build(&inst, 1, 0).unwrap();
    let sampler = TargetSampler::new(inst.weights().as_slice()).unwrap();
    assert!(pull(&inst, &state, state.chosen()[0], &sampler, &mut rng(0)).is_err());
}

#[test]
fn strategies_are_deterministic() {
    let p = BaiProblem::new((0..12).collect(), 0.15, 0.05).unwrap();
    for s in BaiStrategy::ALL {
        let a = identify(s, &p, &mut planted(12, 0.1), &mut rng(3), None).unwrap();
        let b = identify(s, &p, &mut planted(12, 0.1), &mut rng(3), None).unwrap();
        assert_eq!(a, b, "{s}");
    }
}

#[test]
fn planted_gap_is_found() {
    let (n, nu, delta, trials) = (8, 0.1, 0.05, 100);
    let p = BaiProblem::new((0..n).collect(), nu, delta).unwrap();
    let limit = delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();
    for s in [BaiStrategy::Aba, BaiStrategy::Naive, BaiStrategy::KlLucb] {
        let failures = (0..trials)
            .filter(|&t| {
                identify(s, &p, &mut planted(n, 2.0 * nu), &mut rng(t), None)
                    .unwrap()
                    .arm
                    != 0
            })
            .count();
        assert!(
            failures as f64 / trials as f64 <= limit,
            "{s}: {failures} failures"
        );
    }
}

#[test]
fn aba_respects_cap_across_sizes() {
    for n in [2usize, 5, 16, 40, 161] {
        for seed in 0..3 {
            let p = BaiProblem::new((0..n).collect(), 0.12, 0.002).unwrap();
            let out = aba(&p, &mut planted(n, 0.05), &mut rng(seed)).unwrap();
            assert!(out.pulls <= aba_pull_cap(n, 0.12, 0.002));
        }
    }
}

#[test]
fn early_stop_saves_pulls() {
    let p = BaiProblem::new((0..6).collect(), 0.1, 0.05).unwrap();
    let (mut plain, mut early) = (0u64, 0u64);
    for t in 0..100 {
        plain += kl_lucb(&p, &mut planted(6, 0.3), &mut rng(t), false, None)
            .unwrap()
            .pulls;
        early += kl_lucb(&p, &mut planted(6, 0.3), &mut rng(t), true, None)
            .unwrap()
            .pulls;
    }
    assert!(early < plain, "{early} vs {plain}");
}

#[test]
fn kl_lucb_cap_on_hard_instance() {
    let p = BaiProblem::new((0..4).collect(), 0.01, 0.01).unwrap();
    let out = kl_lucb(
        &p,
        &mut BernoulliArms {
            means: vec![0.5; 4],
        },
        &mut rng(0),
        false,
        Some(10),
    )
    .unwrap();
    assert!(out.pulls <= 10);
}

struct OutOfRange;

impl RewardOracle for OutOfRange {
    fn pull(&mut self, _arm: usize, _rng: &mut SeedRng) -> Result<f64> {
        Ok(1.5)
    }
}

#[test]
fn rewards_outside_unit_interval_are_rejected() {
    let p = BaiProblem::new(vec![0, 1], 0.1, 0.1).unwrap();
    assert!(naive_elimination(&p, &mut OutOfRange, &mut rng(0)).is_err());
}

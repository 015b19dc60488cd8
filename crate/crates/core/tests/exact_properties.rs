use proptest::prelude::*;
use protoselect::dataset::{random_instance, ProblemInstance, TargetWeights};
use protoselect::eval::{brute_force_optimum, objective};
use protoselect::exact::{build, build_traced, pam, spot_greedy, swap};
use protoselect::metric::DissimilarityProvider;
use protoselect::PrototypeState;

/// Nearest and second-nearest distances by sorting, independent of the
/// incremental cache updates.
fn recompute(instance: &ProblemInstance, chosen: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let shadow = instance.provider().shadow();
    (0..instance.n_targets())
        .map(|j| {
            let mut ds: Vec<f64> = chosen
                .iter()
                .map(|&i| shadow.distance(j, i).unwrap())
                .collect();
            ds.sort_by(f64::total_cmp);
            (
                ds.first().copied().unwrap_or(1.0),
                ds.get(1).copied().unwrap_or(1.0),
            )
        })
        .unzip()
}

fn assert_coherent(instance: &ProblemInstance, state: &PrototypeState) {
    let (d, e) = recompute(instance, state.chosen());
    assert_eq!(state.nearest_dist(), d.as_slice());
    assert_eq!(state.second_dist(), e.as_slice());
    let q = instance.weights().as_slice();
    let direct = objective(instance, state.chosen()).unwrap();
    assert!((direct - state.objective(q)).abs() <= 1e-12);
}

/// Matrix with values on a coarse grid, so gains tie often.
fn coarse_instance(n_s: usize, n_t: usize, k: usize, seed: u64) -> ProblemInstance {
    let base = random_instance(n_s, n_t, k, seed).unwrap();
    let shadow = base.provider().shadow();
    let values = (0..n_t)
        .flat_map(|j| (0..n_s).map(move |i| (j, i)))
        .map(|(j, i)| (shadow.distance(j, i).unwrap() * 4.0).round() / 4.0)
        .collect();
    let provider = DissimilarityProvider::precomputed(n_t, n_s, values).unwrap();
    ProblemInstance::with_provider(provider, TargetWeights::uniform(n_t).unwrap(), k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_and_spot_greedy_select_the_same_list(
        n_s in 5usize..30, n_t in 5usize..50, k_raw in 1usize..9, r in 1usize..4, seed in any::<u64>(), coarse in any::<bool>()
    ) {
        let k = k_raw.min(n_s);
        let r = r.min(k);
        let inst = if coarse { coarse_instance(n_s, n_t, k, seed) } else { random_instance(n_s, n_t, k, seed).unwrap() };
        let a = build(&inst.fresh(k, false).unwrap(), r, seed).unwrap();
        let b = spot_greedy(&inst.fresh(k, false).unwrap(), r, seed).unwrap();
        prop_assert_eq!(a.chosen(), b.chosen());
    }

    #[test]
    fn build_is_monotone_and_coherent(n_s in 2usize..25, n_t in 1usize..40, k_raw in 1usize..8, r in 1usize..4, seed in any::<u64>()) {
        let k = k_raw.min(n_s);
        let inst = random_instance(n_s, n_t, k, seed).unwrap();
        let (state, trace) = build_traced(&inst, r.min(k), seed).unwrap();
        prop_assert_eq!(trace.objective.len(), k);
        prop_assert!(trace.objective[0] >= 0.0);
        for w in trace.objective.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!(trace.objective.iter().all(|&f| f <= 1.0 + 1e-12));
        let mut chosen = state.chosen().to_vec();
        chosen.sort_unstable();
        chosen.dedup();
        prop_assert_eq!(chosen.len(), k);
        assert_coherent(&inst, &state);
    }

    #[test]
    fn objective_is_submodular(n_s in 3usize..20, n_t in 1usize..30, seed in any::<u64>(), picks in prop::collection::vec(any::<u8>(), 20)) {
        let inst = random_instance(n_s, n_t, 1, seed).unwrap();
        // B ⊇ A built from the picks; x outside B
        let x = picks[0] as usize % n_s;
        let b: Vec<usize> = (0..n_s).filter(|&i| i != x && picks[1 + i % 19] % 2 == 0).collect();
        let a: Vec<usize> = b.iter().copied().filter(|&i| picks[1 + (i * 7) % 19] % 3 != 0).collect();
        let with = |set: &[usize]| {
            let mut s = set.to_vec();
            s.push(x);
            objective(&inst, &s).unwrap()
        };
        let fa = objective(&inst, &a).unwrap();
        let fb = objective(&inst, &b).unwrap();
        prop_assert!(fb >= fa - 1e-12);
        prop_assert!(with(&a) - fa >= with(&b) - fb - 1e-9);
    }

    #[test]
    fn swap_never_increases_cost(n_s in 3usize..20, n_t in 1usize..30, k_raw in 1usize..5, l_raw in 1usize..5, seed in any::<u64>()) {
        let k = k_raw.min(n_s - 1);
        let l = l_raw.min(k);
        let inst = random_instance(n_s, n_t, k, seed).unwrap();
        let q = inst.weights().as_slice();
        let mut state = build(&inst, 1, seed).unwrap();
        for _ in 0..50 {
            let (next, converged) = swap(&inst, &state, l).unwrap();
            assert_coherent(&inst, &next);
            prop_assert!(next.cost(q) <= state.cost(q) + 1e-12);
            if converged {
                prop_assert_eq!(next.chosen(), state.chosen());
                // no single exchange lowers the cost
                for (slot, _) in state.chosen().iter().enumerate() {
                    for h in state.remaining() {
                        let mut alt = state.chosen().to_vec();
                        alt[slot] = h;
                        let f = objective(&inst, &alt).unwrap();
                        prop_assert!(1.0 - f >= state.cost(q) - 1e-9);
                    }
                }
                break;
            }
            state = next;
        }
    }

    #[test]
    fn greedy_never_beats_brute_force(n_s in 2usize..10, n_t in 1usize..12, k_raw in 1usize..4, seed in any::<u64>()) {
        let k = k_raw.min(n_s);
        let inst = random_instance(n_s, n_t, k, seed).unwrap();
        let (_, best) = brute_force_optimum(&inst).unwrap();
        let greedy = build(&inst, 1, seed).unwrap();
        let f = objective(&inst, greedy.chosen()).unwrap();
        prop_assert!(f <= best + 1e-12);
        prop_assert!(f >= (1.0 - 1.0 / std::f64::consts::E) * best - 1e-12);
    }
}

#[test]
fn build_query_count_is_exact() {
    for (n_s, n_t, k) in [(12, 7, 1), (12, 7, 5), (30, 11, 8), (9, 20, 9)] {
        let inst = random_instance(n_s, n_t, k, 4).unwrap();
        build(&inst, 1, 0).unwrap();
        let expected: u64 = (0..k).map(|t| ((n_s - t) * n_t) as u64).sum();
        assert_eq!(inst.provider().queries(), expected);
    }
}

#[test]
fn memoized_queries_stay_within_matrix_size() {
    let inst = random_instance(15, 20, 6, 1).unwrap();
    let memo = inst.fresh(6, true).unwrap();
    pam(&memo, 2, 2, 3, 20).unwrap();
    assert!(memo.provider().queries() <= 15 * 20);
    let plain = inst.fresh(6, false).unwrap();
    pam(&plain, 2, 2, 3, 20).unwrap();
    assert!(plain.provider().queries() > 15 * 20);
}

#[test]
fn repeated_runs_count_identically() {
    let inst = random_instance(20, 25, 5, 8).unwrap();
    let counts: Vec<u64> = (0..2)
        .map(|_| {
            let run = inst.fresh(5, false).unwrap();
            pam(&run, 2, 3, 17, 20).unwrap();
            run.provider().queries()
        })
        .collect();
    assert_eq!(counts[0], counts[1]);
}

#[test]
fn pam_states_are_coherent() {
    for seed in 0..20 {
        let inst = random_instance(14, 18, 4, seed).unwrap();
        let out = pam(&inst, 1, 2, seed, 100).unwrap();
        assert!(out.converged);
        assert_coherent(&inst, &out.state);
    }
}

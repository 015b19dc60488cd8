//! Exact greedy algorithms: generalized PAM (BUILD + SWAP) and SPOTgreedy.
//!
//! Both greedy routes evaluate every remaining candidate against every
//! target per step, so a BUILD with `r = 1` costs exactly
//! `Σ_{t<k} (|S| − t)·|T|` queries. The columns evaluated during a step are
//! kept and reused to update `D_j`/`E_j`, so updates are free.
//!
//! `build` scores candidates with `g_i = Σ_j q_j max(D_j − d(j,i), 0)`.
//! `spot_greedy` scores them with `β_i = f(M ∪ {i}) − f(M)` computed from
//! per-target best similarities. The two gains agree, and with the shared
//! tie-breaking both return the same ordered prototypes.

use rayon::prelude::*;

use crate::dataset::ProblemInstance;
use crate::metric::SIMILARITY_OFFSET;
use crate::select::{select_batch, TIE_TOLERANCE};
use crate::{seeded, Error, PrototypeState, Result};

/// Objective and cumulative query count after each added prototype.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GreedyTrace {
    pub objective: Vec<f64>,
    pub queries: Vec<u64>,
}

/// `Σ_j q_j max(D_j − d(j, i), 0)`; costs `|T|` queries.
pub fn gain(instance: &ProblemInstance, state: &PrototypeState, i: usize) -> Result<f64> {
    if state.contains(i) {
        return Err(Error::Precondition(format!("source {i} is already chosen")));
    }
    let mut column = vec![0.0; instance.n_targets()];
    instance.provider().column(i, &mut column)?;
    Ok(pam_gain(
        instance.weights().as_slice(),
        state.nearest_dist(),
        &column,
    ))
}

#[inline]
fn pam_gain(q: &[f64], nearest: &[f64], column: &[f64]) -> f64 {
    q.iter()
        .zip(nearest)
        .zip(column)
        .map(|((q, dj), d)| q * (dj - d).max(0.0))
        .sum()
}

#[inline]
fn marginal_gain(q: &[f64], best_sim: &[f64], f_current: f64, column: &[f64]) -> f64 {
    let with_candidate: f64 = q
        .iter()
        .zip(best_sim)
        .zip(column)
        .map(|((q, z), d)| q * z.max(SIMILARITY_OFFSET - d))
        .sum();
    with_candidate - f_current
}

#[derive(Clone, Copy)]
enum GainRoute {
    Pam,
    Marginal,
}

fn check_batch_size(instance: &ProblemInstance, r: usize) -> Result<()> {
    if r == 0 || r > instance.k() {
        return Err(Error::Parameter(format!(
            "batch size r = {r} must lie in [1, k = {}]",
            instance.k()
        )));
    }
    if instance.k() > instance.n_sources() {
        return Err(Error::Parameter("k exceeds the source size".into()));
    }
    Ok(())
}

fn greedy(
    instance: &ProblemInstance,
    r: usize,
    rng_seed: u64,
    route: GainRoute,
) -> Result<(PrototypeState, GreedyTrace)> {
    check_batch_size(instance, r)?;
    let provider = instance.provider();
    let q = instance.weights().as_slice();
    let n_t = instance.n_targets();
    let k = instance.k();
    let mut rng = seeded(rng_seed);
    let mut state = PrototypeState::empty(instance.n_sources(), n_t);
    let mut trace = GreedyTrace::default();
    // f(M) seen through similarities; only the marginal route reads it
    let mut best_sim = vec![0.0; n_t];
    let mut columns: Vec<f64> = Vec::new();

    while state.len() < k {
        let candidates = state.remaining();
        columns.resize(candidates.len() * n_t, 0.0);
        let f_current: f64 = q.iter().zip(&best_sim).map(|(q, z)| q * z).sum();
        let nearest = state.nearest_dist();
        let gains = columns
            .par_chunks_mut(n_t)
            .zip(candidates.par_iter())
            .map(|(col, &i)| {
                provider.column(i, col)?;
                Ok(match route {
                    GainRoute::Pam => pam_gain(q, nearest, col),
                    GainRoute::Marginal => marginal_gain(q, &best_sim, f_current, col),
                })
            })
            .collect::<Result<Vec<f64>>>()?;

        let batch = select_batch(&candidates, &gains, r.min(k - state.len()), &mut rng);
        let before = state.objective(q);
        for &i in &batch {
            let pos = candidates
                .binary_search(&i)
                .expect("batch drawn from candidates");
            let col = &columns[pos * n_t..(pos + 1) * n_t];
            state.add(i, col)?;
            if let GainRoute::Marginal = route {
                for (z, d) in best_sim.iter_mut().zip(col) {
                    *z = z.max(SIMILARITY_OFFSET - d);
                }
            }
            trace.objective.push(state.objective(q));
            trace.queries.push(provider.queries());
        }
        debug_assert!(state.objective(q) >= before - 1e-12);
    }
    Ok((state, trace))
}

/// Greedy BUILD of the generalized PAM, adding `r` prototypes per step.
///
/// When no candidate has a positive gain, or fewer than `r` do, the batch
/// is completed with candidates drawn uniformly at random.
pub fn build(instance: &ProblemInstance, r: usize, rng_seed: u64) -> Result<PrototypeState> {
    build_traced(instance, r, rng_seed).map(|(s, _)| s)
}

pub fn build_traced(
    instance: &ProblemInstance,
    r: usize,
    rng_seed: u64,
) -> Result<(PrototypeState, GreedyTrace)> {
    greedy(instance, r, rng_seed, GainRoute::Pam)
}

/// SPOTgreedy: greedy on the marginal gains `f(M ∪ {i}) − f(M)`.
pub fn spot_greedy(instance: &ProblemInstance, r: usize, rng_seed: u64) -> Result<PrototypeState> {
    spot_greedy_traced(instance, r, rng_seed).map(|(s, _)| s)
}

pub fn spot_greedy_traced(
    instance: &ProblemInstance,
    r: usize,
    rng_seed: u64,
) -> Result<(PrototypeState, GreedyTrace)> {
    greedy(instance, r, rng_seed, GainRoute::Marginal)
}

/// One SWAP pass.
///
/// For every chosen `i` and unchosen `h` the cost change of exchanging them is
/// `T_ih = Σ_j q_j K_jih` with `K_jih = min(d(j,h) − D_j, 0)` for targets not
/// served by `i`, and `K_jih = min(d(j,h), E_j) − D_j` for targets whose
/// nearest prototype is `i`. Up to `l` improving pairs with distinct `h` are
/// applied, most negative first, skipping pairs whose `i` was already
/// swapped out. Returns `converged = true`, and the state unchanged, when no
/// pair improves the cost.
///
/// A pass costs `|S \ M|·|T|` queries for the pair costs plus `k·|T|` to
/// rebuild the caches after swapping.
pub fn swap(
    instance: &ProblemInstance,
    state: &PrototypeState,
    l: usize,
) -> Result<(PrototypeState, bool)> {
    let k = instance.k();
    if state.len() != k {
        return Err(Error::Precondition(format!(
            "swap needs {k} chosen prototypes, state has {}",
            state.len()
        )));
    }
    if l == 0 || l > k {
        return Err(Error::Parameter(format!(
            "swap count l = {l} must lie in [1, {k}]"
        )));
    }
    let provider = instance.provider();
    let q = instance.weights().as_slice();
    let n_t = instance.n_targets();
    let chosen = state.chosen();
    let mut slot_of = vec![usize::MAX; instance.n_sources()];
    for (slot, &i) in chosen.iter().enumerate() {
        slot_of[i] = slot;
    }
    let served_by: Vec<usize> = state
        .nearest_idx()
        .iter()
        .map(|n| slot_of[n.expect("non-empty state serves every target")])
        .collect();
    let (dn, ds) = (state.nearest_dist(), state.second_dist());

    let candidates = state.remaining();
    // per candidate h: T_ih for every chosen slot
    let costs = candidates
        .par_iter()
        .map_init(
            || vec![0.0; n_t],
            |col, &h| {
                provider.column(h, col)?;
                let mut base = 0.0;
                let mut loss = vec![0.0; k];
                for j in 0..n_t {
                    let d = col[j];
                    let other = (d - dn[j]).min(0.0);
                    base += q[j] * other;
                    loss[served_by[j]] += q[j] * ((d.min(ds[j]) - dn[j]) - other);
                }
                Ok(loss.into_iter().map(|x| base + x).collect::<Vec<f64>>())
            },
        )
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(candidates.len() * k);
    for (hp, &h) in candidates.iter().enumerate() {
        for (slot, &i) in chosen.iter().enumerate() {
            pairs.push((costs[hp][slot], i, h));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    if pairs.first().is_none_or(|p| p.0 >= -TIE_TOLERANCE) {
        return Ok((state.clone(), true));
    }

    let mut picked: Vec<(f64, usize, usize)> = Vec::with_capacity(l);
    for &p in &pairs {
        if picked.len() == l || p.0 >= -TIE_TOLERANCE {
            break;
        }
        if picked.iter().all(|x| x.2 != p.2) {
            picked.push(p);
        }
    }
    let apply = |pairs: &[(f64, usize, usize)]| -> Result<PrototypeState> {
        let mut next = chosen.to_vec();
        let mut out = Vec::new();
        for &(_, i, h) in pairs {
            if out.contains(&i) {
                continue;
            }
            let slot = slot_of[i];
            next[slot] = h;
            out.push(i);
        }
        PrototypeState::from_chosen(provider, &next)
    };
    let mut next = apply(&picked)?;
    // Exchanges were priced against the current set; if several of them
    // interact badly fall back to the single best one, whose change is exact.
    if picked.len() > 1 && next.cost(q) > state.cost(q) + pairs[0].0 {
        next = apply(&picked[..1])?;
    }
    Ok((next, false))
}

/// Result of a full BUILD + SWAP run.
#[derive(Debug, Clone)]
pub struct PamOutcome {
    pub state: PrototypeState,
    pub swap_passes: usize,
    pub converged: bool,
}

/// Generalized PAM: BUILD with batch size `r`, then SWAP passes of up to
/// `l` exchanges until no exchange improves or `max_passes` is reached.
pub fn pam(
    instance: &ProblemInstance,
    r: usize,
    l: usize,
    rng_seed: u64,
    max_passes: usize,
) -> Result<PamOutcome> {
    let mut state = build(instance, r, rng_seed)?;
    let mut passes = 0;
    while passes < max_passes {
        let (next, converged) = swap(instance, &state, l)?;
        passes += 1;
        state = next;
        if converged {
            return Ok(PamOutcome {
                state,
                swap_passes: passes,
                converged: true,
            });
        }
    }
    Ok(PamOutcome {
        state,
        swap_passes: passes,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dataset::{PointSet, TargetWeights};
    use crate::metric::DissimilarityProvider;

    fn matrix_instance(
        n_t: usize,
        n_s: usize,
        d: Vec<f64>,
        q: Vec<f64>,
        k: usize,
    ) -> ProblemInstance {
        let provider = DissimilarityProvider::precomputed(n_t, n_s, d).unwrap();
        ProblemInstance::with_provider(provider, TargetWeights::new(q).unwrap(), k).unwrap()
    }

    fn points(rows: &[&[f64]]) -> Arc<PointSet> {
        Arc::new(
            PointSet::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), None)
                .unwrap(),
        )
    }

    #[test]
    fn gain_on_empty_state() {
        let inst = matrix_instance(1, 1, vec![0.3], vec![1.0], 1);
        let s = PrototypeState::empty(1, 1);
        assert!((gain(&inst, &s, 0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(inst.provider().queries(), 1);
    }

    #[test]
    fn gain_hand_evaluated() {
        // source 0 fixes D = [0.2, 0.6]; candidate 1 sits at (0.4, 0.1)
        let inst = matrix_instance(2, 2, vec![0.2, 0.4, 0.6, 0.1], vec![0.5, 0.5], 2);
        let mut s = PrototypeState::empty(2, 2);
        s.add(0, &[0.2, 0.6]).unwrap();
        assert!((gain(&inst, &s, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(gain(&inst, &s, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn gain_clamps_to_zero() {
        let inst = matrix_instance(2, 2, vec![0.1, 0.5, 0.2, 0.9], vec![0.5, 0.5], 2);
        let mut s = PrototypeState::empty(2, 2);
        s.add(0, &[0.1, 0.2]).unwrap();
        assert_eq!(gain(&inst, &s, 1).unwrap(), 0.0);
    }

    #[test]
    fn build_symmetric_triangle() {
        let p = points(&[&[0.0, 0.0], &[10.0, 0.0], &[0.0, 10.0]]);
        let inst = ProblemInstance::euclidean(p.clone(), p, TargetWeights::uniform(3).unwrap(), 2)
            .unwrap();
        let s = build(&inst, 1, 0).unwrap();
        assert_eq!(s.chosen()[0], 0);
        // the remaining two are symmetric: lowest index wins
        assert_eq!(s.chosen(), &[0, 1]);
        assert_eq!(spot_greedy(&inst, 1, 0).unwrap().chosen(), s.chosen());
    }

    #[test]
    fn build_exhausts_source() {
        let inst = matrix_instance(2, 3, vec![0.1, 0.5, 0.9, 0.7, 0.2, 0.4], vec![0.5, 0.5], 3);
        let s = build(&inst, 1, 1).unwrap();
        let mut all = s.chosen().to_vec();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
        // f(S) = 0.5·0.9 + 0.5·0.8
        assert!((s.objective(inst.weights().as_slice()) - 0.85).abs() < 1e-12);
    }

    #[test]
    fn duplicate_sources_take_random_fill() {
        let p = points(&[&[1.0], &[1.0]]);
        let t = points(&[&[0.0], &[2.0]]);
        let inst = ProblemInstance::euclidean(p, t, TargetWeights::uniform(2).unwrap(), 2).unwrap();
        let s = build(&inst, 1, 5).unwrap();
        assert_eq!(s.chosen(), &[0, 1]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn build_rejects_bad_batch() {
        let inst = matrix_instance(1, 2, vec![0.1, 0.2], vec![1.0], 1);
        assert!(matches!(build(&inst, 2, 0), Err(Error::Parameter(_))));
        assert!(matches!(build(&inst, 0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn build_query_count_formula() {
        let d: Vec<f64> = (0..4 * 6).map(|x| ((x * 7) % 11) as f64 / 11.0).collect();
        let inst = matrix_instance(4, 6, d, vec![0.25; 4], 3);
        build(&inst, 1, 0).unwrap();
        assert_eq!(inst.provider().queries(), (6 + 5 + 4) * 4);
    }

    #[test]
    fn spot_first_gain_is_singleton_objective() {
        let inst = matrix_instance(2, 2, vec![0.3, 0.1, 0.5, 0.8], vec![0.5, 0.5], 1);
        // f({0}) = 0.5·0.7 + 0.5·0.5 = 0.6; f({1}) = 0.5·0.9 + 0.5·0.2 = 0.55
        let s = spot_greedy(&inst, 1, 0).unwrap();
        assert_eq!(s.chosen(), &[0]);
        assert!((s.objective(inst.weights().as_slice()) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn swap_moves_to_medoid() {
        let p = points(&[&[0.0], &[1.0], &[100.0]]);
        let inst = ProblemInstance::euclidean(p.clone(), p, TargetWeights::uniform(3).unwrap(), 1)
            .unwrap();
        let start = PrototypeState::from_chosen(inst.provider(), &[2]).unwrap();
        let (next, converged) = swap(&inst, &start, 1).unwrap();
        assert!(!converged);
        assert_eq!(next.chosen(), &[1]);
        let q = inst.weights().as_slice();
        assert!(next.cost(q) < start.cost(q));
        let (again, converged) = swap(&inst, &next, 1).unwrap();
        assert!(converged);
        assert_eq!(again, next);
    }

    #[test]
    fn swap_requires_full_state() {
        let inst = matrix_instance(1, 3, vec![0.1, 0.2, 0.3], vec![1.0], 2);
        let s = PrototypeState::from_chosen(inst.provider(), &[0]).unwrap();
        assert!(matches!(swap(&inst, &s, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn pam_converges() {
        let p = Arc::new(crate::dataset::gaussian_mixture(3, 40, 2, 2).unwrap());
        let inst = ProblemInstance::euclidean(p.clone(), p, TargetWeights::uniform(40).unwrap(), 3)
            .unwrap();
        let out = pam(&inst, 1, 2, 0, 50).unwrap();
        assert!(out.converged);
        let built = build(&inst.fresh(3, false).unwrap(), 1, 0).unwrap();
        let q = inst.weights().as_slice();
        assert!(out.state.cost(q) <= built.cost(q) + 1e-12);
    }
}

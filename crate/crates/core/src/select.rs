//! Batch selection shared by the greedy algorithms.

use rand::seq::index;

use crate::SeedRng;

/// Gains closer than this count as tied; the lower source index wins.
/// Two sums of the same terms in a different order can differ by a few ulps,
/// which must not decide a tie.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

/// Picks `want` candidates: the largest strictly positive gains first
/// (lowest index among ties), then a uniform random fill from the rest.
///
/// `candidates` must be ascending and aligned with `gains`. The RNG is only
/// touched when a random fill is needed.
pub(crate) fn select_batch(
    candidates: &[usize],
    gains: &[f64],
    want: usize,
    rng: &mut SeedRng,
) -> Vec<usize> {
    debug_assert_eq!(candidates.len(), gains.len());
    let want = want.min(candidates.len());
    let mut taken = vec![false; candidates.len()];
    let mut batch = Vec::with_capacity(want);
    while batch.len() < want {
        let best = (0..gains.len())
            .filter(|&p| !taken[p] && gains[p] > 0.0)
            .map(|p| gains[p])
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            break;
        }
        // candidates ascend, so the first position within tolerance is the lowest index
        let pos = (0..gains.len())
            .find(|&p| !taken[p] && gains[p] > 0.0 && gains[p] >= best - TIE_TOLERANCE)
            .expect("a maximal gain exists");
        taken[pos] = true;
        batch.push(candidates[pos]);
    }
    let missing = want - batch.len();
    if missing > 0 {
        let pool: Vec<usize> = (0..candidates.len()).filter(|&p| !taken[p]).collect();
        for p in index::sample(rng, pool.len(), missing) {
            batch.push(candidates[pool[p]]);
        }
    }
    batch
}

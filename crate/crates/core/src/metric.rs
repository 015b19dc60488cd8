//! Dissimilarity oracle with exact query accounting.
//!
//! Every evaluation of `d(j, i)` bumps an atomic counter. With memoization
//! enabled (the "SPOT_M" baseline) a value is evaluated at most once and
//! cache hits are free, so a whole run costs at most `|S|·|T|` queries.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::dataset::PointSet;
use crate::{Error, Result};

/// Similarity offset `C` in `Z = C − d`.
pub const SIMILARITY_OFFSET: f64 = 1.0;

// Rounding slack allowed above 1 before a value counts as unnormalized.
const NORMALIZATION_SLACK: f64 = 1e-12;

const EMPTY_SLOT: u64 = u64::MAX;

#[derive(Debug)]
enum Kind {
    EuclideanNormalized {
        source: Arc<PointSet>,
        target: Arc<PointSet>,
        scale: f64,
    },
    /// Row-major `|T| × |S|` matrix.
    Precomputed {
        n_targets: usize,
        n_sources: usize,
        values: Arc<Vec<f64>>,
    },
}

impl Kind {
    fn n_targets(&self) -> usize {
        match self {
            Kind::EuclideanNormalized { target, .. } => target.len(),
            Kind::Precomputed { n_targets, .. } => *n_targets,
        }
    }

    fn n_sources(&self) -> usize {
        match self {
            Kind::EuclideanNormalized { source, .. } => source.len(),
            Kind::Precomputed { n_sources, .. } => *n_sources,
        }
    }

    #[inline]
    fn eval(&self, j: usize, i: usize) -> Result<f64> {
        let v = match self {
            Kind::EuclideanNormalized {
                source,
                target,
                scale,
            } => {
                let sq: f64 = target
                    .row(j)
                    .iter()
                    .zip(source.row(i))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                sq.sqrt() / scale
            }
            Kind::Precomputed {
                n_sources, values, ..
            } => values[j * n_sources + i],
        };
        if v > 1.0 {
            if v <= 1.0 + NORMALIZATION_SLACK {
                return Ok(1.0);
            }
            return Err(Error::Normalization { value: v });
        }
        Ok(v)
    }
}

#[derive(Debug)]
struct MemoCache {
    n_sources: usize,
    // f64 bit patterns; EMPTY_SLOT marks a value not yet evaluated.
    slots: Vec<AtomicU64>,
}

/// The oracle `d: T × S → [0, 1]`.
///
/// Safe to share across threads: the counter is atomic and memo slots are
/// filled with compare-and-swap, so concurrent callers never double count.
#[derive(Debug)]
pub struct DissimilarityProvider {
    kind: Arc<Kind>,
    counter: AtomicU64,
    cache: Option<MemoCache>,
}

impl DissimilarityProvider {
    fn from_kind(kind: Arc<Kind>, memoize: bool) -> Self {
        let cache = memoize.then(|| MemoCache {
            n_sources: kind.n_sources(),
            slots: (0..kind.n_targets() * kind.n_sources())
                .map(|_| AtomicU64::new(EMPTY_SLOT))
                .collect(),
        });
        Self {
            kind,
            counter: AtomicU64::new(0),
            cache,
        }
    }

    /// `‖t_j − s_i‖₂ / scale`; `scale` must bound every queried distance.
    pub fn euclidean(source: Arc<PointSet>, target: Arc<PointSet>, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!(
                "normalization constant {scale} must be positive"
            )));
        }
        if source.dim() != target.dim() {
            return Err(Error::Consistency(format!(
                "source dimension {} differs from target dimension {}",
                source.dim(),
                target.dim()
            )));
        }
        Ok(Self::from_kind(
            Arc::new(Kind::EuclideanNormalized {
                source,
                target,
                scale,
            }),
            false,
        ))
    }

    /// Euclidean distance scaled by [`compute_normalization`].
    pub fn euclidean_normalized(source: Arc<PointSet>, target: Arc<PointSet>) -> Result<Self> {
        let scale = compute_normalization(&source, &target)?;
        Self::euclidean(source, target, scale)
    }

    /// Row-major `n_targets × n_sources` matrix with entries in `[0, 1]`.
    pub fn precomputed(n_targets: usize, n_sources: usize, values: Vec<f64>) -> Result<Self> {
        if n_targets == 0 || n_sources == 0 {
            return Err(Error::EmptyInput);
        }
        if values.len() != n_targets * n_sources {
            return Err(Error::Consistency(format!(
                "{} values for a {n_targets}x{n_sources} matrix",
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Normalization { value: v });
        }
        Ok(Self::from_kind(
            Arc::new(Kind::Precomputed {
                n_targets,
                n_sources,
                values: Arc::new(values),
            }),
            false,
        ))
    }

    /// Matrix stored as a point set (one row per target), e.g. from the
    /// binary matrix format.
    pub fn from_matrix_rows(matrix: &PointSet) -> Result<Self> {
        Self::precomputed(matrix.len(), matrix.dim(), matrix.values().to_vec())
    }

    pub fn memoized(self, memoize: bool) -> Self {
        Self::from_kind(self.kind, memoize)
    }

    /// Same dissimilarity, zeroed counter and empty cache.
    pub fn fresh(&self, memoize: bool) -> Self {
        Self::from_kind(self.kind.clone(), memoize)
    }

    /// Non-memoized copy whose counter nobody reads; evaluation code uses
    /// it so scoring never shows up in an algorithm's query count.
    pub fn shadow(&self) -> Self {
        self.fresh(false)
    }

    pub fn n_targets(&self) -> usize {
        self.kind.n_targets()
    }

    pub fn n_sources(&self) -> usize {
        self.kind.n_sources()
    }

    pub fn is_memoized(&self) -> bool {
        self.cache.is_some()
    }

    /// Total underlying evaluations so far.
    pub fn queries(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    fn check(&self, j: usize, i: usize) -> Result<()> {
        if j >= self.n_targets() || i >= self.n_sources() {
            return Err(Error::Bounds {
                target: j,
                source_index: i,
                n_targets: self.n_targets(),
                n_sources: self.n_sources(),
            });
        }
        Ok(())
    }

    #[inline]
    fn lookup(&self, j: usize, i: usize) -> Result<f64> {
        match &self.cache {
            None => {
                let v = self.kind.eval(j, i)?;
                self.counter.fetch_add(1, Ordering::Relaxed);
                Ok(v)
            }
            Some(cache) => {
                let slot = &cache.slots[j * cache.n_sources + i];
                let bits = slot.load(Ordering::Acquire);
                if bits != EMPTY_SLOT {
                    return Ok(f64::from_bits(bits));
                }
                let v = self.kind.eval(j, i)?;
                if slot
                    .compare_exchange(EMPTY_SLOT, v.to_bits(), Ordering::AcqRel, Ordering::Acquire)
                    .is_ok()
                {
                    self.counter.fetch_add(1, Ordering::Relaxed);
                }
                Ok(v)
            }
        }
    }

    /// `d(j, i)` for target `j` and source `i`.
    pub fn distance(&self, j: usize, i: usize) -> Result<f64> {
        self.check(j, i)?;
        self.lookup(j, i)
    }

    /// `1 − d(j, i)`.
    pub fn similarity(&self, j: usize, i: usize) -> Result<f64> {
        Ok(SIMILARITY_OFFSET - self.distance(j, i)?)
    }

    /// Fills `out[j] = d(j, i)` for every target; `|T|` queries unless cached.
    pub fn column(&self, i: usize, out: &mut [f64]) -> Result<()> {
        let n_targets = self.n_targets();
        if out.len() != n_targets {
            return Err(Error::Consistency(format!(
                "column buffer of {} for {n_targets} targets",
                out.len()
            )));
        }
        self.check(0, i)?;
        if self.cache.is_some() {
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = self.lookup(j, i)?;
            }
            return Ok(());
        }
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = self.kind.eval(j, i)?;
        }
        self.counter.fetch_add(n_targets as u64, Ordering::Relaxed);
        Ok(())
    }
}

/// Upper bound on every `‖t_j − s_i‖₂`: the length of the diagonal of the
/// bounding box of `source ∪ target`. Degenerate (zero) boxes give 1.
pub fn compute_normalization(source: &PointSet, target: &PointSet) -> Result<f64> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput);
    }
    if source.dim() != target.dim() {
        return Err(Error::Consistency(
            "source and target dimensions differ".into(),
        ));
    }
    let d = source.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for set in [source, target] {
        for r in 0..set.len() {
            for (c, &v) in set.row(r).iter().enumerate() {
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }
    }
    let diag = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l) * (h - l))
        .sum::<f64>()
        .sqrt();
    Ok(if diag > 0.0 { diag } else { 1.0 })
}

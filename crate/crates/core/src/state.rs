use crate::metric::DissimilarityProvider;
use crate::{Error, Result};

/// Chosen prototypes plus, per target, the nearest and second-nearest
/// chosen dissimilarities.
///
/// With nothing chosen every `D_j` (and `E_j`) is 1, the largest possible
/// dissimilarity. `E_j` stays 1 until a second prototype is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeState {
    chosen: Vec<usize>,
    member: Vec<bool>,
    nearest_dist: Vec<f64>,
    second_dist: Vec<f64>,
    nearest_idx: Vec<Option<usize>>,
}

impl PrototypeState {
    pub fn empty(n_sources: usize, n_targets: usize) -> Self {
        Self {
            chosen: Vec::new(),
            member: vec![false; n_sources],
            nearest_dist: vec![1.0; n_targets],
            second_dist: vec![1.0; n_targets],
            nearest_idx: vec![None; n_targets],
        }
    }

    /// Chosen source indices in selection order.
    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.member.get(i).copied().unwrap_or(false)
    }

    pub fn n_sources(&self) -> usize {
        self.member.len()
    }

    pub fn n_targets(&self) -> usize {
        self.nearest_dist.len()
    }

    /// `D_j` for every target.
    pub fn nearest_dist(&self) -> &[f64] {
        &self.nearest_dist
    }

    /// `E_j` for every target.
    pub fn second_dist(&self) -> &[f64] {
        &self.second_dist
    }

    /// Source index attaining `D_j`; the earliest chosen wins ties.
    pub fn nearest_idx(&self) -> &[Option<usize>] {
        &self.nearest_idx
    }

    /// Unchosen source indices, ascending.
    pub fn remaining(&self) -> Vec<usize> {
        (0..self.member.len())
            .filter(|&i| !self.member[i])
            .collect()
    }

    /// Adds source `i` given its dissimilarity to every target.
    pub fn add(&mut self, i: usize, column: &[f64]) -> Result<()> {
        if i >= self.member.len() {
            return Err(Error::Parameter(format!("source index {i} out of range")));
        }
        if self.member[i] {
            return Err(Error::Precondition(format!("source {i} already chosen")));
        }
        if column.len() != self.nearest_dist.len() {
            return Err(Error::Consistency(
                "column length differs from target count".into(),
            ));
        }
        for (j, &d) in column.iter().enumerate() {
            if self.nearest_idx[j].is_none() || d < self.nearest_dist[j] {
                self.second_dist[j] = self.nearest_dist[j];
                self.nearest_dist[j] = d;
                self.nearest_idx[j] = Some(i);
            } else if d < self.second_dist[j] {
                self.second_dist[j] = d;
            }
        }
        self.member[i] = true;
        self.chosen.push(i);
        Ok(())
    }

    /// Rebuilds the caches for `chosen` from scratch, `|chosen|·|T|` queries.
    pub fn from_chosen(provider: &DissimilarityProvider, chosen: &[usize]) -> Result<Self> {
        let mut state = Self::empty(provider.n_sources(), provider.n_targets());
        let mut column = vec![0.0; provider.n_targets()];
        for &i in chosen {
            provider.column(i, &mut column)?;
            state.add(i, &column)?;
        }
        Ok(state)
    }

    /// `Σ_j q_j D_j`.
    pub fn cost(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .zip(&self.nearest_dist)
            .map(|(q, d)| q * d)
            .sum()
    }

    /// `f(M) = 1 − Σ_j q_j D_j`, which is 0 for the empty set.
    pub fn objective(&self, weights: &[f64]) -> f64 {
        1.0 - self.cost(weights)
    }
}

//! Bradley-Terry probability algebra and maximum-likelihood fitting.
//!
//! Strengths `gamma` are positive and identified only up to a common scale;
//! scores are their natural logarithms. A [`VoteMatrix`] holds raw pairwise
//! tallies for one group of samples, and [`mm_fit`] turns it into a
//! [`FitResult`] with the minorize-maximize iteration.

mod fit;
pub mod io;
pub(crate) mod prob;
mod simulate;

pub use fit::{
    check_connectivity, log_likelihood, log_likelihood_from_scores, mm_fit, mm_fit_observed, score_gradient,
    stationarity_residual, Connectivity, FitConfig, FitResult, Sweep,
};
pub use prob::{pairwise_prob, prob_from_scores, ranking_prob, win_prob, win_probs};
pub use simulate::simulate_votes;

use crate::error::{Error, Result};

/// Square tally of pairwise wins: `wins(i, j)` raters preferred `i` over `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteMatrix {
    m: usize,
    wins: Vec<u64>,
}

impl VoteMatrix {
    pub fn zeros(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::domain(format!("vote matrix needs at least 2 samples, got {m}")));
        }
        Ok(Self { m, wins: vec![0; m * m] })
    }

    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let mut out = Self::zeros(m)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::Dimension { expected: m, found: row.len() });
            }
            if row[i] != 0 {
                return Err(Error::domain(format!("diagonal entry ({i}, {i}) must be zero")));
            }
            out.wins[i * m..(i + 1) * m].copy_from_slice(row);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.m + j]
    }

    /// Number of comparisons between `i` and `j` in either direction.
    #[inline]
    pub fn pairings(&self, i: usize, j: usize) -> u64 {
        self.wins(i, j) + self.wins(j, i)
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.wins[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.wins.chunks(self.m)
    }

    /// Records one more vote for `winner` over `loser`.
    pub fn record(&mut self, winner: usize, loser: usize) -> Result<()> {
        self.add(winner, loser, 1)
    }

    pub fn add(&mut self, winner: usize, loser: usize, count: u64) -> Result<()> {
        if winner >= self.m || loser >= self.m {
            return Err(Error::domain(format!(
                "index out of range for {} samples: ({winner}, {loser})",
                self.m
            )));
        }
        if winner == loser {
            return Err(Error::domain("a sample cannot be compared with itself"));
        }
        self.wins[winner * self.m + loser] += count;
        Ok(())
    }

    pub fn total_votes(&self) -> u64 {
        self.wins.iter().sum()
    }
}

/// Row sums of the vote matrix: total wins per sample.
pub fn wins_vector(votes: &VoteMatrix) -> Vec<u64> {
    votes.rows().map(|r| r.iter().sum()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide every strength by the last sample's strength.
    #[default]
    ReferenceSample,
    None,
}

/// Positive strengths together with their log-scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    gamma: Vec<f64>,
    s: Vec<f64>,
    normalization: Normalization,
}

impl ScoreVector {
    pub fn from_gammas(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::domain("score vector must not be empty"));
        }
        if let Some((i, g)) = gamma.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::domain(format!("gamma[{i}] = {g} is not a positive finite value")));
        }
        let s = gamma.iter().map(|g| g.ln()).collect();
        Ok(Self { gamma, s, normalization: Normalization::None })
    }

    pub fn from_scores(s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::domain("score vector must not be empty"));
        }
        if let Some((i, v)) = s.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::domain(format!("score[{i}] = {v} is not finite")));
        }
        let gamma: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        if gamma.iter().any(|g| *g == 0.0 || g.is_infinite()) {
            return Err(Error::domain("scores out of representable strength range"));
        }
        Ok(Self { gamma, s, normalization: Normalization::None })
    }

    /// Rescales so the last sample has strength exactly 1.
    pub fn normalized(mut self, normalization: Normalization) -> Self {
        if normalization == Normalization::ReferenceSample {
            let reference = *self.gamma.last().expect("non-empty");
            for g in &mut self.gamma {
                *g /= reference;
            }
            *self.gamma.last_mut().expect("non-empty") = 1.0;
            self.s = self.gamma.iter().map(|g| g.ln()).collect();
        }
        self.normalization = normalization;
        self
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn scores(&self) -> &[f64] {
        &self.s
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Strengths divided by sample `reference`'s strength.
    pub fn ratios_to(&self, reference: usize) -> Vec<f64> {
        let r = self.gamma[reference];
        self.gamma.iter().map(|g| g / r).collect()
    }

    /// Sample indices sorted from strongest to weakest.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.s[b].total_cmp(&self.s[a]).then(a.cmp(&b)));
        idx
    }
}

/// A best-to-worst ordering of a subset of samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    subset: Vec<usize>,
    order: Vec<usize>,
}

impl Ranking {
    pub fn new(subset: Vec<usize>, order: Vec<usize>) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::domain("ranking subset must not be empty"));
        }
        let mut sorted_subset = subset.clone();
        sorted_subset.sort_unstable();
        if sorted_subset.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("ranking subset contains repeated indices"));
        }
        let mut sorted_order = order.clone();
        sorted_order.sort_unstable();
        if sorted_order != sorted_subset {
            return Err(Error::domain("ranking order is not a permutation of its subset"));
        }
        Ok(Self { subset, order })
    }

    /// Ranking whose subset is exactly the elements of `order`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        Self::new(order.clone(), order)
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

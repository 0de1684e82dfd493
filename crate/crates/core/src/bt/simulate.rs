use rand::Rng;

use super::{pairwise_prob, VoteMatrix};
use crate::error::Result;

/// Draws `votes_per_pair` independent forced-choice votes for every unordered
/// pair, each won by the first sample with its Bradley-Terry probability.
pub fn simulate_votes<R: Rng + ?Sized>(
    gammas: &[f64],
    votes_per_pair: u64,
    rng: &mut R,
) -> Result<VoteMatrix> {
    let mut votes = VoteMatrix::zeros(gammas.len())?;
    for i in 0..gammas.len() {
        for j in i + 1..gammas.len() {
            let p = pairwise_prob(gammas[i], gammas[j])?;
            let first = (0..votes_per_pair).filter(|_| rng.random::<f64>() < p).count() as u64;
            votes.add(i, j, first)?;
            votes.add(j, i, votes_per_pair - first)?;
        }
    }
    Ok(votes)
}

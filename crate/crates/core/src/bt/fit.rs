use super::{wins_vector, Normalization, ScoreVector, VoteMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Stop once the largest per-sample strength change falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub normalization: Normalization,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_iterations: 10_000, normalization: Normalization::ReferenceSample }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub scores: ScoreVector,
    pub iterations: usize,
    /// Largest absolute strength change in the last sweep.
    pub final_delta: f64,
    pub log_likelihood: f64,
    pub converged: bool,
}

/// Progress of one MM sweep, reported to [`mm_fit_observed`] observers.
/// Sweep 0 describes the all-ones starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub max_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Connectivity {
    Connected,
    /// No sample in `lower` ever beat a sample in `upper`.
    Disconnected {
        lower: Vec<usize>,
        upper: Vec<usize>,
    },
}

impl Connectivity {
    pub fn is_connected(&self) -> bool {
        matches!(self, Connectivity::Connected)
    }
}

fn reachable(votes: &VoteMatrix, start: usize, forward: bool) -> Vec<bool> {
    let m = votes.len();
    let mut seen = vec![false; m];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        let edge = |j: usize| if forward { votes.wins(i, j) } else { votes.wins(j, i) };
        let fresh: Vec<usize> = (0..m).filter(|&j| !seen[j] && edge(j) > 0).collect();
        for j in fresh {
            seen[j] = true;
            stack.push(j);
        }
    }
    seen
}

/// Checks that the "beats" graph (edge `i -> j` when `i` won against `j` at
/// least once) is strongly connected.
pub fn check_connectivity(votes: &VoteMatrix) -> Connectivity {
    let split = |seen: Vec<bool>, seen_is_lower: bool| {
        let (inside, outside): (Vec<usize>, Vec<usize>) = (0..votes.len()).partition(|&i| seen[i]);
        if seen_is_lower {
            Connectivity::Disconnected { lower: inside, upper: outside }
        } else {
            Connectivity::Disconnected { lower: outside, upper: inside }
        }
    };
    // Everything reachable from 0 never beats anything unreachable from it.
    let fwd = reachable(votes, 0, true);
    if fwd.iter().any(|s| !s) {
        return split(fwd, true);
    }
    // Samples that cannot reach 0 never beat those that can.
    let back = reachable(votes, 0, false);
    if back.iter().any(|s| !s) {
        return split(back, false);
    }
    Connectivity::Connected
}

fn check_dims(votes: &VoteMatrix, scores: &ScoreVector) -> Result<()> {
    if votes.len() != scores.len() {
        return Err(Error::Dimension { expected: votes.len(), found: scores.len() });
    }
    Ok(())
}

/// Bradley-Terry log-likelihood written on strengths:
/// `sum_{i != j} w_ij ln g_i - w_ij ln(g_i + g_j)`.
pub fn log_likelihood(votes: &VoteMatrix, scores: &ScoreVector) -> Result<f64> {
    check_dims(votes, scores)?;
    Ok(ll_gamma(votes, scores.gamma()))
}

fn ll_gamma(votes: &VoteMatrix, gamma: &[f64]) -> f64 {
    let m = votes.len();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let w = votes.wins(i, j);
            if i != j && w > 0 {
                total += w as f64 * (gamma[i].ln() - (gamma[i] + gamma[j]).ln());
            }
        }
    }
    total
}

/// The same log-likelihood written on log-scores, with `ln(e^a + e^b)`
/// evaluated in shifted form.
pub fn log_likelihood_from_scores(votes: &VoteMatrix, scores: &ScoreVector) -> Result<f64> {
    check_dims(votes, scores)?;
    let s = scores.scores();
    let m = votes.len();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let w = votes.wins(i, j);
            if i != j && w > 0 {
                let hi = s[i].max(s[j]);
                let lse = hi + ((s[i] - hi).exp() + (s[j] - hi).exp()).ln();
                total += w as f64 * (s[i] - lse);
            }
        }
    }
    Ok(total)
}

/// Gradient of the log-likelihood with respect to each log-score:
/// `W_i - sum_j N_ij g_i / (g_i + g_j)`.
pub fn score_gradient(votes: &VoteMatrix, scores: &ScoreVector) -> Result<Vec<f64>> {
    check_dims(votes, scores)?;
    let g = scores.gamma();
    let wins = wins_vector(votes);
    Ok((0..votes.len())
        .map(|i| {
            let expected: f64 = (0..votes.len())
                .filter(|&j| j != i)
                .map(|j| votes.pairings(i, j) as f64 * g[i] / (g[i] + g[j]))
                .sum();
            wins[i] as f64 - expected
        })
        .collect())
}

/// Largest absolute entry of [`score_gradient`]; zero at a stationary point.
pub fn stationarity_residual(votes: &VoteMatrix, scores: &ScoreVector) -> Result<f64> {
    Ok(score_gradient(votes, scores)?.into_iter().fold(0.0, |acc, g| acc.max(g.abs())))
}

fn check_preconditions(votes: &VoteMatrix, config: &FitConfig) -> Result<()> {
    if !(config.tolerance.is_finite() && config.tolerance > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive and finite, got {}",
            config.tolerance
        )));
    }
    if let Some(sample) = wins_vector(votes).iter().position(|&w| w == 0) {
        return Err(Error::ZeroWins { sample });
    }
    if let Connectivity::Disconnected { lower, upper } = check_connectivity(votes) {
        return Err(Error::Disconnected { lower, upper });
    }
    Ok(())
}

/// Fits strengths by the minorize-maximize iteration
/// `g_i <- W_i / sum_{j != i} N_ij / (g_i + g_j)`, starting from all ones.
///
/// Running out of iterations is not an error; the result reports
/// `converged = false`.
pub fn mm_fit(votes: &VoteMatrix, config: &FitConfig) -> Result<FitResult> {
    fit_impl(votes, config, None)
}

/// [`mm_fit`] that reports the log-likelihood after every sweep.
pub fn mm_fit_observed(
    votes: &VoteMatrix,
    config: &FitConfig,
    mut observer: impl FnMut(&Sweep),
) -> Result<FitResult> {
    fit_impl(votes, config, Some(&mut observer))
}

fn fit_impl(
    votes: &VoteMatrix,
    config: &FitConfig,
    mut observer: Option<&mut dyn FnMut(&Sweep)>,
) -> Result<FitResult> {
    check_preconditions(votes, config)?;
    let m = votes.len();
    let wins: Vec<f64> = wins_vector(votes).into_iter().map(|w| w as f64).collect();
    let pairings: Vec<f64> = (0..m * m).map(|k| votes.pairings(k / m, k % m) as f64).collect();

    let mut gamma = vec![1.0; m];
    let mut next = vec![0.0; m];
    if let Some(obs) = observer.as_deref_mut() {
        obs(&Sweep { iteration: 0, log_likelihood: ll_gamma(votes, &gamma), max_delta: 0.0 });
    }

    let mut iterations = 0;
    let mut final_delta = f64::INFINITY;
    let mut converged = false;
    while iterations < config.max_iterations {
        for i in 0..m {
            let row = &pairings[i * m..(i + 1) * m];
            let denom: f64 = (0..m).filter(|&j| j != i).map(|j| row[j] / (gamma[i] + gamma[j])).sum();
            next[i] = wins[i] / denom;
        }
        if config.normalization == Normalization::ReferenceSample {
            let r = next[m - 1];
            next.iter_mut().for_each(|g| *g /= r);
            next[m - 1] = 1.0;
        }
        final_delta = gamma.iter().zip(&next).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()));
        std::mem::swap(&mut gamma, &mut next);
        iterations += 1;
        if let Some(obs) = observer.as_deref_mut() {
            obs(&Sweep {
                iteration: iterations,
                log_likelihood: ll_gamma(votes, &gamma),
                max_delta: final_delta,
            });
        }
        if final_delta < config.tolerance {
            converged = true;
            break;
        }
    }

    let scores = ScoreVector::from_gammas(gamma)?.normalized(config.normalization);
    let log_likelihood = ll_gamma(votes, scores.gamma());
    Ok(FitResult { scores, iterations, final_delta, log_likelihood, converged })
}

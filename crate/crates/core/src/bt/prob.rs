use super::{Ranking, ScoreVector};
use crate::error::{Error, Result};

fn check_strength(name: &str, g: f64) -> Result<()> {
    if g.is_finite() && g > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {g} must be positive and finite")))
    }
}

/// Probability that a sample of strength `gamma_i` is preferred over one of
/// strength `gamma_j`.
pub fn pairwise_prob(gamma_i: f64, gamma_j: f64) -> Result<f64> {
    check_strength("gamma_i", gamma_i)?;
    check_strength("gamma_j", gamma_j)?;
    Ok(gamma_i / (gamma_i + gamma_j))
}

/// Same probability expressed on log-scores: the logistic function of
/// `s_i - s_j`, evaluated without overflow for any finite gap.
pub fn prob_from_scores(s_i: f64, s_j: f64) -> Result<f64> {
    if !(s_i.is_finite() && s_j.is_finite()) {
        return Err(Error::domain(format!("scores must be finite, got ({s_i}, {s_j})")));
    }
    Ok(logistic(s_i - s_j))
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_indices(scores: &ScoreVector, indices: &[usize]) -> Result<()> {
    match indices.iter().find(|&&i| i >= scores.len()) {
        Some(i) => Err(Error::domain(format!("index {i} out of range for {} samples", scores.len()))),
        None => Ok(()),
    }
}

/// Probability of observing `ranking.order()` as a best-to-worst ordering of
/// its subset: the product over positions of each sample's strength divided
/// by the strength remaining at that position.
pub fn ranking_prob(scores: &ScoreVector, ranking: &Ranking) -> Result<f64> {
    check_indices(scores, ranking.order())?;
    let gamma = scores.gamma();
    let mut remaining: f64 = ranking.order().iter().map(|&i| gamma[i]).sum();
    let mut p = 1.0;
    for &i in ranking.order() {
        p *= gamma[i] / remaining;
        remaining -= gamma[i];
    }
    Ok(p)
}

fn check_subset(scores: &ScoreVector, subset: &[usize]) -> Result<()> {
    check_indices(scores, subset)?;
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("subset contains repeated indices"));
    }
    if subset.is_empty() {
        return Err(Error::domain("subset must not be empty"));
    }
    Ok(())
}

/// Probability that sample `i` is ranked first among `subset`.
pub fn win_prob(scores: &ScoreVector, subset: &[usize], i: usize) -> Result<f64> {
    check_subset(scores, subset)?;
    if !subset.contains(&i) {
        return Err(Error::domain(format!("sample {i} is not in the subset")));
    }
    let gamma = scores.gamma();
    let total: f64 = subset.iter().map(|&j| gamma[j]).sum();
    Ok(gamma[i] / total)
}

/// Win probability of every sample against the whole group.
pub fn win_probs(scores: &ScoreVector) -> Vec<f64> {
    let total: f64 = scores.gamma().iter().sum();
    scores.gamma().iter().map(|g| g / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sv(g: &[f64]) -> ScoreVector {
        ScoreVector::from_gammas(g.to_vec()).unwrap()
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_prob(1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(pairwise_prob(2.051, 1.0).unwrap(), 2.051 / 3.051, max_relative = 1e-15);
        assert!((pairwise_prob(2.051, 1.0).unwrap() - 0.6723).abs() < 1e-4);
        assert!((pairwise_prob(0.806, 2.051).unwrap() - 0.2821).abs() < 1e-4);
        assert!(pairwise_prob(0.0, 1.0).is_err());
        assert!(pairwise_prob(1.0, -1.0).is_err());
        assert!(pairwise_prob(f64::INFINITY, 1.0).is_err());
        assert!(pairwise_prob(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn score_examples() {
        assert_eq!(prob_from_scores(0.0, 0.0).unwrap(), 0.5);
        assert_relative_eq!(
            prob_from_scores(2.051f64.ln(), 0.0).unwrap(),
            pairwise_prob(2.051, 1.0).unwrap(),
            max_relative = 1e-12
        );
        let p = prob_from_scores(50.0, -50.0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(prob_from_scores(-350.0, 350.0).unwrap().is_finite());
        assert!(prob_from_scores(700.0, -700.0).unwrap().is_finite());
        assert!(prob_from_scores(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn ranking_examples() {
        let eq = sv(&[1.0, 1.0, 1.0]);
        for order in [[0, 1, 2], [2, 1, 0], [1, 0, 2]] {
            let r = Ranking::from_order(order.to_vec()).unwrap();
            assert_relative_eq!(ranking_prob(&eq, &r).unwrap(), 1.0 / 6.0, max_relative = 1e-15);
        }
        let two = sv(&[2.0, 1.0]);
        let r = Ranking::from_order(vec![0, 1]).unwrap();
        assert_relative_eq!(ranking_prob(&two, &r).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        let three = sv(&[2.0, 1.0, 1.0]);
        let r = Ranking::from_order(vec![0, 1, 2]).unwrap();
        assert_relative_eq!(ranking_prob(&three, &r).unwrap(), 0.25, max_relative = 1e-15);
        let bad = Ranking::from_order(vec![0, 3]).unwrap();
        assert!(ranking_prob(&three, &bad).is_err());
    }

    #[test]
    fn win_examples() {
        let eq = sv(&[1.0; 4]);
        assert_relative_eq!(win_prob(&eq, &[0, 1, 2, 3], 2).unwrap(), 0.25);
        let fit = sv(&[0.831, 1.358, 0.806, 2.051, 1.000]);
        let p = win_prob(&fit, &[0, 1, 2, 3, 4], 3).unwrap();
        assert_relative_eq!(p, 2.051 / 6.046, max_relative = 1e-14);
        assert!((p - 0.3392).abs() < 1e-4);
        let g = sv(&[1.0, 1.0, 2.0]);
        assert_relative_eq!(win_prob(&g, &[0, 2], 2).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        assert!(win_prob(&g, &[0, 2], 1).is_err());
        assert!(win_prob(&g, &[0, 0, 2], 2).is_err());
        let all: f64 = win_probs(&fit).iter().sum();
        assert!((all - 1.0).abs() < 1e-12);
    }

    #[test]
    fn win_prob_matches_first_place_marginal() {
        // orderings of {0, 2} beginning with 2: only (2, 0)
        let g = sv(&[1.0, 1.0, 2.0]);
        let r = Ranking::new(vec![0, 2], vec![2, 0]).unwrap();
        assert_relative_eq!(
            ranking_prob(&g, &r).unwrap(),
            win_prob(&g, &[0, 2], 2).unwrap(),
            max_relative = 1e-15
        );
    }
}

mod common;

use pairpref_core::bt::{
    check_connectivity, log_likelihood, log_likelihood_from_scores, mm_fit, mm_fit_observed, pairwise_prob,
    prob_from_scores, ranking_prob, stationarity_residual, win_prob, wins_vector, FitConfig, Normalization,
    Ranking, ScoreVector, VoteMatrix,
};
use proptest::prelude::*;

fn gammas(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, 2..=max_len).prop_map(|s| s.into_iter().map(f64::exp).collect())
}

/// Random matrices that satisfy the fitting preconditions.
fn connected_matrix() -> impl Strategy<Value = VoteMatrix> {
    (2usize..=6).prop_flat_map(|m| (Just(m), proptest::collection::vec(0u64..=20, m * m))).prop_filter_map(
        "needs a connected matrix with positive wins",
        |(m, raw)| {
            let rows: Vec<Vec<u64>> =
                (0..m).map(|i| (0..m).map(|j| if i == j { 0 } else { raw[i * m + j] }).collect()).collect();
            let v = VoteMatrix::from_rows(&rows).ok()?;
            (check_connectivity(&v).is_connected() && wins_vector(&v).iter().all(|&w| w > 0)).then_some(v)
        },
    )
}

proptest! {
    #[test]
    fn antisymmetry(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
        let sum = pairwise_prob(a, b).unwrap() + pairwise_prob(b, a).unwrap();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn score_form_matches_strength_form(si in -30.0f64..30.0, sj in -30.0f64..30.0) {
        let a = prob_from_scores(si, sj).unwrap();
        let b = pairwise_prob(si.exp(), sj.exp()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn scale_invariance(g in gammas(5), c in 1e-3f64..1e3) {
        let base = ScoreVector::from_gammas(g.clone()).unwrap();
        let scaled = ScoreVector::from_gammas(g.iter().map(|x| x * c).collect()).unwrap();
        let p1 = pairwise_prob(g[0], g[1]).unwrap();
        let p2 = pairwise_prob(g[0] * c, g[1] * c).unwrap();
        prop_assert!((p1 - p2).abs() <= 1e-12);
        let all: Vec<usize> = (0..g.len()).collect();
        let r = Ranking::from_order(all.iter().rev().copied().collect()).unwrap();
        prop_assert!((ranking_prob(&base, &r).unwrap() - ranking_prob(&scaled, &r).unwrap()).abs() <= 1e-12);
        for &i in &all {
            let a = win_prob(&base, &all, i).unwrap();
            let b = win_prob(&scaled, &all, i).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn orderings_sum_to_one_and_marginalize(g in gammas(6)) {
        let sv = ScoreVector::from_gammas(g.clone()).unwrap();
        for subset in common::subsets(g.len(), 5) {
            let mut total = 0.0;
            let mut first = vec![0.0; g.len()];
            for order in common::permutations(&subset) {
                let p = ranking_prob(&sv, &Ranking::new(subset.clone(), order.clone()).unwrap()).unwrap();
                prop_assert!((p - common::ordering_prob(&g, &order)).abs() <= 1e-12);
                total += p;
                first[order[0]] += p;
            }
            prop_assert!((total - 1.0).abs() <= 1e-9);
            for &i in &subset {
                prop_assert!((win_prob(&sv, &subset, i).unwrap() - first[i]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn mm_is_monotone_and_stationary(votes in connected_matrix()) {
        let cfg = FitConfig { tolerance: 1e-12, max_iterations: 200_000, ..FitConfig::default() };
        let mut prev = f64::NEG_INFINITY;
        let fit = mm_fit_observed(&votes, &cfg, |s| {
            assert!(s.log_likelihood >= prev - 1e-12 * prev.abs().max(1.0), "{} < {}", s.log_likelihood, prev);
            prev = s.log_likelihood;
        }).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(fit.final_delta <= cfg.tolerance);
        prop_assert!(stationarity_residual(&votes, &fit.scores).unwrap() <= 1e-6);
        let ll = log_likelihood(&votes, &fit.scores).unwrap();
        let ll2 = log_likelihood_from_scores(&votes, &fit.scores).unwrap();
        prop_assert!((ll - ll2).abs() <= 1e-9 * ll.abs());
    }

    #[test]
    fn order_independent_of_normalization(votes in connected_matrix()) {
        let a = mm_fit(&votes, &FitConfig::default()).unwrap();
        let b = mm_fit(&votes, &FitConfig { normalization: Normalization::None, ..FitConfig::default() }).unwrap();
        // ties in fitted strength can legitimately swap; compare strictly separated pairs
        let (ga, gb) = (a.scores.gamma(), b.scores.gamma());
        for i in 0..ga.len() {
            for j in 0..ga.len() {
                if ga[i] > ga[j] * (1.0 + 1e-4) {
                    prop_assert!(gb[i] > gb[j]);
                }
            }
        }
    }
}

#[test]
fn five_image_log_likelihood_matches_term_by_term_sum() {
    let votes = VoteMatrix::from_rows(&[
        [0, 21, 29, 16, 22],
        [33, 0, 36, 19, 32],
        [25, 18, 0, 15, 28],
        [38, 35, 39, 0, 34],
        [32, 22, 26, 20, 0],
    ])
    .unwrap();
    let g = [0.831, 1.358, 0.806, 2.051, 1.000];
    let sv = ScoreVector::from_gammas(g.to_vec()).unwrap();
    let mut oracle = 0.0;
    let mut terms = 0;
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                oracle += votes.wins(i, j) as f64 * (g[i].ln() - (g[i] + g[j]).ln());
                terms += 1;
            }
        }
    }
    assert_eq!(terms, 20);
    let ll = log_likelihood(&votes, &sv).unwrap();
    assert!((ll - oracle).abs() <= 1e-12 * oracle.abs());
    let fit = mm_fit(&votes, &FitConfig::default()).unwrap();
    assert!(fit.log_likelihood >= ll);
}

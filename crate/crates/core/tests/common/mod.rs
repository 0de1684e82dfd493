//! Reference implementations used as test oracles. Deliberately written
//! from the textbook formulas, sharing no code with the library paths they
//! check.
#![allow(dead_code)]

/// All permutations of `items`, by recursive insertion. Capped at 8
/// elements (40,320 orderings).
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    assert!(items.len() <= 8, "brute-force enumeration capped at 8 elements");
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Every subset of `0..m` with between 1 and `max_k` elements.
pub fn subsets(m: usize, max_k: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << m))
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| s.len() <= max_k)
        .collect()
}

/// Ordering probability computed as a product of conditional first-choice
/// probabilities, recomputing the remaining-strength sum at each stage.
pub fn ordering_prob(gamma: &[f64], order: &[usize]) -> f64 {
    let mut p = 1.0;
    for pos in 0..order.len() {
        let denom: f64 = order[pos..].iter().map(|&j| gamma[j]).sum();
        p *= gamma[order[pos]] / denom;
    }
    p
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation from covariance and standard deviations.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n).sqrt();
    if sx == 0.0 || sy == 0.0 {
        None
    } else {
        Some(cov / (sx * sy))
    }
}

/// Rank of each value: 1 + number strictly smaller + half the number of
/// other values equal to it.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let less = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Pair accuracy by explicit comparison of orderings within each group.
pub fn pair_accuracy(survey: &[Vec<f64>], predicted: &[Vec<f64>]) -> f64 {
    let cmp = |a: f64, b: f64| {
        if (a - b).abs() <= 1e-12 {
            std::cmp::Ordering::Equal
        } else {
            a.partial_cmp(&b).unwrap()
        }
    };
    let (mut good, mut all) = (0usize, 0usize);
    for (s, p) in survey.iter().zip(predicted) {
        for i in 0..s.len() {
            for j in 0..s.len() {
                if i < j {
                    all += 1;
                    if cmp(s[i], s[j]) == cmp(p[i], p[j]) {
                        good += 1;
                    }
                }
            }
        }
    }
    good as f64 / all as f64
}

pub fn relative_error(p_pred: f64, p_survey: f64) -> f64 {
    let diff = if p_pred > p_survey { p_pred - p_survey } else { p_survey - p_pred };
    diff / p_pred
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Forward pass of `w2 . relu(W1 x + b1) + b2` written against the flat
/// parameter layout, independent of the library's scorer.
pub fn perceptron_score(params: &[f64], d: usize, hidden: usize, x: &[f64]) -> f64 {
    let mut s = params[hidden * d + 2 * hidden];
    for k in 0..hidden {
        let mut z = params[hidden * d + k];
        for l in 0..d {
            z += params[k * d + l] * x[l];
        }
        if z > 0.0 {
            s += params[hidden * d + hidden + k] * z;
        }
    }
    s
}

pub fn linear_score(params: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    (0..d).map(|l| params[l] * x[l]).sum::<f64>() + params[d]
}

/// Absolute probability loss written directly from the two scores.
pub fn pair_loss(s_left: f64, s_right: f64, target: f64) -> f64 {
    let p = s_left.exp() / (s_left.exp() + s_right.exp());
    (target - p).abs()
}

/// Per-coordinate relative disagreement between analytic and numeric
/// gradients. Coordinates where both are below `floor` compare on the
/// absolute scale of `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

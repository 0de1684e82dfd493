//! Evaluation metrics: accuracy in pairs, Pearson and Spearman correlation,
//! and relative error of predicted winning probabilities.

use crate::error::{Error, Result};

/// Score differences within this distance count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Paired observations `(x_i, y_i)`, typically survey vs predicted scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedScores {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedScores {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension { expected: x.len(), found: y.len() });
        }
        if x.len() < 2 {
            return Err(Error::domain("need at least two paired observations"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::domain("paired scores must be finite"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    p_pred: f64,
    p_survey: f64,
}

impl PredictionRecord {
    pub fn new(p_pred: f64, p_survey: f64) -> Result<Self> {
        if !(p_pred > 0.0 && p_pred < 1.0) {
            return Err(Error::domain(format!("predicted probability {p_pred} not in (0, 1)")));
        }
        if !(0.0..=1.0).contains(&p_survey) {
            return Err(Error::domain(format!("survey probability {p_survey} not in [0, 1]")));
        }
        Ok(Self { p_pred, p_survey })
    }

    pub fn p_pred(&self) -> f64 {
        self.p_pred
    }

    pub fn p_survey(&self) -> f64 {
        self.p_survey
    }
}

fn tie_sign(d: f64) -> i8 {
    if d.abs() <= TIE_TOLERANCE {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// Counts `(correct, total)` unordered pairs in one group.
pub fn pair_agreement(survey: &[f64], predicted: &[f64]) -> Result<(usize, usize)> {
    if survey.len() != predicted.len() {
        return Err(Error::Dimension { expected: survey.len(), found: predicted.len() });
    }
    if survey.len() < 2 {
        return Err(Error::domain("a group needs at least two samples"));
    }
    let n = survey.len();
    let mut correct = 0;
    for i in 0..n {
        for j in i + 1..n {
            if tie_sign(survey[i] - survey[j]) == tie_sign(predicted[i] - predicted[j]) {
                correct += 1;
            }
        }
    }
    Ok((correct, n * (n - 1) / 2))
}

/// Fraction of within-group unordered pairs ordered the same way by both
/// score sets, pooled over all groups. A survey tie is matched only by a
/// predicted tie.
pub fn pair_accuracy<S: AsRef<[f64]>, P: AsRef<[f64]>>(survey: &[S], predicted: &[P]) -> Result<f64> {
    if survey.len() != predicted.len() {
        return Err(Error::domain(format!(
            "survey has {} groups but prediction has {}",
            survey.len(),
            predicted.len()
        )));
    }
    if survey.is_empty() {
        return Err(Error::domain("no groups to score"));
    }
    let (mut correct, mut total) = (0, 0);
    for (s, p) in survey.iter().zip(predicted) {
        let (c, t) = pair_agreement(s.as_ref(), p.as_ref())?;
        correct += c;
        total += t;
    }
    Ok(correct as f64 / total as f64)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(data: &PairedScores) -> Result<f64> {
    let n = data.len() as f64;
    let mx = data.x.iter().sum::<f64>() / n;
    let my = data.y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in data.x.iter().zip(&data.y) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = mean;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of fractional ranks.
pub fn spearman(data: &PairedScores) -> Result<f64> {
    let ranked = PairedScores { x: fractional_ranks(&data.x), y: fractional_ranks(&data.y) };
    pearson(&ranked)
}

/// `|p_pred - p_survey| / p_pred`. The prediction is the denominator.
pub fn relative_error(rec: &PredictionRecord) -> f64 {
    (rec.p_pred - rec.p_survey).abs() / rec.p_pred
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::{enumerate_pairs, split_dataset, DatasetSplit, Group, PairSample};
use super::evaluate::evaluate;
use super::model::{pairwise_loss, predict_win_prob, ScorerModel};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplicative learning-rate factor applied after every epoch.
    pub decay: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Fractions of groups for (train, validation, test).
    pub split_ratios: (f64, f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 5e-5, decay: 0.95, epochs: 50, seed: 0, split_ratios: (0.6, 0.2, 0.2) }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::domain(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::domain(format!("decay {} must be in (0, 1]", self.decay)));
        }
        let (a, b, c) = self.split_ratios;
        if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-6 {
            return Err(Error::domain(format!("split ratios ({a}, {b}, {c}) must be positive and sum to 1")));
        }
        Ok(())
    }
}

/// Gradient of the absolute probability loss for one pair with respect to
/// every model parameter. At the kink (prediction equal to target) the zero
/// subgradient is returned.
pub fn loss_gradient(model: &ScorerModel, sample: &PairSample<'_>) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; model.params().len()];
    accumulate_loss_gradient(model, sample, 1.0, &mut grad)?;
    Ok(grad)
}

/// Adds `weight * d loss / d params` to `grad` and returns the loss.
fn accumulate_loss_gradient(
    model: &ScorerModel,
    sample: &PairSample<'_>,
    weight: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let p = predict_win_prob(model, &sample.left.features, &sample.right.features)?;
    let loss = pairwise_loss(p, sample.target_prob);
    let dloss_dp = if p > sample.target_prob {
        1.0
    } else if p < sample.target_prob {
        -1.0
    } else {
        return Ok(loss);
    };
    // p = logistic(s_left - s_right)
    let scale = weight * dloss_dp * p * (1.0 - p);
    model.accumulate_score_grad(&sample.left.features, scale, grad)?;
    model.accumulate_score_grad(&sample.right.features, -scale, grad)?;
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean pair loss over the epoch, measured before each group's update.
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_pcc: Option<f64>,
    pub val_srcc: Option<f64>,
    pub val_relative_error: f64,
}

pub const HISTORY_HEADER: &str =
    "epoch,learning_rate,train_loss,val_accuracy,val_pcc,val_srcc,val_relative_error";

impl EpochRecord {
    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        format!(
            "{},{:?},{:?},{:?},{},{},{:?}",
            self.epoch,
            self.learning_rate,
            self.train_loss,
            self.val_accuracy,
            opt(self.val_pcc),
            opt(self.val_srcc),
            self.val_relative_error
        )
    }
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    for rec in history {
        out.push_str(&rec.to_csv_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ScorerModel,
    pub history: Vec<EpochRecord>,
    pub split: DatasetSplit,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], mask: &[bool], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for k in 0..params.len() {
            if !mask[k] {
                continue;
            }
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * grad[k];
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}

/// Trains on the training split of `groups`.
///
/// Each epoch visits the training groups in a freshly shuffled order and
/// takes one Adam step per group on the mean loss over that group's pairs.
/// Validation metrics are recorded after every epoch.
pub fn train(model: ScorerModel, groups: &[Group], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let split = split_dataset(groups, config)?;
    for item in split.train.iter().chain(&split.validation).flat_map(|g| &g.items) {
        if item.features.len() != model.dim() {
            return Err(Error::Dimension { expected: model.dim(), found: item.features.len() });
        }
    }
    let pairs: Vec<Vec<PairSample<'_>>> = split.train.iter().map(enumerate_pairs).collect::<Result<_>>()?;
    let n_pairs: usize = pairs.iter().map(Vec::len).sum();

    let mut model = model;
    let mask = model.trainable_mask();
    let mut adam = Adam::new(model.params().len());
    // separate stream from the split shuffle
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0; model.params().len()];

    for epoch in 0..config.epochs {
        let lr = config.learning_rate * config.decay.powi(epoch as i32);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &g in &order {
            let group_pairs = &pairs[g];
            grad.iter_mut().for_each(|x| *x = 0.0);
            let weight = 1.0 / group_pairs.len() as f64;
            for sample in group_pairs {
                loss_sum += accumulate_loss_gradient(&model, sample, weight, &mut grad)?;
            }
            adam.step(model.params_mut(), &grad, &mask, lr);
        }
        let train_loss = loss_sum / n_pairs as f64;
        if !train_loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                message: format!("loss {train_loss} or parameters became non-finite"),
            });
        }
        let report = evaluate(&model, &split.validation)?;
        history.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss,
            val_accuracy: report.aggregate.accuracy,
            val_pcc: report.aggregate.pcc,
            val_srcc: report.aggregate.srcc,
            val_relative_error: report.aggregate.mean_relative_error,
        });
    }
    Ok(TrainOutcome { model, history, split })
}

/// Mean pair loss of `model` over every pair of every group.
pub fn mean_loss(model: &ScorerModel, groups: &[Group]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for group in groups {
        for sample in enumerate_pairs(group)? {
            let p = predict_win_prob(model, &sample.left.features, &sample.right.features)?;
            sum += pairwise_loss(p, sample.target_prob);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::domain("no pairs to score"));
    }
    Ok(sum / n as f64)
}

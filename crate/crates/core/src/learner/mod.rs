//! Pairwise preference learner: a scorer over feature vectors trained so
//! that the softmax of two item scores matches the survey winning
//! probability under an absolute-error loss.

mod data;
mod evaluate;
mod model;
pub mod synth;
mod train;

pub use data::{enumerate_pairs, split_dataset, Dataset, DatasetSplit, FeatureItem, Group, PairSample};
pub use evaluate::{evaluate, AggregateReport, EvalReport, GroupReport, REPORT_HEADER};
pub use model::{pairwise_loss, predict_win_prob, Architecture, ScorerModel};
pub use train::{
    history_csv, loss_gradient, mean_loss, train, EpochRecord, TrainConfig, TrainOutcome, ADAM_BETA1,
    ADAM_BETA2, ADAM_EPSILON, HISTORY_HEADER,
};

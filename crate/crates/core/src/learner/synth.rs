use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::data::{Dataset, FeatureItem, Group};
use crate::error::{Error, Result};

/// Parameters of a dataset whose survey strengths come from a known linear
/// score function, so a linear scorer can represent every target exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub groups: usize,
    pub items_per_group: usize,
    pub dim: usize,
    /// Minimum score difference between any two items of a group.
    pub min_gap: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { groups: 40, items_per_group: 5, dim: 4, min_gap: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Generating weights; item score is `weights . features`.
    pub weights: Vec<f64>,
}

/// Features are standard normal; weights are normal with unit-per-dimension
/// scale. Items are redrawn until their score clears `min_gap` from every
/// earlier item in the group.
pub fn linear_dataset(config: &SyntheticConfig) -> Result<SyntheticData> {
    if config.dim == 0 || config.items_per_group < 2 || config.groups == 0 {
        return Err(Error::domain("synthetic dataset needs dim >= 1, groups >= 1, items >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w_dist = Normal::new(0.0, 1.0).expect("valid normal");
    let weights: Vec<f64> = (0..config.dim).map(|_| w_dist.sample(&mut rng)).collect();
    let mut groups = Vec::with_capacity(config.groups);
    for g in 0..config.groups {
        let gid = format!("g{g:03}");
        let mut items: Vec<FeatureItem> = Vec::with_capacity(config.items_per_group);
        let mut scores: Vec<f64> = Vec::new();
        let mut attempts = 0;
        while items.len() < config.items_per_group {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::domain("could not satisfy the minimum score gap"));
            }
            let x: Vec<f64> = (0..config.dim).map(|_| rng.sample(StandardNormal)).collect();
            let s: f64 = weights.iter().zip(&x).map(|(w, v)| w * v).sum();
            if scores.iter().any(|t| (t - s).abs() < config.min_gap) {
                continue;
            }
            scores.push(s);
            let id = format!("{gid}-{}", items.len());
            items.push(FeatureItem::new(id, gid.clone(), x, s.exp())?);
        }
        groups.push(Group::new(gid, items)?);
    }
    Ok(SyntheticData { dataset: Dataset::new(groups)?, weights })
}

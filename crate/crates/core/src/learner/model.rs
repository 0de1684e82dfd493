use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bt::prob::logistic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// `w . x + b`
    Linear,
    /// `w2 . relu(W1 x + b1) + b2`
    Perceptron { hidden: usize },
}

impl Architecture {
    pub fn param_count(&self, d: usize) -> usize {
        match *self {
            Architecture::Linear => d + 1,
            Architecture::Perceptron { hidden } => hidden * d + 2 * hidden + 1,
        }
    }

    pub fn layer_count(&self) -> usize {
        match self {
            Architecture::Linear => 1,
            Architecture::Perceptron { .. } => 2,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Linear => f.write_str("linear"),
            Architecture::Perceptron { hidden } => write!(f, "mlp:{hidden}"),
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    /// Accepts `linear` or `mlp:<hidden>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "linear" => Ok(Architecture::Linear),
            Some(("mlp", h)) => match h.parse::<usize>() {
                Ok(hidden) if hidden > 0 => Ok(Architecture::Perceptron { hidden }),
                _ => Err(Error::domain(format!("invalid hidden width {h:?}"))),
            },
            _ => Err(Error::domain(format!("unknown architecture {s:?}"))),
        }
    }
}

/// A scorer mapping a feature vector to one real-valued score.
///
/// Parameters live in one flat vector. Linear layout: `[w; d], b`.
/// Perceptron layout: `[W1; hidden x d] (row-major), [b1; hidden], [w2; hidden], b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    architecture: Architecture,
    dim: usize,
    params: Vec<f64>,
    frozen: Vec<bool>,
}

impl ScorerModel {
    pub fn zeros(architecture: Architecture, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("feature dimension must be positive"));
        }
        if let Architecture::Perceptron { hidden: 0 } = architecture {
            return Err(Error::domain("hidden width must be positive"));
        }
        Ok(Self {
            architecture,
            dim,
            params: vec![0.0; architecture.param_count(dim)],
            frozen: vec![false; architecture.layer_count()],
        })
    }

    pub fn from_params(architecture: Architecture, dim: usize, params: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(architecture, dim)?;
        model.set_params(params)?;
        Ok(model)
    }

    /// Small random initialization; perceptron weights use He scaling.
    pub fn random(architecture: Architecture, dim: usize, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(architecture, dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = |sd: f64| Normal::new(0.0, sd).expect("positive standard deviation");
        match architecture {
            Architecture::Linear => {
                let n = normal(0.1);
                for w in &mut model.params[..dim] {
                    *w = n.sample(&mut rng);
                }
            }
            Architecture::Perceptron { hidden } => {
                let first = normal((2.0 / dim as f64).sqrt());
                let second = normal((1.0 / hidden as f64).sqrt());
                let (w1, rest) = model.params.split_at_mut(hidden * dim);
                let (b1, rest) = rest.split_at_mut(hidden);
                w1.iter_mut().for_each(|w| *w = first.sample(&mut rng));
                b1.iter_mut().for_each(|b| *b = 0.01);
                rest[..hidden].iter_mut().for_each(|w| *w = second.sample(&mut rng));
            }
        }
        Ok(model)
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Dimension { expected: self.params.len(), found: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("parameters must be finite"));
        }
        self.params = params;
        Ok(())
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Marks a layer (0 = first) as excluded from optimizer updates.
    pub fn set_frozen(&mut self, layer: usize, frozen: bool) -> Result<()> {
        let slot =
            self.frozen.get_mut(layer).ok_or_else(|| Error::domain(format!("model has no layer {layer}")))?;
        *slot = frozen;
        Ok(())
    }

    pub fn is_frozen(&self, layer: usize) -> bool {
        self.frozen.get(layer).copied().unwrap_or(false)
    }

    /// Per-parameter flag: true when the optimizer may update it.
    pub fn trainable_mask(&self) -> Vec<bool> {
        match self.architecture {
            Architecture::Linear => vec![!self.frozen[0]; self.params.len()],
            Architecture::Perceptron { hidden } => {
                let first = hidden * self.dim + hidden;
                (0..self.params.len())
                    .map(|k| if k < first { !self.frozen[0] } else { !self.frozen[1] })
                    .collect()
            }
        }
    }

    fn check_dim(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: features.len() });
        }
        Ok(())
    }

    /// Hidden pre-activations of the perceptron; empty for a linear model.
    pub fn preactivations(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(features)?;
        Ok(match self.architecture {
            Architecture::Linear => Vec::new(),
            Architecture::Perceptron { hidden } => self.hidden_pre(hidden, features),
        })
    }

    fn hidden_pre(&self, hidden: usize, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let b1 = &self.params[hidden * d..hidden * d + hidden];
        (0..hidden)
            .map(|k| {
                let row = &self.params[k * d..(k + 1) * d];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b1[k]
            })
            .collect()
    }

    pub fn score(&self, features: &[f64]) -> Result<f64> {
        self.check_dim(features)?;
        let d = self.dim;
        Ok(match self.architecture {
            Architecture::Linear => {
                self.params[..d].iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.params[d]
            }
            Architecture::Perceptron { hidden } => {
                let pre = self.hidden_pre(hidden, features);
                let off = hidden * d + hidden;
                let w2 = &self.params[off..off + hidden];
                pre.iter().zip(w2).map(|(z, w)| z.max(0.0) * w).sum::<f64>() + self.params[off + hidden]
            }
        })
    }

    /// Adds `scale * d score / d params` into `grad`.
    pub(crate) fn accumulate_score_grad(&self, features: &[f64], scale: f64, grad: &mut [f64]) -> Result<()> {
        self.check_dim(features)?;
        let d = self.dim;
        match self.architecture {
            Architecture::Linear => {
                for (g, x) in grad[..d].iter_mut().zip(features) {
                    *g += scale * x;
                }
                grad[d] += scale;
            }
            Architecture::Perceptron { hidden } => {
                let pre = self.hidden_pre(hidden, features);
                let off = hidden * d + hidden;
                for k in 0..hidden {
                    let w2 = self.params[off + k];
                    grad[off + k] += scale * pre[k].max(0.0);
                    if pre[k] > 0.0 {
                        let back = scale * w2;
                        for (g, x) in grad[k * d..(k + 1) * d].iter_mut().zip(features) {
                            *g += back * x;
                        }
                        grad[hidden * d + k] += back;
                    }
                }
                grad[off + hidden] += scale;
            }
        }
        Ok(())
    }

    /// Architecture line followed by one parameter per line.
    pub fn to_checkpoint(&self) -> String {
        let mut out = match self.architecture {
            Architecture::Linear => format!("linear d={}\n", self.dim),
            Architecture::Perceptron { hidden } => format!("mlp d={} hidden={hidden}\n", self.dim),
        };
        for p in &self.params {
            out.push_str(&format!("{p:?}\n"));
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, column: 1, message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| perr(1, "empty checkpoint".into()))?;
        let mut parts = header.split_whitespace();
        let kind = parts.next().unwrap_or_default();
        let mut field = |name: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(name)?.strip_prefix('='))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| perr(1, format!("missing or invalid {name} in {header:?}")))
        };
        let dim = field("d")?;
        let architecture = match kind {
            "linear" => Architecture::Linear,
            "mlp" => Architecture::Perceptron { hidden: field("hidden")? },
            other => return Err(perr(1, format!("unknown architecture {other:?}"))),
        };
        let params = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.trim().parse::<f64>().map_err(|_| perr(i + 2, format!("invalid parameter {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_params(architecture, dim, params)
    }
}

/// Probability that `left` is preferred over `right`: the two-way softmax
/// of their scores.
pub fn predict_win_prob(model: &ScorerModel, left: &[f64], right: &[f64]) -> Result<f64> {
    Ok(logistic(model.score(left)? - model.score(right)?))
}

/// Absolute difference between the target and predicted winning
/// probabilities.
pub fn pairwise_loss(p_pred: f64, p_target: f64) -> f64 {
    (p_target - p_pred).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_scores() {
        let zero = ScorerModel::zeros(Architecture::Linear, 3).unwrap();
        assert_eq!(zero.score(&[1.0, -4.0, 9.0]).unwrap(), 0.0);
        let m = ScorerModel::from_params(Architecture::Linear, 2, vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(m.score(&[3.0, 4.0]).unwrap(), 11.0);
        assert!(matches!(m.score(&[1.0]), Err(Error::Dimension { expected: 2, found: 1 })));
    }

    #[test]
    fn perceptron_matches_hand_forward_pass() {
        // hidden = 2, d = 2
        let params = vec![0.5, -1.0, 0.25, 0.75, 0.1, -0.2, 2.0, -3.0, 0.3];
        let m = ScorerModel::from_params(Architecture::Perceptron { hidden: 2 }, 2, params).unwrap();
        let x = [1.0, 0.2];
        let h0 = (0.5f64 * 1.0 - 1.0 * 0.2 + 0.1).max(0.0);
        let h1 = (0.25f64 * 1.0 + 0.75 * 0.2 - 0.2).max(0.0);
        let expected = 2.0 * h0 - 3.0 * h1 + 0.3;
        assert!((m.score(&x).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.5).abs() < 1e-12);
    }

    #[test]
    fn win_prob_examples() {
        let zero = ScorerModel::zeros(Architecture::Linear, 2).unwrap();
        assert_eq!(predict_win_prob(&zero, &[1.0, 2.0], &[-5.0, 3.0]).unwrap(), 0.5);
        let m = ScorerModel::from_params(Architecture::Linear, 1, vec![1.0, 0.0]).unwrap();
        let p = predict_win_prob(&m, &[1.0], &[0.0]).unwrap();
        assert!((p - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.7310).abs() < 1e-4);
        assert_eq!(predict_win_prob(&m, &[0.3], &[0.3]).unwrap(), 0.5);
        assert!(predict_win_prob(&m, &[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn loss_examples() {
        assert_eq!(pairwise_loss(0.5, 0.5), 0.0);
        assert_eq!(pairwise_loss(0.25, 0.75), 0.5);
        assert!((pairwise_loss(0.6723, 0.5) - 0.1723).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = ScorerModel::random(Architecture::Perceptron { hidden: 3 }, 4, 11).unwrap();
        let text = m.to_checkpoint();
        assert!(text.starts_with("mlp d=4 hidden=3\n"));
        let back = ScorerModel::from_checkpoint(&text).unwrap();
        assert_eq!(back.params(), m.params());
        let lin = ScorerModel::random(Architecture::Linear, 2, 1).unwrap();
        assert_eq!(ScorerModel::from_checkpoint(&lin.to_checkpoint()).unwrap(), lin);
        assert!(ScorerModel::from_checkpoint("linear d=2\n1\n2\n").is_err());
        assert!(ScorerModel::from_checkpoint("cnn d=2\n").is_err());
        assert!(ScorerModel::from_checkpoint("linear d=1\n1\nx\n").is_err());
    }

    #[test]
    fn architecture_parsing_and_masks() {
        assert_eq!("linear".parse::<Architecture>().unwrap(), Architecture::Linear);
        assert_eq!("mlp:8".parse::<Architecture>().unwrap(), Architecture::Perceptron { hidden: 8 });
        assert!("mlp:0".parse::<Architecture>().is_err());
        assert!("conv".parse::<Architecture>().is_err());
        let mut m = ScorerModel::zeros(Architecture::Perceptron { hidden: 2 }, 3).unwrap();
        assert_eq!(m.params().len(), 11);
        m.set_frozen(0, true).unwrap();
        let mask = m.trainable_mask();
        assert_eq!(mask.iter().filter(|t| !**t).count(), 8);
        assert!(m.set_frozen(2, true).is_err());
    }
}

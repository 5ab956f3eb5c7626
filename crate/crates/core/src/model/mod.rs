//! Sentiment-fused classifier: encoder adapter, feature fusion, linear
//! classification head, losses, learning-rate schedule and training loop.

mod encoder;
mod loss;
mod optim;
mod schedule;
mod train;

pub use encoder::{resolve_encoder, Encoder, ToyHashEncoder, TOY_ENCODER_ID};
pub use loss::{
    class_weights, focal_loss, focal_loss_grad, weighted_ce, weighted_ce_grad, ClassWeights,
    LossFn, LossKind, PROB_FLOOR,
};
pub use optim::AdamW;
pub use schedule::{lr_at_step, warmup_steps};
pub use train::{
    build_features, predict_probs, train, Checkpoint, EpochSummary, TrainOutcome, TrainingConfig,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::GoldLabel;
use crate::error::{Error, Result};
use crate::sentiment::SentimentVector;

/// Sentence representation produced by an encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
    pub source: String,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Embedding followed by (positive, neutral, negative).
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeatures {
    pub values: Vec<f64>,
}

impl FusedFeatures {
    pub fn sentiment_suffix(&self) -> [f64; 3] {
        let n = self.values.len();
        [self.values[n - 3], self.values[n - 2], self.values[n - 1]]
    }
}

pub fn fuse(embedding: &Embedding, sentiment: &SentimentVector) -> Result<FusedFeatures> {
    if embedding.values.is_empty() {
        return Err(Error::validation("cannot fuse an empty embedding"));
    }
    if let Some(i) = embedding.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!(
            "embedding component {i} from `{}` is not finite",
            embedding.source
        )));
    }
    let mut values = Vec::with_capacity(embedding.dim() + 3);
    values.extend_from_slice(&embedding.values);
    values.extend_from_slice(&sentiment.to_array());
    Ok(FusedFeatures { values })
}

/// Whether the head sees sentiment scores next to the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    SentimentFused,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::SentimentFused => "sentiment_fused",
        }
    }

    /// Width of the head input for an encoder of dimension `d`.
    pub fn input_dim(self, d: usize) -> usize {
        match self {
            Variant::Baseline => d,
            Variant::SentimentFused => d + 3,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "sentiment" | "sentiment_fused" => Ok(Variant::SentimentFused),
            other => Err(Error::validation(format!("unknown variant `{other}`"))),
        }
    }
}

/// `(p_obj, p_subj)` on the probability simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityPair {
    pub p_obj: f64,
    pub p_subj: f64,
}

impl ProbabilityPair {
    pub fn new(p_obj: f64, p_subj: f64) -> Result<Self> {
        let ok = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !ok(p_obj) || !ok(p_subj) || (p_obj + p_subj - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "({p_obj}, {p_subj}) is not a probability pair"
            )));
        }
        Ok(ProbabilityPair { p_obj, p_subj })
    }

    pub fn from_subj(p_subj: f64) -> Result<Self> {
        Self::new(1.0 - p_subj, p_subj)
    }

    pub fn get(&self, label: GoldLabel) -> f64 {
        match label {
            GoldLabel::Obj => self.p_obj,
            GoldLabel::Subj => self.p_subj,
        }
    }

    /// Most probable class; an exact tie goes to SUBJ.
    pub fn argmax(&self) -> GoldLabel {
        if self.p_subj >= self.p_obj {
            GoldLabel::Subj
        } else {
            GoldLabel::Obj
        }
    }
}

/// Two-class softmax. Each probability is a logistic of the logit
/// difference, so extreme logits do not overflow.
pub fn softmax(logits: [f64; 2]) -> ProbabilityPair {
    let diff = logits[1] - logits[0];
    ProbabilityPair {
        p_obj: 1.0 / (1.0 + diff.exp()),
        p_subj: 1.0 / (1.0 + (-diff).exp()),
    }
}

/// Linear layer mapping head input to (OBJ, SUBJ) logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierHead {
    /// One `[obj, subj]` row per input feature.
    pub weights: Vec<[f64; 2]>,
    pub bias: [f64; 2],
}

impl ClassifierHead {
    pub fn zeros(input_dim: usize) -> Self {
        ClassifierHead {
            weights: vec![[0.0; 2]; input_dim],
            bias: [0.0; 2],
        }
    }

    /// Uniform init in ±1/√fan_in, zero bias.
    pub fn init<R: Rng>(input_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input_dim as f64).sqrt();
        ClassifierHead {
            weights: (0..input_dim)
                .map(|_| [rng.random_range(-bound..bound), rng.random_range(-bound..bound)])
                .collect(),
            bias: [0.0; 2],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn forward(&self, features: &[f64]) -> Result<[f64; 2]> {
        if features.len() != self.input_dim() {
            return Err(Error::validation(format!(
                "head expects {} features, got {}",
                self.input_dim(),
                features.len()
            )));
        }
        Ok(self.forward_unchecked(features))
    }

    pub(crate) fn forward_unchecked(&self, features: &[f64]) -> [f64; 2] {
        let mut logits = self.bias;
        for (x, w) in features.iter().zip(&self.weights) {
            logits[0] += x * w[0];
            logits[1] += x * w[1];
        }
        logits
    }

    pub fn is_finite(&self) -> bool {
        self.bias.iter().all(|b| b.is_finite())
            && self.weights.iter().flatten().all(|w| w.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(values: Vec<f64>) -> Embedding {
        Embedding {
            values,
            source: "test".into(),
        }
    }

    #[test]
    fn fuse_appends_sentiment() {
        let s = SentimentVector::new(0.2, 0.3, 0.5).unwrap();
        let f = fuse(&emb(vec![1.0, 2.0, 3.0, 4.0]), &s).unwrap();
        assert_eq!(f.values, vec![1.0, 2.0, 3.0, 4.0, 0.2, 0.3, 0.5]);

        let s = SentimentVector::new(1.0, 0.0, 0.0).unwrap();
        let f = fuse(&emb(vec![0.0, 0.0]), &s).unwrap();
        assert_eq!(f.values, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(f.sentiment_suffix(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn fuse_rejects_non_finite() {
        let s = SentimentVector::uniform();
        assert!(fuse(&emb(vec![1.0, f64::NAN]), &s).is_err());
        assert!(fuse(&emb(vec![f64::INFINITY]), &s).is_err());
    }

    #[test]
    fn baseline_head_has_no_sentiment_columns() {
        assert_eq!(Variant::Baseline.input_dim(64), 64);
        assert_eq!(Variant::SentimentFused.input_dim(64), 67);
    }

    #[test]
    fn softmax_closed_forms() {
        let p = softmax([0.0, 0.0]);
        assert_eq!((p.p_obj, p.p_subj), (0.5, 0.5));
        let p = softmax([0.0, 3f64.ln()]);
        assert!((p.p_obj - 0.25).abs() < 1e-15);
        assert!((p.p_subj - 0.75).abs() < 1e-15);
        let q = softmax([7.5, 7.5 + 3f64.ln()]);
        assert!((q.p_subj - p.p_subj).abs() < 1e-14);
    }

    #[test]
    fn head_rejects_dimension_mismatch() {
        let head = ClassifierHead::zeros(3);
        assert!(head.forward(&[1.0, 2.0]).is_err());
        assert_eq!(head.forward(&[1.0, 2.0, 3.0]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn probability_pair_validation() {
        assert!(ProbabilityPair::new(0.3, 0.7).is_ok());
        assert!(ProbabilityPair::new(0.3, 0.8).is_err());
        assert!(ProbabilityPair::new(-0.1, 1.1).is_err());
        assert_eq!(ProbabilityPair::new(0.5, 0.5).unwrap().argmax(), GoldLabel::Subj);
    }
}

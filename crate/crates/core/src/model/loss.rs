//! Class-weighted cross-entropy and focal loss for the two-class head.
//!
//! Both losses take the gold-class probability `p` clamped at
//! [`PROB_FLOOR`] before the logarithm. The `*_grad` variants return the
//! loss together with its gradient with respect to the two logits.

use serde::{Deserialize, Serialize};

use crate::corpus::{GoldLabel, LabelDistribution};
use crate::error::{Error, Result};
use crate::model::{softmax, ProbabilityPair};

pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    WeightedCe,
    Focal,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wce" | "weighted_ce" => Ok(LossKind::WeightedCe),
            "focal" => Ok(LossKind::Focal),
            other => Err(Error::validation(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub obj: f64,
    pub subj: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights { obj: 1.0, subj: 1.0 };

    pub fn get(&self, label: GoldLabel) -> f64 {
        match label {
            GoldLabel::Obj => self.obj,
            GoldLabel::Subj => self.subj,
        }
    }
}

/// Balanced inverse-frequency weights `n / (2 · n_c)`.
pub fn class_weights(dist: &LabelDistribution) -> Result<ClassWeights> {
    if dist.obj == 0 || dist.subj == 0 {
        return Err(Error::validation(format!(
            "class weights need both classes present (obj={}, subj={})",
            dist.obj, dist.subj
        )));
    }
    let total = dist.total() as f64;
    Ok(ClassWeights {
        obj: total / (2.0 * dist.obj as f64),
        subj: total / (2.0 * dist.subj as f64),
    })
}

/// `−w_gold · ln p_gold`
pub fn weighted_ce(probs: &ProbabilityPair, gold: GoldLabel, weights: &ClassWeights) -> f64 {
    -weights.get(gold) * probs.get(gold).max(PROB_FLOOR).ln()
}

/// `−α · (1 − p_gold)^γ · ln p_gold`
pub fn focal_loss(probs: &ProbabilityPair, gold: GoldLabel, alpha: f64, gamma: f64) -> f64 {
    let p = probs.get(gold);
    let q = probs.get(gold.other());
    -alpha * q.powf(gamma) * p.max(PROB_FLOOR).ln()
}

fn logit_grad(gold: GoldLabel, d_gold: f64) -> [f64; 2] {
    // Two classes: the gradients on the two logits are opposite.
    let mut g = [-d_gold; 2];
    g[gold.index()] = d_gold;
    g
}

/// Weighted cross-entropy from logits: `∂L/∂l_k = w_gold (p_k − 1[k = gold])`.
pub fn weighted_ce_grad(logits: [f64; 2], gold: GoldLabel, weights: &ClassWeights) -> (f64, [f64; 2]) {
    let probs = softmax(logits);
    let loss = weighted_ce(&probs, gold, weights);
    let d_gold = -weights.get(gold) * probs.get(gold.other());
    (loss, logit_grad(gold, d_gold))
}

/// Focal loss from logits.
///
/// With `p = p_gold`, `q = 1 − p`, the gradient on the gold logit is
/// `α (γ p q^γ ln p − q^(γ+1))`; the other logit gets its negation.
pub fn focal_loss_grad(logits: [f64; 2], gold: GoldLabel, alpha: f64, gamma: f64) -> (f64, [f64; 2]) {
    let probs = softmax(logits);
    let loss = focal_loss(&probs, gold, alpha, gamma);
    let p = probs.get(gold);
    let q = probs.get(gold.other());
    let qg = q.powf(gamma);
    let d_gold = alpha * (gamma * p * qg * p.max(PROB_FLOOR).ln() - qg * q);
    (loss, logit_grad(gold, d_gold))
}

/// A configured loss ready for the training loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFn {
    WeightedCe(ClassWeights),
    Focal { alpha: f64, gamma: f64 },
}

impl LossFn {
    pub fn loss(&self, probs: &ProbabilityPair, gold: GoldLabel) -> f64 {
        match *self {
            LossFn::WeightedCe(w) => weighted_ce(probs, gold, &w),
            LossFn::Focal { alpha, gamma } => focal_loss(probs, gold, alpha, gamma),
        }
    }

    pub fn loss_and_grad(&self, logits: [f64; 2], gold: GoldLabel) -> (f64, [f64; 2]) {
        match *self {
            LossFn::WeightedCe(w) => weighted_ce_grad(logits, gold, &w),
            LossFn::Focal { alpha, gamma } => focal_loss_grad(logits, gold, alpha, gamma),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn pair(p_subj: f64) -> ProbabilityPair {
        ProbabilityPair::from_subj(p_subj).unwrap()
    }

    #[test]
    fn class_weights_english_train() {
        let w = class_weights(&LabelDistribution { obj: 532, subj: 298 }).unwrap();
        assert!((w.obj - 830.0 / 1064.0).abs() < 1e-15);
        assert!((w.subj - 830.0 / 596.0).abs() < 1e-15);
        assert!((w.obj - 0.7801).abs() < 1e-4);
        assert!((w.subj - 1.3926).abs() < 1e-4);
    }

    #[test]
    fn class_weights_balanced_and_ratio() {
        let w = class_weights(&LabelDistribution { obj: 40, subj: 40 }).unwrap();
        assert_eq!((w.obj, w.subj), (1.0, 1.0));
        let w = class_weights(&LabelDistribution { obj: 1231, subj: 382 }).unwrap();
        assert!((w.subj / w.obj - 1231.0 / 382.0).abs() < 1e-12);
        assert!(class_weights(&LabelDistribution { obj: 3, subj: 0 }).is_err());
    }

    #[test]
    fn weighted_ce_closed_forms() {
        assert_eq!(weighted_ce(&pair(1.0), GoldLabel::Subj, &ClassWeights::UNIT), 0.0);
        assert!((weighted_ce(&pair(0.5), GoldLabel::Subj, &ClassWeights::UNIT) - LN_2).abs() < 1e-15);
        let w2 = ClassWeights { obj: 2.0, subj: 2.0 };
        assert!((weighted_ce(&pair(0.5), GoldLabel::Obj, &w2) - 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_is_clamped() {
        let l = weighted_ce(&pair(0.0), GoldLabel::Subj, &ClassWeights::UNIT);
        assert!((l - (-PROB_FLOOR.ln())).abs() < 1e-12);
        assert!(focal_loss(&pair(0.0), GoldLabel::Subj, 1.0, 2.0).is_finite());
    }

    #[test]
    fn focal_closed_forms() {
        assert!((focal_loss(&pair(0.5), GoldLabel::Subj, 1.0, 2.0) - 0.25 * LN_2).abs() < 1e-15);
        let p = pair(0.9);
        assert!(focal_loss(&p, GoldLabel::Subj, 1.0, 2.0) <= weighted_ce(&p, GoldLabel::Subj, &ClassWeights::UNIT));
    }

    #[test]
    fn focal_gradient_at_certainty_is_zero() {
        let (_, g) = focal_loss_grad([-800.0, 800.0], GoldLabel::Subj, 1.0, 0.5);
        assert_eq!(g, [0.0, 0.0]);
    }
}

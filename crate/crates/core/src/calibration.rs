//! Post-hoc decision threshold selection.
//!
//! The model's SUBJ probability is compared against a threshold τ chosen on
//! the dev split by exhaustive search over {0.10, 0.11, …, 0.90}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::GoldLabel;
use crate::error::{Error, Result};
use crate::metrics;
use crate::model::ProbabilityPair;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const GRID_POINTS: usize = 81;

/// Macro F1 values closer than this are treated as tied.
pub const TIE_EPSILON: f64 = 1e-12;

/// The 81 grid values `i / 100` for `i` in `10..=90`.
pub fn threshold_grid() -> Vec<f64> {
    (10..=90).map(|i| i as f64 / 100.0).collect()
}

/// SUBJ iff `p_subj ≥ τ`.
pub fn apply_threshold(prob: &ProbabilityPair, tau: f64) -> GoldLabel {
    debug_assert!(tau > 0.0 && tau < 1.0, "threshold {tau} outside (0,1)");
    if prob.p_subj >= tau {
        GoldLabel::Subj
    } else {
        GoldLabel::Obj
    }
}

pub fn apply_threshold_all(probs: &[ProbabilityPair], tau: f64) -> Vec<GoldLabel> {
    probs.iter().map(|p| apply_threshold(p, tau)).collect()
}

pub fn macro_f1_at(probs: &[ProbabilityPair], gold: &[GoldLabel], tau: f64) -> Result<f64> {
    Ok(metrics::evaluate(&apply_threshold_all(probs, tau), gold)?.macro_f1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub macro_f1: f64,
}

/// Threshold report: `{tau, dev_macro_f1, curve}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDecision {
    pub tau: f64,
    pub dev_macro_f1: f64,
    pub curve: Vec<CurvePoint>,
}

impl ThresholdDecision {
    /// Checks the grid shape and that `dev_macro_f1` is the curve value at `tau`.
    pub fn validate(&self) -> Result<()> {
        let grid = threshold_grid();
        if self.curve.len() != GRID_POINTS || self.curve.iter().zip(&grid).any(|(c, g)| c.tau != *g) {
            return Err(Error::validation("threshold curve does not match the 0.10..0.90 grid"));
        }
        match self.curve.iter().find(|c| c.tau == self.tau) {
            Some(c) if c.macro_f1 == self.dev_macro_f1 => Ok(()),
            Some(_) => Err(Error::validation("dev_macro_f1 disagrees with the curve")),
            None => Err(Error::validation(format!("tau {} is not a grid value", self.tau))),
        }
    }
}

/// Picks the grid threshold with the highest dev macro F1.
///
/// Ties go to the value closest to 0.50, then to the smaller value.
pub fn grid_search_threshold(dev_probs: &[ProbabilityPair], gold: &[GoldLabel]) -> Result<ThresholdDecision> {
    if dev_probs.is_empty() {
        return Err(Error::validation("threshold search needs at least one dev example"));
    }
    if dev_probs.len() != gold.len() {
        return Err(Error::validation(format!(
            "{} dev probabilities for {} gold labels",
            dev_probs.len(),
            gold.len()
        )));
    }
    for label in GoldLabel::ALL {
        if !gold.contains(&label) {
            return Err(Error::validation(format!(
                "dev gold labels contain no {label}; macro F1 is degenerate"
            )));
        }
    }

    let curve: Vec<CurvePoint> = threshold_grid()
        .into_par_iter()
        .map(|tau| Ok(CurvePoint { tau, macro_f1: macro_f1_at(dev_probs, gold, tau)? }))
        .collect::<Result<_>>()?;

    let best = select_from_curve(&curve);
    Ok(ThresholdDecision {
        tau: best.tau,
        dev_macro_f1: best.macro_f1,
        curve,
    })
}

/// Best point of a curve sorted by ascending τ, under the tie-break rule.
fn select_from_curve(curve: &[CurvePoint]) -> CurvePoint {
    let mut best = curve[0];
    for c in &curve[1..] {
        let better = c.macro_f1 > best.macro_f1 + TIE_EPSILON;
        let tied = (c.macro_f1 - best.macro_f1).abs() <= TIE_EPSILON;
        // Strictly closer only, so equal distances keep the earlier, smaller τ.
        let closer = (c.tau - DEFAULT_THRESHOLD).abs() < (best.tau - DEFAULT_THRESHOLD).abs() - 1e-9;
        if better || (tied && closer) {
            best = *c;
        }
    }
    best
}

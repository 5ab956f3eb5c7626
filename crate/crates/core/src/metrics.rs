//! Confusion matrix and precision/recall/F1 with SUBJ as the positive class.
//!
//! A ratio whose denominator is zero is reported as 0. Macro F1 is the
//! unweighted mean of the two per-class F1 scores.

use serde::{Deserialize, Serialize};

use crate::corpus::GoldLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts with OBJ as the positive class.
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

pub fn confusion(preds: &[GoldLabel], gold: &[GoldLabel]) -> Result<ConfusionMatrix> {
    if preds.len() != gold.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            gold.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, g) in preds.iter().zip(gold) {
        match (p, g) {
            (GoldLabel::Subj, GoldLabel::Subj) => cm.tp += 1,
            (GoldLabel::Subj, GoldLabel::Obj) => cm.fp += 1,
            (GoldLabel::Obj, GoldLabel::Subj) => cm.fn_ += 1,
            (GoldLabel::Obj, GoldLabel::Obj) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassMetrics {
    fn positive_class(cm: &ConfusionMatrix) -> Self {
        let precision = ratio(cm.tp, cm.tp + cm.fp);
        let recall = ratio(cm.tp, cm.tp + cm.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: cm.tp + cm.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub obj: ClassMetrics,
    pub subj: ClassMetrics,
    pub macro_f1: f64,
    pub subj_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn class(&self, label: GoldLabel) -> &ClassMetrics {
        match label {
            GoldLabel::Obj => &self.obj,
            GoldLabel::Subj => &self.subj,
        }
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::validation("no evaluated pairs"));
    }
    let subj = ClassMetrics::positive_class(cm);
    let obj = ClassMetrics::positive_class(&cm.swapped());
    Ok(MetricsReport {
        obj,
        subj,
        macro_f1: (obj.f1 + subj.f1) / 2.0,
        subj_f1: subj.f1,
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        confusion: *cm,
    })
}

pub fn evaluate(preds: &[GoldLabel], gold: &[GoldLabel]) -> Result<MetricsReport> {
    report(&confusion(preds, gold)?)
}

/// Per-class values keyed `OBJ` / `SUBJ` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClass<T> {
    #[serde(rename = "OBJ")]
    pub obj: T,
    #[serde(rename = "SUBJ")]
    pub subj: T,
}

/// Metrics JSON document written by the evaluation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub language: String,
    pub setting: String,
    pub model_variant: String,
    pub threshold: f64,
    pub macro_f1: f64,
    pub subj_f1: f64,
    pub obj_f1: f64,
    pub accuracy: f64,
    pub precision: PerClass<f64>,
    pub recall: PerClass<f64>,
    pub support: PerClass<usize>,
    pub confusion: ConfusionMatrix,
}

impl MetricsDocument {
    pub fn new(language: &str, setting: &str, model_variant: &str, threshold: f64, r: &MetricsReport) -> Self {
        MetricsDocument {
            language: language.to_string(),
            setting: setting.to_string(),
            model_variant: model_variant.to_string(),
            threshold,
            macro_f1: r.macro_f1,
            subj_f1: r.subj_f1,
            obj_f1: r.obj.f1,
            accuracy: r.accuracy,
            precision: PerClass {
                obj: r.obj.precision,
                subj: r.subj.precision,
            },
            recall: PerClass {
                obj: r.obj.recall,
                subj: r.subj.recall,
            },
            support: PerClass {
                obj: r.obj.support,
                subj: r.subj.support,
            },
            confusion: r.confusion,
        }
    }
}

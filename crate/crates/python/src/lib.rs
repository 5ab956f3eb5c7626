//! Python bindings: `import subjfuse`.
//!
//! Labels cross the boundary as the strings `"OBJ"` / `"SUBJ"` and
//! probabilities as the SUBJ probability `p_subj`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError};
use pyo3::prelude::*;

use subjfuse_core::calibration;
use subjfuse_core::corpus::{self, GoldLabel, LabelDistribution, LanguageCode, SplitName};
use subjfuse_core::error::ErrorClass;
use subjfuse_core::experiments::{self, ExperimentSpec};
use subjfuse_core::metrics;
use subjfuse_core::model::{self, ClassWeights, Embedding, Encoder, ProbabilityPair, ToyHashEncoder};
use subjfuse_core::sentiment::{self, SentimentVector};
use subjfuse_core::synthetic::{self, SyntheticConfig};

create_exception!(subjfuse, SubjfuseError, PyException);
create_exception!(subjfuse, ValidationError, SubjfuseError);
create_exception!(subjfuse, MissingDependencyError, SubjfuseError);

fn to_py(err: subjfuse_core::Error) -> PyErr {
    let msg = err.to_string();
    match err.class() {
        ErrorClass::Validation => ValidationError::new_err(msg),
        ErrorClass::MissingDependency => MissingDependencyError::new_err(msg),
        ErrorClass::Internal => PyRuntimeError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for subjfuse_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn labels(values: &[String]) -> PyResult<Vec<GoldLabel>> {
    values.iter().map(|s| s.parse::<GoldLabel>().py_err()).collect()
}

fn pairs(p_subj: &[f64]) -> PyResult<Vec<ProbabilityPair>> {
    p_subj.iter().map(|p| ProbabilityPair::from_subj(*p).py_err()).collect()
}

fn split_name(s: &str) -> PyResult<SplitName> {
    SplitName::ALL
        .into_iter()
        .find(|n| n.as_str() == s)
        .ok_or_else(|| ValidationError::new_err(format!("unknown split `{s}`")))
}

/// Scores of one evaluation, SUBJ as the positive class.
#[pyclass(frozen, get_all, skip_from_py_object, module = "subjfuse")]
#[derive(Clone)]
struct MetricsReport {
    macro_f1: f64,
    subj_f1: f64,
    obj_f1: f64,
    accuracy: f64,
    subj_precision: f64,
    subj_recall: f64,
    tp: usize,
    fp: usize,
    fn_: usize,
    tn: usize,
}

#[pymethods]
impl MetricsReport {
    fn __repr__(&self) -> String {
        format!(
            "MetricsReport(macro_f1={:.4}, subj_f1={:.4}, accuracy={:.4})",
            self.macro_f1, self.subj_f1, self.accuracy
        )
    }
}

impl From<metrics::MetricsReport> for MetricsReport {
    fn from(r: metrics::MetricsReport) -> Self {
        MetricsReport {
            macro_f1: r.macro_f1,
            subj_f1: r.subj_f1,
            obj_f1: r.obj.f1,
            accuracy: r.accuracy,
            subj_precision: r.subj.precision,
            subj_recall: r.subj.recall,
            tp: r.confusion.tp,
            fp: r.confusion.fp,
            fn_: r.confusion.fn_,
            tn: r.confusion.tn,
        }
    }
}

/// Selected threshold with its full dev macro-F1 curve.
#[pyclass(frozen, get_all, skip_from_py_object, module = "subjfuse")]
#[derive(Clone)]
struct ThresholdDecision {
    tau: f64,
    dev_macro_f1: f64,
    /// `(tau, macro_f1)` for every grid point.
    curve: Vec<(f64, f64)>,
}

#[pymethods]
impl ThresholdDecision {
    fn __repr__(&self) -> String {
        format!("ThresholdDecision(tau={:.2}, dev_macro_f1={:.4})", self.tau, self.dev_macro_f1)
    }
}

/// Outcome of a full experiment run.
#[pyclass(frozen, get_all, module = "subjfuse")]
struct RunSummary {
    out_dir: PathBuf,
    tau: f64,
    epoch: usize,
    /// `(language, macro_f1, subj_f1)` rows, including pooled/average rows.
    results: Vec<(String, f64, f64)>,
}

#[pyfunction]
fn evaluate(preds: Vec<String>, gold: Vec<String>) -> PyResult<MetricsReport> {
    Ok(metrics::evaluate(&labels(&preds)?, &labels(&gold)?).py_err()?.into())
}

#[pyfunction]
fn grid_search_threshold(p_subj: Vec<f64>, gold: Vec<String>) -> PyResult<ThresholdDecision> {
    let d = calibration::grid_search_threshold(&pairs(&p_subj)?, &labels(&gold)?).py_err()?;
    Ok(ThresholdDecision {
        tau: d.tau,
        dev_macro_f1: d.dev_macro_f1,
        curve: d.curve.iter().map(|c| (c.tau, c.macro_f1)).collect(),
    })
}

#[pyfunction]
fn apply_threshold(p_subj: Vec<f64>, tau: f64) -> PyResult<Vec<&'static str>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ValidationError::new_err(format!("threshold {tau} outside (0, 1)")));
    }
    Ok(calibration::apply_threshold_all(&pairs(&p_subj)?, tau)
        .into_iter()
        .map(GoldLabel::as_str)
        .collect())
}

#[pyfunction]
fn class_weights(obj: usize, subj: usize) -> PyResult<(f64, f64)> {
    let w = model::class_weights(&LabelDistribution { obj, subj }).py_err()?;
    Ok((w.obj, w.subj))
}

#[pyfunction]
#[pyo3(signature = (p_subj, gold, w_obj=1.0, w_subj=1.0))]
fn weighted_ce(p_subj: f64, gold: &str, w_obj: f64, w_subj: f64) -> PyResult<f64> {
    let p = ProbabilityPair::from_subj(p_subj).py_err()?;
    let gold = gold.parse().py_err()?;
    Ok(model::weighted_ce(&p, gold, &ClassWeights { obj: w_obj, subj: w_subj }))
}

#[pyfunction]
#[pyo3(signature = (p_subj, gold, alpha=1.0, gamma=2.0))]
fn focal_loss(p_subj: f64, gold: &str, alpha: f64, gamma: f64) -> PyResult<f64> {
    let p = ProbabilityPair::from_subj(p_subj).py_err()?;
    Ok(model::focal_loss(&p, gold.parse().py_err()?, alpha, gamma))
}

#[pyfunction]
fn stub_sentiment(text: &str) -> (f64, f64, f64) {
    let [p, n, g] = sentiment::stub_score(text).to_array();
    (p, n, g)
}

#[pyfunction]
#[pyo3(signature = (text, dim=64, max_seq_len=256))]
fn encode(text: &str, dim: usize, max_seq_len: usize) -> PyResult<Vec<f64>> {
    let enc = ToyHashEncoder::new(dim, max_seq_len).py_err()?;
    Ok(enc.encode(text).py_err()?.values)
}

#[pyfunction]
fn fuse(embedding: Vec<f64>, sentiment: (f64, f64, f64)) -> PyResult<Vec<f64>> {
    let emb = Embedding {
        values: embedding,
        source: "python".into(),
    };
    let s = SentimentVector::new(sentiment.0, sentiment.1, sentiment.2).py_err()?;
    Ok(model::fuse(&emb, &s).py_err()?.values)
}

/// Parses a TSV split into `(id, text, label or None)` tuples.
#[pyfunction]
fn parse_tsv(path: PathBuf, lang: &str, split: &str) -> PyResult<Vec<(String, String, Option<&'static str>)>> {
    let lang = LanguageCode::new(lang).py_err()?;
    let s = corpus::parse_tsv(&path, &lang, split_name(split)?).py_err()?;
    Ok(s.records
        .into_iter()
        .map(|r| (r.id, r.text, r.label.map(GoldLabel::as_str)))
        .collect())
}

/// `(obj, subj)` counts of a labeled TSV split.
#[pyfunction]
fn label_distribution(path: PathBuf, lang: &str, split: &str) -> PyResult<(usize, usize)> {
    let lang = LanguageCode::new(lang).py_err()?;
    let s = corpus::parse_tsv(&path, &lang, split_name(split)?).py_err()?;
    let d = corpus::label_distribution(&s).py_err()?;
    Ok((d.obj, d.subj))
}

/// Writes a seeded desk-scale corpus under `data_root` and its planted
/// sentiment cache to `cache_path`.
#[pyfunction]
fn write_synthetic(data_root: PathBuf, cache_path: PathBuf, lang: &str, seed: u64) -> PyResult<()> {
    let cfg = SyntheticConfig::desk(LanguageCode::new(lang).py_err()?, seed);
    let syn = synthetic::generate(&cfg).py_err()?;
    syn.write_corpus(&data_root).py_err()?;
    syn.write_cache(&cache_path).py_err()
}

/// Runs the experiment described by a JSON spec file.
#[pyfunction]
fn run_experiment(py: Python<'_>, spec_path: PathBuf, out_dir: PathBuf) -> PyResult<RunSummary> {
    let run = py
        .detach(|| ExperimentSpec::load(&spec_path).and_then(|spec| experiments::run_from_spec(&spec, &out_dir)))
        .py_err()?;
    Ok(RunSummary {
        out_dir: run.out_dir,
        tau: run.tau,
        epoch: run.checkpoint.epoch,
        results: run
            .results
            .into_iter()
            .map(|r| (r.language, r.macro_f1, r.subj_f1))
            .collect(),
    })
}

#[pymodule]
fn subjfuse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("SubjfuseError", py.get_type::<SubjfuseError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("MissingDependencyError", py.get_type::<MissingDependencyError>())?;
    m.add("DEFAULT_THRESHOLD", calibration::DEFAULT_THRESHOLD)?;
    m.add("TOY_ENCODER_ID", model::TOY_ENCODER_ID)?;
    m.add_class::<MetricsReport>()?;
    m.add_class::<ThresholdDecision>()?;
    m.add_class::<RunSummary>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(apply_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(class_weights, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_ce, m)?)?;
    m.add_function(wrap_pyfunction!(focal_loss, m)?)?;
    m.add_function(wrap_pyfunction!(stub_sentiment, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(parse_tsv, m)?)?;
    m.add_function(wrap_pyfunction!(label_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

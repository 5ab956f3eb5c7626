//! Experiment orchestration and the analysis artifacts built on top of runs.
//!
//! A run trains on the config's training languages, optionally calibrates the
//! decision threshold on dev, and evaluates every evaluation language's
//! dev-test split. Everything a run produces lands in one directory:
//!
//! | file | content |
//! |---|---|
//! | `manifest.json` | effective spec, code version, digests of outputs |
//! | `checkpoint.json` | selected head + dev report |
//! | `history.json` | per-epoch loss and dev macro F1 |
//! | `dev.tsv`, `dev_probs.tsv` | dev gold labels and probabilities |
//! | `threshold.json` | calibration report (when enabled) |
//! | `devtest_<lang>.tsv`, `devtest_probs_<lang>.tsv` | eval gold and probabilities |
//! | `metrics_<lang>.json` | metrics document per eval language |
//! | `results.csv` | table rows, plus pooled/averaged rows for multi-language evals |

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{self, ThresholdDecision, DEFAULT_THRESHOLD};
use crate::corpus::{
    self, ColumnConfig, Corpora, DatasetSplit, GoldLabel, LanguageCode, SentenceRecord, SplitName,
};
use crate::error::{Error, Result};
use crate::files::{self, PredictionRow};
use crate::metrics::{self, MetricsDocument, MetricsReport};
use crate::model::{self, Checkpoint, Encoder, LossKind, ProbabilityPair, TrainingConfig, Variant};
use crate::sentiment::{SentimentCache, SentimentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Monolingual,
    Multilingual,
    ZeroShot,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Monolingual => "monolingual",
            Mode::Multilingual => "multilingual",
            Mode::ZeroShot => "zero_shot",
        }
    }
}

fn default_encoder() -> String {
    model::TOY_ENCODER_ID.to_string()
}

fn default_seed() -> u64 {
    42
}

/// JSON experiment configuration.
///
/// `loss` and `seed` override the corresponding training fields. Relative
/// paths are resolved against the config file's directory by
/// [`ExperimentSpec::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub train_langs: Vec<LanguageCode>,
    #[serde(default)]
    pub eval_langs: Vec<LanguageCode>,
    pub variant: Variant,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(default)]
    pub calibrate: bool,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_encoder")]
    pub encoder: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_root: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_provider: Option<String>,
}

fn default_loss() -> LossKind {
    LossKind::WeightedCe
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let mut spec: ExperimentSpec = files::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut spec.data_root, &mut spec.sentiment_cache].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        spec.normalize();
        spec.validate()?;
        Ok(spec)
    }

    /// Fills defaulted evaluation languages and copies `loss`/`seed` into
    /// the training config.
    pub fn normalize(&mut self) {
        if self.eval_langs.is_empty() && self.mode != Mode::ZeroShot {
            self.eval_langs = self.train_langs.clone();
        }
        self.training.loss = self.loss;
        self.training.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        let train: BTreeSet<_> = self.train_langs.iter().collect();
        let eval: BTreeSet<_> = self.eval_langs.iter().collect();
        if train.is_empty() || eval.is_empty() {
            return Err(Error::validation("experiment needs training and evaluation languages"));
        }
        if train.len() != self.train_langs.len() || eval.len() != self.eval_langs.len() {
            return Err(Error::validation("language lists contain duplicates"));
        }
        match self.mode {
            Mode::Monolingual if train.len() != 1 || train != eval => Err(Error::validation(
                "monolingual runs train and evaluate on the same single language",
            )),
            Mode::Multilingual if train != eval => Err(Error::validation(
                "multilingual runs evaluate on each training language",
            )),
            Mode::ZeroShot if !train.is_disjoint(&eval) => Err(Error::validation(
                "zero-shot evaluation languages must not be trained on",
            )),
            _ => self.training.validate(),
        }
    }

    pub fn effective_training(&self) -> TrainingConfig {
        TrainingConfig {
            loss: self.loss,
            seed: self.seed,
            ..self.training.clone()
        }
    }

    fn all_langs(&self) -> BTreeSet<LanguageCode> {
        self.train_langs.iter().chain(&self.eval_langs).cloned().collect()
    }
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub setting: String,
    pub language: String,
    pub variant: String,
    pub threshold: f64,
    pub macro_f1: f64,
    pub subj_f1: f64,
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("setting,language,variant,threshold,macro_f1,subj_f1\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.2},{:.4},{:.4}\n",
            r.setting, r.language, r.variant, r.threshold, r.macro_f1, r.subj_f1
        ));
    }
    out
}

/// Digest-stamped description of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub spec: ExperimentSpec,
    pub code_version: String,
    pub encoder_id: String,
    pub sentiment_provider: Option<String>,
    /// Output file name → sha256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub checkpoint: Checkpoint,
    pub threshold: Option<ThresholdDecision>,
    /// Threshold applied to the eval splits.
    pub tau: f64,
    pub per_language: BTreeMap<LanguageCode, MetricsReport>,
    /// Metrics over the concatenated eval splits, for multi-language evals.
    pub pooled: Option<MetricsReport>,
    pub results: Vec<ResultRow>,
    pub prediction_files: BTreeMap<LanguageCode, PathBuf>,
}

impl RunArtifacts {
    pub fn checkpoint_path(&self) -> PathBuf {
        self.out_dir.join("checkpoint.json")
    }
}

pub fn dev_probs_file() -> &'static str {
    "dev_probs.tsv"
}

pub fn devtest_probs_file(lang: &LanguageCode) -> String {
    format!("devtest_probs_{lang}.tsv")
}

fn prediction_rows(records: &[SentenceRecord], probs: &[ProbabilityPair], tau: f64) -> Vec<PredictionRow> {
    records
        .iter()
        .zip(probs)
        .map(|(r, p)| PredictionRow {
            id: r.id.clone(),
            probs: *p,
            predicted: calibration::apply_threshold(p, tau),
        })
        .collect()
}

fn training_data(spec: &ExperimentSpec, corpora: &Corpora) -> Result<(DatasetSplit, DatasetSplit, BTreeMap<LanguageCode, DatasetSplit>)> {
    let missing: Vec<String> = spec
        .all_langs()
        .into_iter()
        .filter(|l| !corpora.contains_key(l))
        .map(|l| l.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Missing {
            what: "language data",
            ids: missing,
        });
    }
    match spec.mode {
        Mode::Monolingual => {
            let c = &corpora[&spec.train_langs[0]];
            let eval = BTreeMap::from([(c.language.clone(), c.dev_test.clone())]);
            Ok((c.train.clone(), c.dev.clone(), eval))
        }
        Mode::Multilingual => {
            let cs: Vec<_> = spec.train_langs.iter().map(|l| &corpora[l]).collect();
            let train = corpus::merge_splits(&cs.iter().map(|c| &c.train).collect::<Vec<_>>())?;
            let dev = corpus::merge_splits(&cs.iter().map(|c| &c.dev).collect::<Vec<_>>())?;
            let eval = cs.iter().map(|c| (c.language.clone(), c.dev_test.clone())).collect();
            Ok((train, dev, eval))
        }
        Mode::ZeroShot => {
            let sel = corpus::select_zero_shot(
                corpora,
                &spec.train_langs.iter().cloned().collect(),
                &spec.eval_langs.iter().cloned().collect(),
            )?;
            Ok((sel.train, sel.dev, sel.eval))
        }
    }
}

/// Trains, optionally calibrates, and evaluates one experiment, writing all
/// artifacts to `out_dir`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    corpora: &Corpora,
    sentiment: Option<&SentimentCache>,
    encoder: &dyn Encoder,
    out_dir: &Path,
) -> Result<RunArtifacts> {
    let mut spec = spec.clone();
    spec.normalize();
    spec.validate()?;
    if spec.encoder != encoder.id() {
        return Err(Error::validation(format!(
            "spec names encoder `{}` but `{}` was supplied",
            spec.encoder,
            encoder.id()
        )));
    }
    if spec.variant == Variant::SentimentFused && sentiment.is_none() {
        return Err(Error::Missing {
            what: "sentiment cache for the fused variant",
            ids: vec![],
        });
    }
    let sentiment = match spec.variant {
        Variant::Baseline => None,
        Variant::SentimentFused => sentiment,
    };
    let (train_split, dev_split, eval) = training_data(&spec, corpora)?;
    let config = spec.effective_training();
    let columns = ColumnConfig::default();
    let mut outputs = BTreeMap::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<PathBuf> {
        let path = out_dir.join(name);
        files::write_atomic(&path, &bytes)?;
        outputs.insert(name.to_string(), files::sha256_hex(&bytes));
        Ok(path)
    };
    let json = |v: &dyn erased::Json| v.to_pretty();

    let outcome = model::train(&config, spec.variant, &train_split, &dev_split, sentiment, encoder)?;
    let checkpoint = outcome.best;
    emit("checkpoint.json", json(&checkpoint)?)?;
    emit("history.json", json(&outcome.history)?)?;

    let dev_probs = model::predict_probs(&checkpoint, &dev_split.records, sentiment, encoder)?;
    let dev_gold = dev_split.gold_labels()?;
    emit("dev.tsv", corpus::serialize_tsv(&dev_split, &columns)?.into_bytes())?;
    emit(
        dev_probs_file(),
        files::serialize_predictions(&prediction_rows(&dev_split.records, &dev_probs, DEFAULT_THRESHOLD))
            .into_bytes(),
    )?;
    emit(
        "dev_metrics.json",
        json(&MetricsDocument::new(
            "dev",
            spec.mode.as_str(),
            spec.variant.as_str(),
            DEFAULT_THRESHOLD,
            &checkpoint.dev_report,
        ))?,
    )?;

    let threshold = if spec.calibrate {
        let decision = calibration::grid_search_threshold(&dev_probs, &dev_gold)?;
        emit("threshold.json", json(&decision)?)?;
        Some(decision)
    } else {
        None
    };
    let tau = threshold.as_ref().map_or(DEFAULT_THRESHOLD, |d| d.tau);

    let mut per_language = BTreeMap::new();
    let mut prediction_files = BTreeMap::new();
    let mut results = Vec::new();
    let mut pooled_preds = Vec::new();
    let mut pooled_gold = Vec::new();
    for (lang, split) in &eval {
        let probs = model::predict_probs(&checkpoint, &split.records, sentiment, encoder)?;
        let gold = split.gold_labels()?;
        let rows = prediction_rows(&split.records, &probs, tau);
        let preds: Vec<GoldLabel> = rows.iter().map(|r| r.predicted).collect();
        let report = metrics::evaluate(&preds, &gold)?;
        emit(&format!("devtest_{lang}.tsv"), corpus::serialize_tsv(split, &columns)?.into_bytes())?;
        let path = emit(&devtest_probs_file(lang), files::serialize_predictions(&rows).into_bytes())?;
        emit(
            &format!("metrics_{lang}.json"),
            json(&MetricsDocument::new(lang.as_str(), spec.mode.as_str(), spec.variant.as_str(), tau, &report))?,
        )?;
        results.push(ResultRow {
            setting: spec.mode.as_str().into(),
            language: lang.to_string(),
            variant: spec.variant.as_str().into(),
            threshold: tau,
            macro_f1: report.macro_f1,
            subj_f1: report.subj_f1,
        });
        pooled_preds.extend(preds);
        pooled_gold.extend(gold);
        per_language.insert(lang.clone(), report);
        prediction_files.insert(lang.clone(), path);
    }

    let pooled = if eval.len() > 1 {
        let report = metrics::evaluate(&pooled_preds, &pooled_gold)?;
        let n = per_language.len() as f64;
        let row = |language: &str, macro_f1: f64, subj_f1: f64| ResultRow {
            setting: spec.mode.as_str().into(),
            language: language.into(),
            variant: spec.variant.as_str().into(),
            threshold: tau,
            macro_f1,
            subj_f1,
        };
        results.push(row("pooled", report.macro_f1, report.subj_f1));
        results.push(row(
            "average",
            per_language.values().map(|r| r.macro_f1).sum::<f64>() / n,
            per_language.values().map(|r| r.subj_f1).sum::<f64>() / n,
        ));
        emit(
            "metrics_pooled.json",
            json(&MetricsDocument::new("pooled", spec.mode.as_str(), spec.variant.as_str(), tau, &report))?,
        )?;
        Some(report)
    } else {
        None
    };
    emit("results.csv", results_csv(&results).into_bytes())?;

    let manifest = RunManifest {
        spec: spec.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        encoder_id: encoder.id().to_string(),
        sentiment_provider: sentiment.and_then(|c| c.provider_id().map(str::to_string)),
        outputs,
    };
    files::write_json(&out_dir.join("manifest.json"), &manifest)?;

    Ok(RunArtifacts {
        out_dir: out_dir.to_path_buf(),
        checkpoint,
        threshold,
        tau,
        per_language,
        pooled,
        results,
        prediction_files,
    })
}

/// Loads corpora and sentiment cache named in an experiment config and runs it.
pub fn run_from_spec(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunArtifacts> {
    let root = spec
        .data_root
        .as_ref()
        .ok_or_else(|| Error::validation("spec has no data_root"))?;
    let langs: Vec<LanguageCode> = spec.all_langs().into_iter().collect();
    let corpora = corpus::load_corpora(root, &langs, &ColumnConfig::default())?;
    let cache = match (&spec.sentiment_cache, spec.variant) {
        (Some(p), _) if p.is_file() => Some(SentimentCache::load(p, spec.sentiment_provider.as_deref())?),
        (_, Variant::Baseline) => None,
        (p, Variant::SentimentFused) => {
            return Err(Error::Missing {
                what: "sentiment cache for the fused variant",
                ids: p.iter().map(|p| p.display().to_string()).collect(),
            })
        }
    };
    let encoder = model::resolve_encoder(&spec.encoder, spec.training.max_seq_len)?;
    run_experiment(spec, &corpora, cache.as_ref(), encoder.as_ref(), out_dir)
}

/// Re-executes a run from its `manifest.json` alone.
pub fn rerun_from_manifest(manifest_path: &Path, out_dir: &Path) -> Result<RunArtifacts> {
    let manifest: RunManifest = files::read_json(manifest_path)?;
    run_from_spec(&manifest.spec, out_dir)
}

// Small helper so heterogeneous values can be serialized through one closure.
mod erased {
    use super::*;

    pub trait Json {
        fn to_pretty(&self) -> Result<Vec<u8>>;
    }

    impl<T: Serialize> Json for T {
        fn to_pretty(&self) -> Result<Vec<u8>> {
            let mut v = serde_json::to_vec_pretty(self).map_err(|e| Error::json("serializing artifact", e))?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

/// Pairs prediction rows with gold labels by sentence id.
///
/// Ids of merged splits (`<lang>:<id>`) also match the bare id.
pub fn align_with_gold(rows: &[PredictionRow], gold: &DatasetSplit) -> Result<(Vec<ProbabilityPair>, Vec<GoldLabel>)> {
    let by_id: HashMap<&str, &SentenceRecord> = gold.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut probs = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut missing = Vec::new();
    for row in rows {
        let record = by_id.get(row.id.as_str()).or_else(|| {
            row.id
                .split_once(':')
                .and_then(|(lang, id)| by_id.get(id).filter(|r| r.language.as_str() == lang))
        });
        match record.and_then(|r| r.label) {
            Some(label) => {
                probs.push(row.probs);
                labels.push(label);
            }
            None => missing.push(row.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Missing {
            what: "gold labels",
            ids: missing,
        });
    }
    Ok((probs, labels))
}

/// Threshold vs. default-threshold scores for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub language: String,
    pub tau: f64,
    pub threshold_macro_f1: f64,
    pub threshold_subj_f1: f64,
    pub default_macro_f1: f64,
    pub default_subj_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub decision: ThresholdDecision,
    /// Dev macro F1 at τ = 0.5.
    pub dev_default_macro_f1: f64,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "language,tau,threshold_macro_f1,threshold_subj_f1,default_macro_f1,default_subj_f1\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.2},{:.4},{:.4},{:.4},{:.4}\n",
                r.language, r.tau, r.threshold_macro_f1, r.threshold_subj_f1, r.default_macro_f1, r.default_subj_f1
            ));
        }
        out
    }
}

/// Scores stored probabilities under the dev-calibrated threshold and under
/// τ = 0.5. No retraining is involved.
pub fn ablation_rows(
    dev_probs: &[ProbabilityPair],
    dev_gold: &[GoldLabel],
    eval: &[(String, Vec<ProbabilityPair>, Vec<GoldLabel>)],
) -> Result<AblationTable> {
    let decision = calibration::grid_search_threshold(dev_probs, dev_gold)?;
    let dev_default_macro_f1 = calibration::macro_f1_at(dev_probs, dev_gold, DEFAULT_THRESHOLD)?;
    let rows = eval
        .iter()
        .map(|(language, probs, gold)| {
            let at = |tau| metrics::evaluate(&calibration::apply_threshold_all(probs, tau), gold);
            let cal = at(decision.tau)?;
            let def = at(DEFAULT_THRESHOLD)?;
            Ok(AblationRow {
                language: language.clone(),
                tau: decision.tau,
                threshold_macro_f1: cal.macro_f1,
                threshold_subj_f1: cal.subj_f1,
                default_macro_f1: def.macro_f1,
                default_subj_f1: def.subj_f1,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AblationTable {
        decision,
        dev_default_macro_f1,
        rows,
    })
}

/// Probability files and gold labels of a finished run directory.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub dev: (Vec<ProbabilityPair>, Vec<GoldLabel>),
    pub eval: Vec<(String, Vec<ProbabilityPair>, Vec<GoldLabel>)>,
}

impl RunRecord {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: RunManifest = files::read_json(&dir.join("manifest.json"))?;
        let xx = LanguageCode::new("xx")?;
        let gold_split = |name: &str, split: SplitName| {
            corpus::parse_tsv(&dir.join(name), &xx, split)
        };
        let dev = align_with_gold(
            &files::read_predictions(&dir.join(dev_probs_file()))?,
            &gold_split("dev.tsv", SplitName::Dev)?,
        )?;
        let eval = manifest
            .spec
            .eval_langs
            .iter()
            .map(|lang| {
                let rows = files::read_predictions(&dir.join(devtest_probs_file(lang)))?;
                let (p, g) = align_with_gold(&rows, &gold_split(&format!("devtest_{lang}.tsv"), SplitName::DevTest)?)?;
                Ok((lang.to_string(), p, g))
            })
            .collect::<Result<_>>()?;
        Ok(RunRecord {
            dir: dir.to_path_buf(),
            manifest,
            dev,
            eval,
        })
    }
}

/// Threshold ablation over a calibrated run and its uncalibrated twin.
///
/// The two specs must agree on everything except `calibrate` and `seed`.
/// Both decision rules are applied to the calibrated run's stored
/// probabilities.
pub fn threshold_ablation(calibrated: &RunRecord, uncalibrated: &RunRecord) -> Result<AblationTable> {
    let strip = |s: &ExperimentSpec| ExperimentSpec {
        calibrate: false,
        seed: 0,
        training: TrainingConfig {
            seed: 0,
            ..s.training.clone()
        },
        ..s.clone()
    };
    if strip(&calibrated.manifest.spec) != strip(&uncalibrated.manifest.spec) {
        return Err(Error::validation(
            "ablation runs differ in more than the calibrate flag and seed",
        ));
    }
    if !calibrated.manifest.spec.calibrate {
        return Err(Error::validation("first ablation run is not calibrated"));
    }
    ablation_rows(&calibrated.dev.0, &calibrated.dev.1, &calibrated.eval)
}

/// Index sets from comparing two models' predictions against gold.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementSets {
    pub a_only_correct: Vec<usize>,
    pub b_only_correct: Vec<usize>,
    pub both_correct: Vec<usize>,
    pub neither_correct: Vec<usize>,
}

pub fn disagreement_sets(preds_a: &[GoldLabel], preds_b: &[GoldLabel], gold: &[GoldLabel]) -> Result<DisagreementSets> {
    if preds_a.len() != gold.len() || preds_b.len() != gold.len() {
        return Err(Error::validation(format!(
            "prediction lists of length {} and {} for {} gold labels",
            preds_a.len(),
            preds_b.len(),
            gold.len()
        )));
    }
    let mut sets = DisagreementSets::default();
    for (i, g) in gold.iter().enumerate() {
        let set = match (preds_a[i] == *g, preds_b[i] == *g) {
            (true, false) => &mut sets.a_only_correct,
            (false, true) => &mut sets.b_only_correct,
            (true, true) => &mut sets.both_correct,
            (false, false) => &mut sets.neither_correct,
        };
        set.push(i);
    }
    Ok(sets)
}

pub const COMPONENTS: [&str; 3] = ["positive", "neutral", "negative"];

/// Mean and sample standard deviation of each sentiment component for one
/// gold label. `std` is `None` for a single-member group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSentimentStats {
    pub label: GoldLabel,
    pub n: usize,
    pub mean: [f64; 3],
    pub std: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementStats {
    pub rows: Vec<LabelSentimentStats>,
    /// Labels with no selected sentence; they have no row.
    pub omitted: Vec<GoldLabel>,
}

/// Per-label sentiment statistics over the sentences at `indices`.
pub fn sentiment_stats(indices: &[usize], sentiments: &[SentimentVector], gold: &[GoldLabel]) -> Result<DisagreementStats> {
    if sentiments.len() != gold.len() {
        return Err(Error::validation("sentiments and gold labels are not aligned"));
    }
    if let Some(bad) = indices.iter().find(|&&i| i >= gold.len()) {
        return Err(Error::validation(format!("index {bad} out of range")));
    }
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for label in GoldLabel::ALL {
        let group: Vec<[f64; 3]> = indices
            .iter()
            .filter(|&&i| gold[i] == label)
            .map(|&i| sentiments[i].to_array())
            .collect();
        let n = group.len();
        if n == 0 {
            omitted.push(label);
            continue;
        }
        let mut mean = [0.0; 3];
        for v in &group {
            for k in 0..3 {
                mean[k] += v[k];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let std = (n > 1).then(|| {
            let mut var = [0.0; 3];
            for v in &group {
                for k in 0..3 {
                    var[k] += (v[k] - mean[k]).powi(2);
                }
            }
            var.map(|s| (s / (n - 1) as f64).sqrt())
        });
        rows.push(LabelSentimentStats { label, n, mean, std });
    }
    Ok(DisagreementStats { rows, omitted })
}

/// Quantile of sorted data by linear interpolation between closest ranks
/// (position `p · (n − 1)`).
pub fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileRow {
    pub language: String,
    pub label: GoldLabel,
    pub component: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Quartiles of every sentiment component per (language, label) group.
pub fn distribution_summary(split: &DatasetSplit, sentiment: &SentimentCache) -> Result<Vec<QuartileRow>> {
    let gold = split.gold_labels()?;
    let vectors = sentiment.lookup_all(&split.records)?;
    let mut groups: BTreeMap<(String, GoldLabel), Vec<[f64; 3]>> = BTreeMap::new();
    for ((r, g), v) in split.records.iter().zip(&gold).zip(&vectors) {
        groups
            .entry((r.language.to_string(), *g))
            .or_default()
            .push(v.to_array());
    }
    let mut rows = Vec::with_capacity(groups.len() * 3);
    for ((language, label), vs) in groups {
        for (k, component) in COMPONENTS.iter().enumerate() {
            let mut col: Vec<f64> = vs.iter().map(|v| v[k]).collect();
            col.sort_by(f64::total_cmp);
            rows.push(QuartileRow {
                language: language.clone(),
                label,
                component: component.to_string(),
                q1: quantile_linear(&col, 0.25),
                median: quantile_linear(&col, 0.5),
                q3: quantile_linear(&col, 0.75),
            });
        }
    }
    Ok(rows)
}

pub fn distribution_csv(rows: &[QuartileRow]) -> String {
    let mut out = String::from("language,label,component,q1,median,q3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.language, r.label, r.component, r.q1, r.median, r.q3
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use GoldLabel::{Obj as O, Subj as S};

    fn sv(p: f64, n: f64, g: f64) -> SentimentVector {
        SentimentVector::new(p, n, g).unwrap()
    }

    #[test]
    fn disagreement_extremes() {
        let gold = [S, O, S];
        let wrong: Vec<_> = gold.iter().map(|g| g.other()).collect();
        let sets = disagreement_sets(&gold, &wrong, &gold).unwrap();
        assert_eq!(sets.a_only_correct, vec![0, 1, 2]);
        let sets = disagreement_sets(&wrong, &wrong, &gold).unwrap();
        assert!(sets.a_only_correct.is_empty() && sets.b_only_correct.is_empty());
        assert!(disagreement_sets(&gold, &gold[..2], &gold).is_err());
    }

    #[test]
    fn stats_singleton_and_pair() {
        let s = sentiment_stats(&[0], &[sv(0.2, 0.3, 0.5)], &[S]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].mean, [0.2, 0.3, 0.5]);
        assert_eq!(s.rows[0].std, None);
        assert_eq!(s.omitted, vec![O]);

        let s = sentiment_stats(&[0, 1], &[sv(0.0, 0.0, 1.0), sv(1.0, 0.0, 0.0)], &[O, O]).unwrap();
        let row = &s.rows[0];
        assert_eq!(row.mean, [0.5, 0.0, 0.5]);
        let std = row.std.unwrap();
        assert!((std[0] - 0.7071).abs() < 1e-4 && std[1] == 0.0 && (std[2] - 0.7071).abs() < 1e-4);
        assert!(sentiment_stats(&[3], &[sv(0.2, 0.3, 0.5)], &[S]).is_err());
    }

    #[test]
    fn quartiles_by_linear_interpolation() {
        let d = [0.1, 0.2, 0.3, 0.4];
        assert!((quantile_linear(&d, 0.25) - 0.175).abs() < 1e-15);
        assert!((quantile_linear(&d, 0.5) - 0.25).abs() < 1e-15);
        assert!((quantile_linear(&d, 0.75) - 0.325).abs() < 1e-15);
        let c = [0.4; 5];
        assert_eq!(
            [0.25, 0.5, 0.75].map(|p| quantile_linear(&c, p)),
            [0.4, 0.4, 0.4]
        );
    }

    #[test]
    fn spec_invariants() {
        let en = LanguageCode::new("en").unwrap();
        let it = LanguageCode::new("it").unwrap();
        let mut spec = ExperimentSpec {
            mode: Mode::Monolingual,
            train_langs: vec![en.clone()],
            eval_langs: vec![],
            variant: Variant::Baseline,
            loss: LossKind::Focal,
            calibrate: true,
            training: TrainingConfig::default(),
            seed: 7,
            encoder: default_encoder(),
            data_root: None,
            sentiment_cache: None,
            sentiment_provider: None,
        };
        spec.normalize();
        spec.validate().unwrap();
        assert_eq!(spec.eval_langs, vec![en.clone()]);
        assert_eq!(spec.effective_training().loss, LossKind::Focal);
        assert_eq!(spec.effective_training().seed, 7);

        spec.mode = Mode::ZeroShot;
        assert!(spec.validate().is_err());
        spec.eval_langs = vec![it.clone()];
        spec.validate().unwrap();
        spec.mode = Mode::Monolingual;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn results_csv_shape() {
        let csv = results_csv(&[ResultRow {
            setting: "monolingual".into(),
            language: "en".into(),
            variant: "baseline".into(),
            threshold: 0.45,
            macro_f1: 0.73333,
            subj_f1: 0.5,
        }]);
        assert_eq!(csv, "setting,language,variant,threshold,macro_f1,subj_f1\nmonolingual,en,baseline,0.45,0.7333,0.5000\n");
    }
}

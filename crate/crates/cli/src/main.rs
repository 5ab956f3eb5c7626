//! `subjfuse`: command-line front end for the subjectivity pipeline.
//!
//! Every stage reads and writes files, so stages can be re-run in isolation,
//! and appends one provenance line to `manifest.jsonl` next to its output.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid or unreadable input,
//! 3 missing dependency artifact, 4 internal failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use subjfuse_core::calibration::{self, ThresholdDecision, DEFAULT_THRESHOLD};
use subjfuse_core::corpus::{self, ColumnConfig, DatasetSplit, DistributionSummary, LanguageCode, SplitName};
use subjfuse_core::error::ErrorClass;
use subjfuse_core::experiments::{self, ExperimentSpec, Mode, RunRecord};
use subjfuse_core::files::{self, ManifestLine, PredictionRow};
use subjfuse_core::metrics::{self, MetricsDocument};
use subjfuse_core::model::{self, Checkpoint, LossKind, Variant};
use subjfuse_core::sentiment::{self, CommandProvider, SentimentCache, SentimentCacheEntry, SentimentProvider, StubProvider};

#[derive(Parser)]
#[command(name = "subjfuse", version, about = "Sentiment-fused subjectivity detection pipeline")]
struct Cli {
    /// Worker threads for scoring, encoding and threshold search.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate corpus TSVs and report label distributions.
    Ingest(IngestArgs),
    /// Score every sentence with a sentiment provider and write the cache.
    SentimentCache(SentimentCacheArgs),
    /// Run an experiment: train, optionally calibrate, evaluate dev-test.
    Train(TrainArgs),
    /// Choose the decision threshold from dev probabilities.
    Calibrate(CalibrateArgs),
    /// Write class probabilities for a TSV split with a trained checkpoint.
    Predict(PredictArgs),
    /// Score a predictions file against gold labels.
    Evaluate(EvaluateArgs),
    /// Compare calibrated and τ = 0.5 decisions on stored probabilities.
    Ablate(AblateArgs),
    /// Disagreement and sentiment-distribution analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Collect the result rows of finished runs into one table.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding `<lang>/<split>.tsv` files.
    #[arg(long, env = "SUBJFUSE_DATA_ROOT")]
    data_root: PathBuf,
    /// Language code; repeat for several.
    #[arg(long = "lang", required = true)]
    langs: Vec<String>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON file receiving the per-split label distributions.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderChoice {
    Stub,
    Command,
}

#[derive(Args)]
struct SentimentCacheArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "stub")]
    provider: ProviderChoice,
    /// Scorer program for `--provider command`; reads sentences on stdin,
    /// prints `pos⇥neu⇥neg` lines.
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long = "arg", allow_hyphen_values = true)]
    program_args: Vec<String>,
    /// Identifier recorded with every cache entry of a command provider.
    #[arg(long)]
    provider_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Baseline,
    Sentiment,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Baseline => Variant::Baseline,
            VariantArg::Sentiment => Variant::SentimentFused,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Wce,
    Focal,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Wce => LossKind::WeightedCe,
            LossArg::Focal => LossKind::Focal,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's training languages (monolingual runs only).
    #[arg(long)]
    lang: Option<String>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's data root.
    #[arg(long, env = "SUBJFUSE_DATA_ROOT")]
    data_root: Option<PathBuf>,
    /// Overrides the config's sentiment cache.
    #[arg(long)]
    sentiment_cache: Option<PathBuf>,
    #[arg(long)]
    calibrate: Option<bool>,
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Dev predictions (`sentence_id⇥p_obj⇥p_subj⇥predicted_label`).
    #[arg(long)]
    preds: PathBuf,
    /// Dev TSV with gold labels.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// TSV split to score; labels are optional.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lang: String,
    #[arg(long)]
    sentiment_cache: Option<PathBuf>,
    /// Threshold report from `calibrate`; τ = 0.5 when absent.
    #[arg(long, conflicts_with = "tau")]
    threshold: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    preds: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value = "xx")]
    lang: String,
    #[arg(long, default_value = "monolingual")]
    setting: String,
    #[arg(long, value_enum, default_value = "baseline")]
    variant: VariantArg,
    #[arg(long, conflicts_with = "tau")]
    threshold: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    /// Run directory trained with calibration enabled.
    #[arg(long)]
    calibrated: PathBuf,
    /// Twin run directory trained without calibration.
    #[arg(long)]
    uncalibrated: PathBuf,
    /// CSV table; a JSON copy is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Compare two runs' dev-test decisions and summarize sentiment of the
    /// sentences only one of them gets right.
    Disagreement(DisagreementArgs),
    /// Quartiles of each sentiment component per language and label.
    Distribution(DistributionArgs),
}

#[derive(Args)]
struct DisagreementArgs {
    /// Run whose correct-only sentences are summarized first (e.g. fused).
    #[arg(long)]
    run_a: PathBuf,
    #[arg(long)]
    run_b: PathBuf,
    #[arg(long)]
    lang: String,
    #[arg(long)]
    sentiment_cache: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistributionArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_split, default_value = "train")]
    split: SplitName,
    #[arg(long)]
    sentiment_cache: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories holding `results.csv`.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_split(s: &str) -> Result<SplitName, String> {
    SplitName::ALL
        .into_iter()
        .find(|n| n.as_str() == s)
        .ok_or_else(|| format!("unknown split `{s}`"))
}

/// Misuse detected after argument parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<subjfuse_core::Error>().map(subjfuse_core::Error::class) {
        Some(ErrorClass::Validation) => 2,
        Some(ErrorClass::MissingDependency) => 3,
        _ => 4,
    }
}

fn langs(codes: &[String]) -> anyhow::Result<Vec<LanguageCode>> {
    codes.iter().map(|c| Ok(LanguageCode::new(c.as_str())?)).collect()
}

/// Fails with a missing-dependency error when a required artifact is absent.
fn require(path: &Path, what: &'static str) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(subjfuse_core::Error::Missing {
            what,
            ids: vec![path.display().to_string()],
        }
        .into())
    }
}

fn out_dir(out: &Path) -> PathBuf {
    match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn corpus_inputs(root: &Path, langs: &[LanguageCode], line: &mut ManifestLine) -> anyhow::Result<()> {
    for l in langs {
        for s in SplitName::ALL {
            if let Some(p) = corpus::split_path(root, l, s) {
                line.add_input(&p)?;
            }
        }
    }
    Ok(())
}

fn load_threshold(threshold: Option<&Path>, tau: Option<f64>) -> anyhow::Result<f64> {
    let tau = match (threshold, tau) {
        (Some(p), _) => {
            require(p, "threshold report")?;
            let d: ThresholdDecision = files::read_json(p)?;
            d.validate()?;
            d.tau
        }
        (None, Some(t)) => t,
        (None, None) => DEFAULT_THRESHOLD,
    };
    if !(tau > 0.0 && tau < 1.0) {
        return Err(usage(format!("threshold {tau} must lie strictly between 0 and 1")));
    }
    Ok(tau)
}

fn ingest(args: &IngestArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    let langs = langs(&args.data.langs)?;
    let corpora = corpus::load_corpora(&args.data.data_root, &langs, &ColumnConfig::default())?;
    corpus_inputs(&args.data.data_root, &langs, line)?;
    let mut summary = Vec::new();
    println!("{:<6}{:<10}{:>7}{:>7}", "lang", "split", "OBJ", "SUBJ");
    for (lang, c) in &corpora {
        for split in [&c.train, &c.dev, &c.dev_test] {
            let d = corpus::label_distribution(split)?;
            println!("{:<6}{:<10}{:>7}{:>7}", lang, split.name, d.obj, d.subj);
            summary.push(DistributionSummary {
                language: lang.to_string(),
                split: split.name,
                obj: d.obj,
                subj: d.subj,
            });
        }
        if let Some(test) = &c.test {
            println!("{:<6}{:<10}{:>7} unlabeled", lang, test.name, test.len());
        }
    }
    files::write_json(&args.out, &summary)?;
    Ok(())
}

fn sentiment_cache(args: &SentimentCacheArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    let langs = langs(&args.data.langs)?;
    let corpora = corpus::load_corpora(&args.data.data_root, &langs, &ColumnConfig::default())?;
    corpus_inputs(&args.data.data_root, &langs, line)?;
    let provider: Box<dyn SentimentProvider> = match args.provider {
        ProviderChoice::Stub => Box::new(StubProvider::default()),
        ProviderChoice::Command => {
            let program = args
                .program
                .as_ref()
                .ok_or_else(|| usage("--provider command needs --program"))?;
            let id = args
                .provider_id
                .as_deref()
                .ok_or_else(|| usage("--provider command needs --provider-id"))?;
            Box::new(CommandProvider::new(id, program, args.program_args.clone())?)
        }
    };
    let provider_id = provider.descriptor().provider_id.clone();
    let mut entries = Vec::new();
    for c in corpora.values() {
        let splits = [Some(&c.train), Some(&c.dev), Some(&c.dev_test), c.test.as_ref()];
        for split in splits.into_iter().flatten() {
            let vectors = sentiment::score_batch(&split.records, provider.as_ref())?;
            entries.extend(split.records.iter().zip(vectors).map(|(r, vector)| SentimentCacheEntry {
                sentence_id: r.id.clone(),
                language: r.language.clone(),
                vector,
                provider_id: provider_id.clone(),
            }));
        }
    }
    sentiment::write_cache(&entries, &args.out)?;
    line.details = json!({ "provider_id": provider_id, "entries": entries.len(), "scored_text": "full" });
    println!("{} entries from `{provider_id}` → {}", entries.len(), args.out.display());
    Ok(())
}

fn train(args: &TrainArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    require(&args.config, "experiment spec")?;
    line.add_input(&args.config)?;
    let mut spec = ExperimentSpec::load(&args.config)?;
    if let Some(l) = &args.lang {
        if spec.mode != Mode::Monolingual {
            return Err(usage("--lang only applies to monolingual specs"));
        }
        let l = LanguageCode::new(l.as_str())?;
        spec.train_langs = vec![l.clone()];
        spec.eval_langs = vec![l];
    }
    if let Some(v) = args.variant {
        spec.variant = v.into();
    }
    if let Some(l) = args.loss {
        spec.loss = l.into();
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(c) = args.calibrate {
        spec.calibrate = c;
    }
    if let Some(root) = &args.data_root {
        spec.data_root = Some(std::path::absolute(root).context("resolving data root")?);
    }
    if let Some(cache) = &args.sentiment_cache {
        spec.sentiment_cache = Some(std::path::absolute(cache).context("resolving sentiment cache")?);
    }
    spec.normalize();
    spec.validate()?;
    if let Some(cache) = spec.sentiment_cache.as_ref().filter(|p| p.is_file()) {
        line.add_input(cache)?;
    }
    let run = experiments::run_from_spec(&spec, &args.out)?;
    for row in &run.results {
        println!(
            "{:<13}{:<9}{:<16} τ={:.2}  macro F1 {:.4}  SUBJ F1 {:.4}",
            row.setting, row.language, row.variant, row.threshold, row.macro_f1, row.subj_f1
        );
    }
    line.details = json!({
        "epoch": run.checkpoint.epoch,
        "tau": run.tau,
        "dev_macro_f1": run.checkpoint.dev_report.macro_f1,
    });
    Ok(())
}

fn calibrate(args: &CalibrateArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    require(&args.preds, "dev predictions")?;
    line.add_input(&args.preds)?;
    line.add_input(&args.gold)?;
    let rows = files::read_predictions(&args.preds)?;
    let gold = corpus::parse_tsv(&args.gold, &LanguageCode::new("xx")?, SplitName::Dev)?;
    let (probs, labels) = experiments::align_with_gold(&rows, &gold)?;
    let decision = calibration::grid_search_threshold(&probs, &labels)?;
    files::write_json(&args.out, &decision)?;
    println!("τ = {:.2} (dev macro F1 {:.4})", decision.tau, decision.dev_macro_f1);
    line.details = json!({ "tau": decision.tau, "dev_macro_f1": decision.dev_macro_f1 });
    Ok(())
}

fn predict(args: &PredictArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    require(&args.checkpoint, "checkpoint")?;
    line.add_input(&args.checkpoint)?;
    line.add_input(&args.input)?;
    let checkpoint: Checkpoint = files::read_json(&args.checkpoint)?;
    let tau = load_threshold(args.threshold.as_deref(), args.tau)?;
    let lang = LanguageCode::new(args.lang.as_str())?;
    let split = corpus::parse_tsv(&args.input, &lang, SplitName::Test)?;
    let cache = match (&args.sentiment_cache, checkpoint.variant) {
        (_, Variant::Baseline) => None,
        (None, Variant::SentimentFused) => bail!(subjfuse_core::Error::Missing {
            what: "sentiment cache for the fused variant",
            ids: vec![],
        }),
        (Some(p), Variant::SentimentFused) => {
            require(p, "sentiment cache")?;
            line.add_input(p)?;
            Some(SentimentCache::load(p, None)?)
        }
    };
    let encoder = model::resolve_encoder(&checkpoint.encoder_id, checkpoint.config.max_seq_len)?;
    let probs = model::predict_probs(&checkpoint, &split.records, cache.as_ref(), encoder.as_ref())?;
    let rows: Vec<PredictionRow> = split
        .records
        .iter()
        .zip(probs)
        .map(|(r, probs)| PredictionRow {
            id: r.id.clone(),
            predicted: calibration::apply_threshold(&probs, tau),
            probs,
        })
        .collect();
    files::write_predictions(&args.out, &rows)?;
    line.details = json!({ "tau": tau, "rows": rows.len() });
    println!("{} predictions at τ={tau:.2} → {}", rows.len(), args.out.display());
    Ok(())
}

fn evaluate(args: &EvaluateArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    require(&args.preds, "predictions")?;
    line.add_input(&args.preds)?;
    line.add_input(&args.gold)?;
    let tau = load_threshold(args.threshold.as_deref(), args.tau)?;
    let rows = files::read_predictions(&args.preds)?;
    let lang = LanguageCode::new(args.lang.as_str())?;
    let gold = corpus::parse_tsv(&args.gold, &lang, SplitName::DevTest)?;
    let (probs, labels) = experiments::align_with_gold(&rows, &gold)?;
    let report = metrics::evaluate(&calibration::apply_threshold_all(&probs, tau), &labels)?;
    let doc = MetricsDocument::new(lang.as_str(), &args.setting, Variant::from(args.variant).as_str(), tau, &report);
    files::write_json(&args.out, &doc)?;
    println!(
        "macro F1 {:.4}  SUBJ F1 {:.4}  accuracy {:.4}  (τ={tau:.2}, n={})",
        report.macro_f1,
        report.subj_f1,
        report.accuracy,
        labels.len()
    );
    Ok(())
}

fn ablate(args: &AblateArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    for dir in [&args.calibrated, &args.uncalibrated] {
        let m = dir.join("manifest.json");
        require(&m, "run manifest")?;
        line.add_input(&m)?;
    }
    let table = experiments::threshold_ablation(
        &RunRecord::load(&args.calibrated)?,
        &RunRecord::load(&args.uncalibrated)?,
    )?;
    let csv = table.to_csv();
    files::write_atomic(&args.out, csv.as_bytes())?;
    files::write_json(&args.out.with_extension("json"), &table)?;
    print!("{csv}");
    Ok(())
}

fn disagreement(args: &DisagreementArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    let lang = LanguageCode::new(args.lang.as_str())?;
    let file = experiments::devtest_probs_file(&lang);
    let mut preds = Vec::new();
    let mut gold_split = None;
    for dir in [&args.run_a, &args.run_b] {
        let p = dir.join(&file);
        require(&p, "dev-test predictions")?;
        line.add_input(&p)?;
        let rows = files::read_predictions(&p)?;
        let gold = corpus::parse_tsv(&dir.join(format!("devtest_{lang}.tsv")), &lang, SplitName::DevTest)?;
        let ids: Vec<&str> = gold.records.iter().map(|r| r.id.as_str()).collect();
        if rows.iter().map(|r| r.id.as_str()).ne(ids.iter().copied()) {
            return Err(subjfuse_core::Error::validation(format!(
                "{} does not list the dev-test sentences in gold order",
                p.display()
            ))
            .into());
        }
        preds.push(rows.iter().map(|r| r.predicted).collect::<Vec<_>>());
        gold_split.get_or_insert(gold);
    }
    let gold_split = gold_split.expect("two runs loaded");
    let gold = gold_split.gold_labels()?;
    require(&args.sentiment_cache, "sentiment cache")?;
    line.add_input(&args.sentiment_cache)?;
    let cache = SentimentCache::load(&args.sentiment_cache, None)?;
    let vectors = cache.lookup_all(&gold_split.records)?;
    let sets = experiments::disagreement_sets(&preds[0], &preds[1], &gold)?;
    let a_only = experiments::sentiment_stats(&sets.a_only_correct, &vectors, &gold)?;
    let b_only = experiments::sentiment_stats(&sets.b_only_correct, &vectors, &gold)?;
    let doc = json!({
        "language": lang,
        "counts": {
            "a_only_correct": sets.a_only_correct.len(),
            "b_only_correct": sets.b_only_correct.len(),
            "both_correct": sets.both_correct.len(),
            "neither_correct": sets.neither_correct.len(),
        },
        "sets": sets,
        "a_only_sentiment": a_only,
        "b_only_sentiment": b_only,
    });
    files::write_json(&args.out, &doc)?;
    println!("{}", serde_json::to_string_pretty(&doc["counts"])?);
    Ok(())
}

fn distribution(args: &DistributionArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    let langs = langs(&args.data.langs)?;
    let corpora = corpus::load_corpora(&args.data.data_root, &langs, &ColumnConfig::default())?;
    corpus_inputs(&args.data.data_root, &langs, line)?;
    require(&args.sentiment_cache, "sentiment cache")?;
    line.add_input(&args.sentiment_cache)?;
    let cache = SentimentCache::load(&args.sentiment_cache, None)?;
    let mut rows = Vec::new();
    for c in corpora.values() {
        let split: &DatasetSplit = c.split(args.split).ok_or_else(|| subjfuse_core::Error::Missing {
            what: "corpus file",
            ids: vec![format!("{}/{}", c.language, args.split)],
        })?;
        rows.extend(experiments::distribution_summary(split, &cache)?);
    }
    let csv = experiments::distribution_csv(&rows);
    files::write_atomic(&args.out, csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn report(args: &ReportArgs, line: &mut ManifestLine) -> anyhow::Result<()> {
    let mut body = String::new();
    let mut header = None;
    let mut rows = 0;
    for dir in &args.runs {
        let p = dir.join("results.csv");
        require(&p, "run results")?;
        line.add_input(&p)?;
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let mut lines = text.lines();
        let h = lines.next().unwrap_or_default().to_string();
        if *header.get_or_insert_with(|| h.clone()) != h {
            return Err(subjfuse_core::Error::validation(format!("{} has a different header", p.display())).into());
        }
        for l in lines.filter(|l| !l.is_empty()) {
            rows += 1;
            body.push_str(l);
            body.push('\n');
        }
    }
    let table = format!("{}\n{body}", header.unwrap_or_default());
    files::write_atomic(&args.out, table.as_bytes())?;
    print!("{table}");
    line.details = json!({ "rows": rows });
    Ok(())
}

fn run(cli: &Cli, argv: &[String]) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let (name, out_dir) = match &cli.command {
        Command::Ingest(a) => ("ingest", out_dir(&a.out)),
        Command::SentimentCache(a) => ("sentiment-cache", out_dir(&a.out)),
        Command::Train(a) => ("train", a.out.clone()),
        Command::Calibrate(a) => ("calibrate", out_dir(&a.out)),
        Command::Predict(a) => ("predict", out_dir(&a.out)),
        Command::Evaluate(a) => ("evaluate", out_dir(&a.out)),
        Command::Ablate(a) => ("ablate", out_dir(&a.out)),
        Command::Analyze(AnalyzeCommand::Disagreement(a)) => ("analyze disagreement", out_dir(&a.out)),
        Command::Analyze(AnalyzeCommand::Distribution(a)) => ("analyze distribution", out_dir(&a.out)),
        Command::Report(a) => ("report", out_dir(&a.out)),
    };
    let mut line = ManifestLine::new(name, argv);
    match &cli.command {
        Command::Ingest(a) => ingest(a, &mut line),
        Command::SentimentCache(a) => sentiment_cache(a, &mut line),
        Command::Train(a) => train(a, &mut line),
        Command::Calibrate(a) => calibrate(a, &mut line),
        Command::Predict(a) => predict(a, &mut line),
        Command::Evaluate(a) => evaluate(a, &mut line),
        Command::Ablate(a) => ablate(a, &mut line),
        Command::Analyze(AnalyzeCommand::Disagreement(a)) => disagreement(a, &mut line),
        Command::Analyze(AnalyzeCommand::Distribution(a)) => distribution(a, &mut line),
        Command::Report(a) => report(a, &mut line),
    }?;
    files::append_manifest(&out_dir, &line)?;
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

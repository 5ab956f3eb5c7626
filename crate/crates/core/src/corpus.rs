//! Per-language TSV corpora: parsing, validation, merging and label counts.
//!
//! Every file starts with a header row. The id, text and label columns are
//! located by name (see [`ColumnConfig`]); any other columns are ignored.
//! Sentence text is kept verbatim apart from the line terminator.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files;

/// Lowercase language identifier such as `en` or `ar`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.is_empty() {
            return Err(Error::validation("language code must not be empty"));
        }
        if code.chars().any(|c| c.is_uppercase() || c.is_whitespace() || c == ':') {
            return Err(Error::validation(format!(
                "language code `{code}` must be lowercase without whitespace or ':'"
            )));
        }
        Ok(LanguageCode(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for LanguageCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LanguageCode::new(s)
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        LanguageCode::new(s)
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> String {
        code.0
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sentence class. `Subj` is the positive class throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GoldLabel {
    #[serde(rename = "OBJ")]
    Obj,
    #[serde(rename = "SUBJ")]
    Subj,
}

impl GoldLabel {
    pub const ALL: [GoldLabel; 2] = [GoldLabel::Obj, GoldLabel::Subj];

    pub fn as_str(self) -> &'static str {
        match self {
            GoldLabel::Obj => "OBJ",
            GoldLabel::Subj => "SUBJ",
        }
    }

    /// Output index of the class in logits and probability pairs.
    pub fn index(self) -> usize {
        match self {
            GoldLabel::Obj => 0,
            GoldLabel::Subj => 1,
        }
    }

    pub fn other(self) -> GoldLabel {
        match self {
            GoldLabel::Obj => GoldLabel::Subj,
            GoldLabel::Subj => GoldLabel::Obj,
        }
    }
}

impl FromStr for GoldLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("obj") {
            Ok(GoldLabel::Obj)
        } else if t.eq_ignore_ascii_case("subj") {
            Ok(GoldLabel::Subj)
        } else {
            Err(Error::validation(format!("unknown label `{s}`")))
        }
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub text: String,
    pub label: Option<GoldLabel>,
    pub language: LanguageCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Dev,
    DevTest,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 4] = [
        SplitName::Train,
        SplitName::Dev,
        SplitName::DevTest,
        SplitName::Test,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::DevTest => "dev_test",
            SplitName::Test => "test",
        }
    }

    /// Only the hidden test split may carry unlabeled rows.
    pub fn requires_labels(self) -> bool {
        self != SplitName::Test
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "dev_test" | "dev-test" | "devtest" => Ok(SplitName::DevTest),
            "test" => Ok(SplitName::Test),
            other => Err(Error::validation(format!("unknown split `{other}`"))),
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<SentenceRecord>,
}

impl DatasetSplit {
    pub fn new(name: SplitName, records: Vec<SentenceRecord>) -> Result<Self> {
        let split = DatasetSplit { name, records };
        split.validate()?;
        Ok(split)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Gold labels in record order; fails on the first unlabeled record.
    pub fn gold_labels(&self) -> Result<Vec<GoldLabel>> {
        self.records
            .iter()
            .map(|r| {
                r.label.ok_or_else(|| {
                    Error::validation(format!("record `{}` has no gold label", r.id))
                })
            })
            .collect()
    }

    /// Checks id uniqueness, non-blank text and label presence.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.records.len());
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate sentence id `{}` in {} split",
                    r.id, self.name
                )));
            }
            if r.text.trim().is_empty() {
                return Err(Error::validation(format!("record `{}` has empty text", r.id)));
            }
            if self.name.requires_labels() && r.label.is_none() {
                return Err(Error::validation(format!(
                    "record `{}` in {} split has no label",
                    r.id, self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub obj: usize,
    pub subj: usize,
}

impl LabelDistribution {
    pub fn total(&self) -> usize {
        self.obj + self.subj
    }

    pub fn count(&self, label: GoldLabel) -> usize {
        match label {
            GoldLabel::Obj => self.obj,
            GoldLabel::Subj => self.subj,
        }
    }
}

impl std::ops::Add for LabelDistribution {
    type Output = LabelDistribution;

    fn add(self, rhs: Self) -> Self {
        LabelDistribution {
            obj: self.obj + rhs.obj,
            subj: self.subj + rhs.subj,
        }
    }
}

/// JSON summary row: `{language, split, obj, subj}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub language: String,
    pub split: SplitName,
    pub obj: usize,
    pub subj: usize,
}

/// Header names of the id, text and label columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnConfig {
    pub id: String,
    pub text: String,
    pub label: String,
}

impl Default for ColumnConfig {
    fn default() -> Self {
        ColumnConfig {
            id: "sentence_id".into(),
            text: "sentence".into(),
            label: "label".into(),
        }
    }
}

/// Text rewrite applied to every sentence before validation, e.g. machine
/// translation into a pivot language. No implementation ships with the crate.
pub trait PreIngestHook {
    fn rewrite(&self, text: &str, language: &LanguageCode) -> Result<String>;
}

pub fn parse_tsv(path: &Path, language: &LanguageCode, split: SplitName) -> Result<DatasetSplit> {
    parse_tsv_with(path, language, split, &ColumnConfig::default(), None)
}

pub fn parse_tsv_with(
    path: &Path,
    language: &LanguageCode,
    split: SplitName,
    columns: &ColumnConfig,
    hook: Option<&dyn PreIngestHook>,
) -> Result<DatasetSplit> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_tsv_str(&content, path, language, split, columns, hook)
}

/// Parses TSV content already in memory. `source` is only used in error
/// messages.
pub fn parse_tsv_str(
    content: &str,
    source: &Path,
    language: &LanguageCode,
    split: SplitName,
    columns: &ColumnConfig,
    hook: Option<&dyn PreIngestHook>,
) -> Result<DatasetSplit> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut lines = content
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l));

    let (_, header) = lines
        .next()
        .filter(|(_, h)| !h.is_empty())
        .ok_or_else(|| parse_err(1, "missing header row".into()))?;
    let header: Vec<&str> = header.trim_start_matches('\u{feff}').split('\t').collect();
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let id_col = find(&columns.id)
        .ok_or_else(|| parse_err(1, format!("header lacks id column `{}`", columns.id)))?;
    let text_col = find(&columns.text)
        .ok_or_else(|| parse_err(1, format!("header lacks text column `{}`", columns.text)))?;
    let label_col = find(&columns.label);
    if label_col.is_none() && split.requires_labels() {
        return Err(Error::validation(format!(
            "{}: {split} split has no `{}` column",
            source.display(),
            columns.label
        )));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        // A row that stops right before a trailing label column has no label.
        let label_missing = fields.len() + 1 == header.len() && label_col == Some(header.len() - 1);
        if fields.len() != header.len() && !label_missing {
            return Err(parse_err(
                line_no,
                format!("expected {} columns, found {}", header.len(), fields.len()),
            ));
        }

        let label = match label_col {
            Some(c) if !label_missing && !fields[c].trim().is_empty() => Some(
                fields[c]
                    .parse::<GoldLabel>()
                    .map_err(|_| Error::validation(format!(
                        "{}:{line_no}: unknown label `{}`",
                        source.display(),
                        fields[c]
                    )))?,
            ),
            _ => None,
        };
        if label.is_none() && split.requires_labels() {
            return Err(Error::validation(format!(
                "{}:{line_no}: missing label in {split} split",
                source.display()
            )));
        }

        let id = fields[id_col].to_string();
        if id.is_empty() {
            return Err(parse_err(line_no, "empty sentence id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::validation(format!(
                "{}:{line_no}: duplicate sentence id `{id}`",
                source.display()
            )));
        }
        let mut text = fields[text_col].to_string();
        if let Some(hook) = hook {
            text = hook.rewrite(&text, language)?;
        }
        if text.trim().is_empty() {
            return Err(Error::validation(format!(
                "{}:{line_no}: empty sentence text",
                source.display()
            )));
        }

        records.push(SentenceRecord {
            id,
            text,
            label,
            language: language.clone(),
        });
    }

    Ok(DatasetSplit {
        name: split,
        records,
    })
}

/// Serializes a split as TSV with a header row. The label column is written
/// whenever any record carries a label.
pub fn serialize_tsv(split: &DatasetSplit, columns: &ColumnConfig) -> Result<String> {
    let with_labels = split.records.iter().any(|r| r.label.is_some());
    let mut out = String::new();
    out.push_str(&columns.id);
    out.push('\t');
    out.push_str(&columns.text);
    if with_labels {
        out.push('\t');
        out.push_str(&columns.label);
    }
    out.push('\n');
    for r in &split.records {
        for field in [&r.id, &r.text] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(Error::validation(format!(
                    "record `{}` contains a tab or line break and cannot be written as TSV",
                    r.id
                )));
            }
        }
        out.push_str(&r.id);
        out.push('\t');
        out.push_str(&r.text);
        if with_labels {
            out.push('\t');
            if let Some(label) = r.label {
                out.push_str(label.as_str());
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_tsv(split: &DatasetSplit, columns: &ColumnConfig, path: &Path) -> Result<()> {
    let content = serialize_tsv(split, columns)?;
    files::write_atomic(path, content.as_bytes())
}

pub fn label_distribution(split: &DatasetSplit) -> Result<LabelDistribution> {
    let mut dist = LabelDistribution::default();
    for r in &split.records {
        match r.label {
            Some(GoldLabel::Obj) => dist.obj += 1,
            Some(GoldLabel::Subj) => dist.subj += 1,
            None => {
                return Err(Error::validation(format!(
                    "record `{}` has no label; distribution undefined",
                    r.id
                )))
            }
        }
    }
    Ok(dist)
}

/// Concatenates splits of the same kind, prefixing ids with `<lang>:`.
pub fn merge_splits(splits: &[&DatasetSplit]) -> Result<DatasetSplit> {
    let Some(first) = splits.first() else {
        return Err(Error::validation("nothing to merge"));
    };
    if let Some(bad) = splits.iter().find(|s| s.name != first.name) {
        return Err(Error::validation(format!(
            "cannot merge a {} split into {} splits",
            bad.name, first.name
        )));
    }
    let records = splits
        .iter()
        .flat_map(|s| s.records.iter())
        .map(|r| SentenceRecord {
            id: format!("{}:{}", r.language, r.id),
            ..r.clone()
        })
        .collect();
    DatasetSplit::new(first.name, records)
}

/// All splits of one language.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageCorpus {
    pub language: LanguageCode,
    pub train: DatasetSplit,
    pub dev: DatasetSplit,
    pub dev_test: DatasetSplit,
    pub test: Option<DatasetSplit>,
}

impl LanguageCorpus {
    pub fn split(&self, name: SplitName) -> Option<&DatasetSplit> {
        match name {
            SplitName::Train => Some(&self.train),
            SplitName::Dev => Some(&self.dev),
            SplitName::DevTest => Some(&self.dev_test),
            SplitName::Test => self.test.as_ref(),
        }
    }
}

pub type Corpora = BTreeMap<LanguageCode, LanguageCorpus>;

/// Locates the file of one split under a data root.
///
/// Tries `<root>/<lang>/<split>.tsv` first, then the `<split>_<lang>.tsv`
/// naming used by the task's data repository.
pub fn split_path(root: &Path, language: &LanguageCode, split: SplitName) -> Option<PathBuf> {
    let dir = root.join(language.as_str());
    [
        dir.join(format!("{split}.tsv")),
        dir.join(format!("{split}_{language}.tsv")),
    ]
    .into_iter()
    .find(|p| p.is_file())
}

pub fn load_language(root: &Path, language: &LanguageCode, columns: &ColumnConfig) -> Result<LanguageCorpus> {
    let load = |split: SplitName| -> Result<Option<DatasetSplit>> {
        split_path(root, language, split)
            .map(|p| parse_tsv_with(&p, language, split, columns, None))
            .transpose()
    };
    let required = |split: SplitName| -> Result<DatasetSplit> {
        load(split)?.ok_or_else(|| Error::Missing {
            what: "corpus file",
            ids: vec![format!("{}/{}/{split}.tsv", root.display(), language)],
        })
    };
    Ok(LanguageCorpus {
        language: language.clone(),
        train: required(SplitName::Train)?,
        dev: required(SplitName::Dev)?,
        dev_test: required(SplitName::DevTest)?,
        test: load(SplitName::Test)?,
    })
}

pub fn load_corpora(root: &Path, languages: &[LanguageCode], columns: &ColumnConfig) -> Result<Corpora> {
    languages
        .iter()
        .map(|l| Ok((l.clone(), load_language(root, l, columns)?)))
        .collect()
}

/// Training and evaluation data for a zero-shot configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotSelection {
    /// Merged training splits of the training languages.
    pub train: DatasetSplit,
    /// Merged dev splits of the training languages, for checkpoint selection.
    pub dev: DatasetSplit,
    /// Dev-test split of every evaluation language.
    pub eval: BTreeMap<LanguageCode, DatasetSplit>,
}

pub fn select_zero_shot(
    corpora: &Corpora,
    train_langs: &BTreeSet<LanguageCode>,
    eval_langs: &BTreeSet<LanguageCode>,
) -> Result<ZeroShotSelection> {
    if train_langs.is_empty() || eval_langs.is_empty() {
        return Err(Error::validation("zero-shot needs training and evaluation languages"));
    }
    let overlap: Vec<String> = train_langs
        .intersection(eval_langs)
        .map(|l| l.to_string())
        .collect();
    if !overlap.is_empty() {
        return Err(Error::validation(format!(
            "languages both trained on and evaluated zero-shot: {}",
            overlap.join(", ")
        )));
    }
    let get = |l: &LanguageCode| {
        corpora
            .get(l)
            .ok_or_else(|| Error::validation(format!("unknown language `{l}`")))
    };
    let train_corpora = train_langs.iter().map(get).collect::<Result<Vec<_>>>()?;
    let train = merge_splits(&train_corpora.iter().map(|c| &c.train).collect::<Vec<_>>())?;
    let dev = merge_splits(&train_corpora.iter().map(|c| &c.dev).collect::<Vec<_>>())?;
    let eval = eval_langs
        .iter()
        .map(|l| Ok((l.clone(), get(l)?.dev_test.clone())))
        .collect::<Result<_>>()?;
    Ok(ZeroShotSelection { train, dev, eval })
}

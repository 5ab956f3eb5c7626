//! Three-class sentiment vectors, the providers that produce them and the
//! JSON Lines cache that makes experiments independent of the provider.
//!
//! Component order is always (positive, neutral, negative); the fused
//! feature layout depends on it.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{LanguageCode, SentenceRecord};
use crate::error::{Error, Result};
use crate::files;

/// Tolerance of the simplex invariant for stored vectors.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;
/// Provider outputs this close to the simplex are renormalized instead of rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-3;

/// (positive, neutral, negative) probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentVector {
    positive: f64,
    neutral: f64,
    negative: f64,
}

impl SentimentVector {
    pub fn new(positive: f64, neutral: f64, negative: f64) -> Result<Self> {
        let v = [positive, neutral, negative];
        if v.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1.0) {
            return Err(Error::validation(format!(
                "sentiment components must lie in [0,1], got {v:?}"
            )));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::validation(format!(
                "sentiment components must sum to 1, got {sum}"
            )));
        }
        Ok(SentimentVector {
            positive,
            neutral,
            negative,
        })
    }

    pub fn uniform() -> Self {
        SentimentVector {
            positive: 1.0 / 3.0,
            neutral: 1.0 / 3.0,
            negative: 1.0 / 3.0,
        }
    }

    /// Accepts raw provider output, renormalizing small float noise.
    pub fn from_provider(raw: [f64; 3]) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation(format!("non-finite sentiment output {raw:?}")));
        }
        let sum: f64 = raw.iter().sum();
        let out_of_range = raw
            .iter()
            .any(|x| *x < -RENORMALIZE_TOLERANCE || *x > 1.0 + RENORMALIZE_TOLERANCE);
        if out_of_range || (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::validation(format!(
                "sentiment output {raw:?} is off the probability simplex"
            )));
        }
        let clamped = raw.map(|x| x.max(0.0));
        let total: f64 = clamped.iter().sum();
        let [p, n, g] = clamped.map(|x| x / total);
        SentimentVector::new(p, n, g)
    }

    pub fn positive(&self) -> f64 {
        self.positive
    }

    pub fn neutral(&self) -> f64 {
        self.neutral
    }

    pub fn negative(&self) -> f64 {
        self.negative
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.positive, self.neutral, self.negative]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    ExternalModel,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderDescriptor {
    pub provider_id: String,
    pub kind: ProviderKind,
}

impl ProviderDescriptor {
    pub fn new(provider_id: impl Into<String>, kind: ProviderKind) -> Result<Self> {
        let provider_id = provider_id.into();
        if provider_id.trim().is_empty() {
            return Err(Error::validation("provider id must not be empty"));
        }
        Ok(ProviderDescriptor { provider_id, kind })
    }
}

/// Source of raw sentiment scores.
pub trait SentimentProvider: Sync {
    fn descriptor(&self) -> &ProviderDescriptor;

    /// One `[positive, neutral, negative]` triple per input text, in order.
    fn score_raw(&self, texts: &[&str]) -> std::result::Result<Vec<[f64; 3]>, String>;
}

pub const STUB_PROVIDER_ID: &str = "stub-fnv1a";

/// Deterministic hash-based stand-in for a real sentiment model.
#[derive(Debug, Clone)]
pub struct StubProvider {
    descriptor: ProviderDescriptor,
}

impl Default for StubProvider {
    fn default() -> Self {
        StubProvider {
            descriptor: ProviderDescriptor {
                provider_id: STUB_PROVIDER_ID.into(),
                kind: ProviderKind::Stub,
            },
        }
    }
}

impl SentimentProvider for StubProvider {
    fn descriptor(&self) -> &ProviderDescriptor {
        &self.descriptor
    }

    fn score_raw(&self, texts: &[&str]) -> std::result::Result<Vec<[f64; 3]>, String> {
        Ok(texts.iter().map(|t| stub_score(t).to_array()).collect())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

/// Hashes every alphanumeric word of `text` into one of three buckets and
/// returns the add-one smoothed bucket frequencies. Text without words maps
/// to the uniform vector.
pub fn stub_score(text: &str) -> SentimentVector {
    let mut counts = [0u64; 3];
    for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        counts[(fnv1a64(word.as_bytes()) % 3) as usize] += 1;
    }
    let total = (counts.iter().sum::<u64>() + 3) as f64;
    let [p, n, g] = counts.map(|c| (c + 1) as f64 / total);
    SentimentVector {
        positive: p,
        neutral: n,
        negative: g,
    }
}

/// Runs an external scorer process.
///
/// Sentences are written to the child's stdin one per line (embedded line
/// breaks become spaces); the child must print one `pos⇥neu⇥neg` line per
/// sentence. This is how a real multilingual sentiment model is plugged in.
#[derive(Debug, Clone)]
pub struct CommandProvider {
    descriptor: ProviderDescriptor,
    program: PathBuf,
    args: Vec<String>,
}

impl CommandProvider {
    pub fn new(provider_id: &str, program: impl Into<PathBuf>, args: Vec<String>) -> Result<Self> {
        Ok(CommandProvider {
            descriptor: ProviderDescriptor::new(provider_id, ProviderKind::ExternalModel)?,
            program: program.into(),
            args,
        })
    }
}

impl SentimentProvider for CommandProvider {
    fn descriptor(&self) -> &ProviderDescriptor {
        &self.descriptor
    }

    fn score_raw(&self, texts: &[&str]) -> std::result::Result<Vec<[f64; 3]>, String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("spawning {}: {e}", self.program.display()))?;
        {
            let mut stdin = child.stdin.take().ok_or("no stdin")?;
            let mut input = String::new();
            for t in texts {
                input.push_str(&t.replace(['\n', '\r'], " "));
                input.push('\n');
            }
            stdin
                .write_all(input.as_bytes())
                .map_err(|e| format!("writing to scorer: {e}"))?;
        }
        let output = child
            .wait_with_output()
            .map_err(|e| format!("waiting for scorer: {e}"))?;
        if !output.status.success() {
            return Err(format!("scorer exited with {}", output.status));
        }
        let stdout = String::from_utf8(output.stdout).map_err(|e| e.to_string())?;
        stdout
            .lines()
            .map(|line| {
                let v: Vec<f64> = line
                    .split('\t')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| format!("bad scorer line `{line}`: {e}"))?;
                <[f64; 3]>::try_from(v).map_err(|_| format!("scorer line `{line}` needs 3 values"))
            })
            .collect()
    }
}

const SCORE_CHUNK: usize = 64;

/// Scores every sentence, one vector per input in input order.
///
/// Chunks are scored in parallel. A failing chunk yields a retryable
/// [`Error::Provider`] carrying its index range.
pub fn score_batch(
    sentences: &[SentenceRecord],
    provider: &dyn SentimentProvider,
) -> Result<Vec<SentimentVector>> {
    let provider_id = &provider.descriptor().provider_id;
    let chunks: Vec<Vec<SentimentVector>> = sentences
        .par_chunks(SCORE_CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let start = ci * SCORE_CHUNK;
            let range = start..start + chunk.len();
            let failure = |message: String, range: Range<usize>| Error::Provider {
                provider: provider_id.clone(),
                range,
                message,
            };
            let texts: Vec<&str> = chunk.iter().map(|r| r.text.as_str()).collect();
            let raw = provider.score_raw(&texts).map_err(|m| failure(m, range.clone()))?;
            if raw.len() != chunk.len() {
                return Err(failure(
                    format!("returned {} vectors for {} sentences", raw.len(), chunk.len()),
                    range,
                ));
            }
            raw.into_iter()
                .zip(chunk)
                .map(|(v, record)| {
                    SentimentVector::from_provider(v).map_err(|e| {
                        Error::validation(format!("sentence `{}`: {e}", record.id))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentCacheEntry {
    pub sentence_id: String,
    pub language: LanguageCode,
    pub vector: SentimentVector,
    pub provider_id: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheLine {
    id: String,
    lang: LanguageCode,
    provider: String,
    pos: f64,
    neu: f64,
    neg: f64,
}

/// Rounds to 9 significant digits.
fn round_sig9(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn checksum_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}

/// Writes the cache as JSON Lines plus a `.sha256` sidecar. Values are
/// rounded to 9 significant digits.
pub fn write_cache(entries: &[SentimentCacheEntry], path: &Path) -> Result<()> {
    let mut seen = HashSet::with_capacity(entries.len());
    let mut out = String::new();
    for e in entries {
        if !seen.insert((&e.sentence_id, &e.language, &e.provider_id)) {
            return Err(Error::validation(format!(
                "duplicate cache key ({}, {}, {})",
                e.sentence_id, e.language, e.provider_id
            )));
        }
        let [pos, neu, neg] = e.vector.to_array().map(round_sig9);
        let line = CacheLine {
            id: e.sentence_id.clone(),
            lang: e.language.clone(),
            provider: e.provider_id.clone(),
            pos,
            neu,
            neg,
        };
        out.push_str(&serde_json::to_string(&line).map_err(|e| Error::json("cache entry", e))?);
        out.push('\n');
    }
    files::write_atomic(path, out.as_bytes())?;
    files::write_atomic(&checksum_path(path), format!("{}\n", files::sha256_hex(out.as_bytes())).as_bytes())
}

/// Reads a cache file, verifying the `.sha256` sidecar when present.
pub fn read_cache(path: &Path) -> Result<Vec<SentimentCacheEntry>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let sidecar = checksum_path(path);
    if sidecar.is_file() {
        let expected = std::fs::read_to_string(&sidecar)
            .map_err(|e| Error::io(format!("reading {}", sidecar.display()), e))?;
        if expected.trim() != files::sha256_hex(&bytes) {
            return Err(Error::validation(format!(
                "{} does not match its checksum",
                path.display()
            )));
        }
    }
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(bytes.as_slice()).lines().enumerate() {
        let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: CacheLine = serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        if !seen.insert((raw.id.clone(), raw.lang.clone(), raw.provider.clone())) {
            return Err(Error::validation(format!(
                "{}:{}: duplicate cache key ({}, {}, {})",
                path.display(),
                i + 1,
                raw.id,
                raw.lang,
                raw.provider
            )));
        }
        let vector = SentimentVector::new(raw.pos, raw.neu, raw.neg)
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        entries.push(SentimentCacheEntry {
            sentence_id: raw.id,
            language: raw.lang,
            vector,
            provider_id: raw.provider,
        });
    }
    Ok(entries)
}

/// Cache entries of one provider indexed by (language, sentence id).
#[derive(Debug, Clone, Default)]
pub struct SentimentCache {
    provider_id: Option<String>,
    vectors: HashMap<(LanguageCode, String), SentimentVector>,
}

impl SentimentCache {
    /// Indexes `entries`, keeping only `provider_id` when given. Without a
    /// provider filter the entries must come from a single provider.
    pub fn from_entries(entries: Vec<SentimentCacheEntry>, provider_id: Option<&str>) -> Result<Self> {
        let mut cache = SentimentCache {
            provider_id: provider_id.map(str::to_string),
            vectors: HashMap::with_capacity(entries.len()),
        };
        for e in entries {
            match &cache.provider_id {
                Some(p) if *p != e.provider_id => {
                    if provider_id.is_none() {
                        return Err(Error::validation(format!(
                            "cache mixes providers `{p}` and `{}`; choose one",
                            e.provider_id
                        )));
                    }
                    continue;
                }
                None => cache.provider_id = Some(e.provider_id.clone()),
                _ => {}
            }
            cache.vectors.insert((e.language, e.sentence_id), e.vector);
        }
        Ok(cache)
    }

    pub fn load(path: &Path, provider_id: Option<&str>) -> Result<Self> {
        Self::from_entries(read_cache(path)?, provider_id)
    }

    pub fn provider_id(&self) -> Option<&str> {
        self.provider_id.as_deref()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, language: LanguageCode, sentence_id: String, vector: SentimentVector) {
        self.vectors.insert((language, sentence_id), vector);
    }

    /// Looks a record up by its id, falling back to the id without the
    /// `<lang>:` prefix that merged splits carry.
    pub fn get(&self, record: &SentenceRecord) -> Option<SentimentVector> {
        let key = (record.language.clone(), record.id.clone());
        self.vectors.get(&key).copied().or_else(|| {
            let prefix = format!("{}:", record.language);
            record
                .id
                .strip_prefix(&prefix)
                .and_then(|id| self.vectors.get(&(record.language.clone(), id.to_string())))
                .copied()
        })
    }

    /// Vectors for every record, or [`Error::Missing`] listing the ids
    /// without an entry.
    pub fn lookup_all(&self, records: &[SentenceRecord]) -> Result<Vec<SentimentVector>> {
        let mut missing = Vec::new();
        let found: Vec<_> = records
            .iter()
            .filter_map(|r| {
                let v = self.get(r);
                if v.is_none() {
                    missing.push(r.id.clone());
                }
                v
            })
            .collect();
        if missing.is_empty() {
            Ok(found)
        } else {
            Err(Error::Missing {
                what: "sentiment cache entries",
                ids: missing,
            })
        }
    }
}

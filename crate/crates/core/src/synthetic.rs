//! Seeded synthetic corpora for desk-scale runs.
//!
//! Sentences are drawn from a small English-like vocabulary. A fraction of
//! SUBJ sentences carries an evaluative cue word and a fraction of OBJ
//! sentences a reporting cue word, so text alone is weakly informative.
//! The sentiment vectors written alongside plant a second, stronger signal:
//! SUBJ sentences tend to be negative-heavy, OBJ sentences neutral-heavy.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, ColumnConfig, DatasetSplit, GoldLabel, LanguageCode, LanguageCorpus, SentenceRecord, SplitName};
use crate::error::Result;
use crate::sentiment::{self, SentimentCache, SentimentCacheEntry, SentimentVector};

pub const PLANTED_PROVIDER_ID: &str = "synthetic-planted";

const FILLER: &[&str] = &[
    "the", "a", "city", "council", "report", "week", "new", "plan", "water", "school", "road", "market",
    "year", "team", "players", "season", "bank", "rate", "price", "energy", "project", "village", "river",
    "court", "case", "law", "people", "group", "meeting", "office", "company", "workers", "museum", "film",
    "music", "festival", "train", "station", "bridge", "hospital", "doctors", "students", "teachers",
    "election", "party", "vote", "region", "border", "farm", "harvest", "weather", "storm", "coast",
    "island", "port", "ship", "airport", "flight", "network", "service", "budget", "tax", "sales", "store",
    "book", "author", "library", "garden", "park", "street", "house", "family", "children", "morning",
    "evening", "night", "summer", "winter", "in", "on", "of", "with", "after", "before", "near", "and",
];

const SUBJ_CUES: &[&str] = &[
    "shameful", "absurd", "disgraceful", "outrageous", "pathetic", "frankly", "obviously", "ridiculous",
    "brilliant", "terrible", "should", "must",
];

const OBJ_CUES: &[&str] = &[
    "reported", "announced", "percent", "according", "statement", "million", "said", "official",
    "published", "recorded", "measured", "confirmed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub language: LanguageCode,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_dev_test: usize,
    pub subj_fraction: f64,
    /// Probability that a sentence carries a cue word of its own class.
    pub text_cue_rate: f64,
    /// Probability that a SUBJ sentence is negative-heavy.
    pub sentiment_signal: f64,
    /// Probability that an OBJ sentence is negative-heavy anyway.
    pub sentiment_noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// 500 sentences (300/100/100) with an 80/20 OBJ/SUBJ split.
    pub fn desk(language: LanguageCode, seed: u64) -> Self {
        SyntheticConfig {
            language,
            n_train: 300,
            n_dev: 100,
            n_dev_test: 100,
            subj_fraction: 0.2,
            text_cue_rate: 0.3,
            sentiment_signal: 0.7,
            sentiment_noise: 0.1,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: LanguageCorpus,
    pub sentiment: Vec<SentimentCacheEntry>,
}

impl SyntheticCorpus {
    pub fn cache(&self) -> Result<SentimentCache> {
        SentimentCache::from_entries(self.sentiment.clone(), None)
    }

    /// Writes `<root>/<lang>/{train,dev,dev_test}.tsv`.
    pub fn write_corpus(&self, root: &Path) -> Result<()> {
        let dir = root.join(self.corpus.language.as_str());
        for split in [&self.corpus.train, &self.corpus.dev, &self.corpus.dev_test] {
            corpus::write_tsv(split, &ColumnConfig::default(), &dir.join(format!("{}.tsv", split.name)))?;
        }
        Ok(())
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        sentiment::write_cache(&self.sentiment, path)
    }
}

fn sentence(rng: &mut ChaCha8Rng, label: GoldLabel, cfg: &SyntheticConfig) -> String {
    let len = rng.random_range(6..=12);
    let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(rng).expect("non-empty")).collect();
    let cues = match label {
        GoldLabel::Subj => SUBJ_CUES,
        GoldLabel::Obj => OBJ_CUES,
    };
    if rng.random_bool(cfg.text_cue_rate) {
        let at = rng.random_range(0..words.len());
        words[at] = cues.choose(rng).expect("non-empty");
    }
    let mut s = words.join(" ");
    s.push('.');
    s
}

fn planted_sentiment(rng: &mut ChaCha8Rng, label: GoldLabel, cfg: &SyntheticConfig) -> SentimentVector {
    let negative_heavy = match label {
        GoldLabel::Subj => rng.random_bool(cfg.sentiment_signal),
        GoldLabel::Obj => rng.random_bool(cfg.sentiment_noise),
    };
    let (neg, neu) = if negative_heavy {
        let neg = rng.random_range(0.55..0.9);
        (neg, rng.random_range(0.0..1.0 - neg))
    } else {
        let neu: f64 = rng.random_range(0.45..0.85);
        (rng.random_range(0.0..(1.0 - neu).min(0.3)), neu)
    };
    SentimentVector::from_provider([1.0 - neg - neu, neu, neg]).expect("planted vector is on the simplex")
}

fn split(
    rng: &mut ChaCha8Rng,
    name: SplitName,
    n: usize,
    cfg: &SyntheticConfig,
    sentiment: &mut Vec<SentimentCacheEntry>,
) -> Result<DatasetSplit> {
    let n_subj = (n as f64 * cfg.subj_fraction).round() as usize;
    let mut labels: Vec<GoldLabel> = (0..n)
        .map(|i| if i < n_subj { GoldLabel::Subj } else { GoldLabel::Obj })
        .collect();
    labels.shuffle(rng);
    let records = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let id = format!("{name}-{i:04}");
            sentiment.push(SentimentCacheEntry {
                sentence_id: id.clone(),
                language: cfg.language.clone(),
                vector: planted_sentiment(rng, label, cfg),
                provider_id: PLANTED_PROVIDER_ID.to_string(),
            });
            SentenceRecord {
                id,
                text: sentence(rng, label, cfg),
                label: Some(label),
                language: cfg.language.clone(),
            }
        })
        .collect();
    DatasetSplit::new(name, records)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sentiment = Vec::with_capacity(cfg.n_train + cfg.n_dev + cfg.n_dev_test);
    let train = split(&mut rng, SplitName::Train, cfg.n_train, cfg, &mut sentiment)?;
    let dev = split(&mut rng, SplitName::Dev, cfg.n_dev, cfg, &mut sentiment)?;
    let dev_test = split(&mut rng, SplitName::DevTest, cfg.n_dev_test, cfg, &mut sentiment)?;
    Ok(SyntheticCorpus {
        corpus: LanguageCorpus {
            language: cfg.language.clone(),
            train,
            dev,
            dev_test,
            test: None,
        },
        sentiment,
    })
}

/// A labeled split with exactly `obj` OBJ and `subj` SUBJ records, in
/// a seeded order.
pub fn counted_split(language: &LanguageCode, name: SplitName, obj: usize, subj: usize, seed: u64) -> Result<DatasetSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SyntheticConfig::desk(language.clone(), seed);
    let mut labels = [vec![GoldLabel::Obj; obj], vec![GoldLabel::Subj; subj]].concat();
    labels.shuffle(&mut rng);
    let records = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| SentenceRecord {
            id: format!("{name}-{i:05}"),
            text: sentence(&mut rng, label, &cfg),
            label: Some(label),
            language: language.clone(),
        })
        .collect();
    DatasetSplit::new(name, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_corpus_shape() {
        let s = generate(&SyntheticConfig::desk(LanguageCode::new("xx").unwrap(), 1)).unwrap();
        assert_eq!(s.corpus.train.len(), 300);
        let d = corpus::label_distribution(&s.corpus.train).unwrap();
        assert_eq!((d.obj, d.subj), (240, 60));
        assert_eq!(s.sentiment.len(), 500);
        let cache = s.cache().unwrap();
        assert_eq!(cache.lookup_all(&s.corpus.dev_test.records).unwrap().len(), 100);
    }

    #[test]
    fn generation_is_seeded() {
        let xx = LanguageCode::new("xx").unwrap();
        let a = generate(&SyntheticConfig::desk(xx.clone(), 3)).unwrap();
        let b = generate(&SyntheticConfig::desk(xx.clone(), 3)).unwrap();
        let c = generate(&SyntheticConfig::desk(xx, 4)).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn counted_split_counts() {
        let en = LanguageCode::new("en").unwrap();
        let s = counted_split(&en, SplitName::Train, 532, 298, 0).unwrap();
        let d = corpus::label_distribution(&s).unwrap();
        assert_eq!((d.obj, d.subj), (532, 298));
    }
}

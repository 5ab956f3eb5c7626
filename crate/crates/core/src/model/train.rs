use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{label_distribution, DatasetSplit, GoldLabel, SentenceRecord};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport};
use crate::model::{
    class_weights, fuse, lr_at_step, softmax, AdamW, ClassifierHead, Encoder, LossFn, LossKind,
    ProbabilityPair, Variant,
};
use crate::sentiment::SentimentCache;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub warmup_fraction: f64,
    pub max_seq_len: usize,
    pub loss: LossKind,
    pub focal_gamma: f64,
    pub focal_alpha: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            batch_size: 16,
            learning_rate: 1e-5,
            epochs: 6,
            warmup_fraction: 0.1,
            max_seq_len: 256,
            loss: LossKind::WeightedCe,
            focal_gamma: 2.0,
            focal_alpha: 1.0,
            weight_decay: 0.01,
            seed: 42,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.max_seq_len == 0 {
            return Err(Error::validation("batch_size, epochs and max_seq_len must be ≥ 1"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::validation("warmup_fraction must lie in [0, 1)"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation("learning_rate must be positive"));
        }
        if self.focal_gamma < 0.0 || self.focal_alpha <= 0.0 {
            return Err(Error::validation("focal loss needs gamma ≥ 0 and alpha > 0"));
        }
        Ok(())
    }
}

/// Head parameters of the selected epoch with its dev evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub encoder_id: String,
    pub variant: Variant,
    pub config: TrainingConfig,
    /// 1-based epoch index.
    pub epoch: usize,
    pub head: ClassifierHead,
    pub dev_report: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub dev_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub history: Vec<EpochSummary>,
}

/// Head input for every record: the embedding, followed by the sentiment
/// vector in the fused variant.
pub fn build_features(
    records: &[SentenceRecord],
    variant: Variant,
    sentiment: Option<&SentimentCache>,
    encoder: &dyn Encoder,
) -> Result<Vec<Vec<f64>>> {
    let vectors = match variant {
        Variant::Baseline => None,
        Variant::SentimentFused => {
            let cache = sentiment.ok_or(Error::Missing {
                what: "sentiment cache for the fused variant",
                ids: vec![],
            })?;
            Some(cache.lookup_all(records)?)
        }
    };
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let emb = encoder.encode(&r.text)?;
            match &vectors {
                None => Ok(emb.values),
                Some(v) => Ok(fuse(&emb, &v[i])?.values),
            }
        })
        .collect()
}

fn probs_for(head: &ClassifierHead, features: &[Vec<f64>]) -> Vec<ProbabilityPair> {
    features.iter().map(|x| softmax(head.forward_unchecked(x))).collect()
}

/// Class probabilities of `records` under a trained checkpoint.
pub fn predict_probs(
    checkpoint: &Checkpoint,
    records: &[SentenceRecord],
    sentiment: Option<&SentimentCache>,
    encoder: &dyn Encoder,
) -> Result<Vec<ProbabilityPair>> {
    if encoder.id() != checkpoint.encoder_id {
        return Err(Error::validation(format!(
            "checkpoint was trained with encoder `{}`, got `{}`",
            checkpoint.encoder_id,
            encoder.id()
        )));
    }
    let features = build_features(records, checkpoint.variant, sentiment, encoder)?;
    if let Some(x) = features.first() {
        checkpoint.head.forward(x)?;
    }
    Ok(probs_for(&checkpoint.head, &features))
}

/// Trains the head with mini-batch AdamW under a linear warmup/decay
/// schedule, evaluating on dev after every epoch.
///
/// The returned checkpoint has the best dev macro F1 at τ = 0.5; ties keep
/// the earlier epoch. All randomness (head init, batch order) derives from
/// `config.seed`.
pub fn train(
    config: &TrainingConfig,
    variant: Variant,
    train_split: &DatasetSplit,
    dev_split: &DatasetSplit,
    sentiment: Option<&SentimentCache>,
    encoder: &dyn Encoder,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_split.is_empty() || dev_split.is_empty() {
        return Err(Error::validation("training and dev splits must be non-empty"));
    }
    let train_gold = train_split.gold_labels()?;
    let dev_gold = dev_split.gold_labels()?;
    let loss_fn = match config.loss {
        LossKind::WeightedCe => LossFn::WeightedCe(class_weights(&label_distribution(train_split)?)?),
        LossKind::Focal => LossFn::Focal {
            alpha: config.focal_alpha,
            gamma: config.focal_gamma,
        },
    };

    let train_x = build_features(&train_split.records, variant, sentiment, encoder)?;
    let dev_x = build_features(&dev_split.records, variant, sentiment, encoder)?;
    let input_dim = variant.input_dim(encoder.dim());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut head = ClassifierHead::init(input_dim, &mut rng);
    let mut optimizer = AdamW::new(input_dim, config.weight_decay);

    let steps_per_epoch = train_x.len().div_ceil(config.batch_size);
    let total_steps = steps_per_epoch * config.epochs;
    let mut step = 0;
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut grad_w = vec![[0.0f64; 2]; input_dim];
    let mut best: Option<Checkpoint> = None;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let lr = lr_at_step(step, total_steps, config)?;
            grad_w.iter_mut().for_each(|g| *g = [0.0; 2]);
            let mut grad_b = [0.0f64; 2];
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = &train_x[i];
                let (loss, g) = loss_fn.loss_and_grad(head.forward_unchecked(x), train_gold[i]);
                loss_sum += loss;
                for (gw, xi) in grad_w.iter_mut().zip(x) {
                    gw[0] += scale * g[0] * xi;
                    gw[1] += scale * g[1] * xi;
                }
                grad_b[0] += scale * g[0];
                grad_b[1] += scale * g[1];
            }
            optimizer.update(&mut head, &grad_w, grad_b, lr);
            step += 1;
        }
        if !head.is_finite() {
            return Err(Error::validation(format!("training diverged in epoch {epoch}")));
        }

        let dev_probs = probs_for(&head, &dev_x);
        let preds: Vec<GoldLabel> = dev_probs.iter().map(ProbabilityPair::argmax).collect();
        let dev_report = metrics::evaluate(&preds, &dev_gold)?;
        history.push(EpochSummary {
            epoch,
            mean_train_loss: loss_sum / train_x.len() as f64,
            dev_macro_f1: dev_report.macro_f1,
        });
        if best.as_ref().is_none_or(|b| dev_report.macro_f1 > b.dev_report.macro_f1) {
            best = Some(Checkpoint {
                encoder_id: encoder.id().to_string(),
                variant,
                config: config.clone(),
                epoch,
                head: head.clone(),
                dev_report,
            });
        }
    }

    Ok(TrainOutcome {
        best: best.expect("at least one epoch"),
        history,
    })
}

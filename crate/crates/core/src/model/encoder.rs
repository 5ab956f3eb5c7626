use crate::error::{Error, Result};
use crate::model::Embedding;
use crate::sentiment::fnv1a64;

pub const TOY_ENCODER_ID: &str = "toy-hash-3gram-d64";
const TOY_PREFIX: &str = "toy-hash-3gram-d";

/// Maps a sentence to a fixed-width embedding.
///
/// Transformer encoders plug in behind this trait. Whether their weights are
/// updated during training is reported by [`Encoder::trainable`]; the
/// training loop only updates the head.
pub trait Encoder: Send + Sync {
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    fn trainable(&self) -> bool {
        false
    }

    fn encode(&self, text: &str) -> Result<Embedding>;
}

/// Feature-hashed character trigram counts, L2-normalized.
///
/// Text is lowercased and truncated to the first `max_seq_len`
/// whitespace-separated tokens before trigrams are taken over the
/// space-padded string.
#[derive(Debug, Clone)]
pub struct ToyHashEncoder {
    id: String,
    dim: usize,
    max_seq_len: usize,
}

impl ToyHashEncoder {
    pub fn new(dim: usize, max_seq_len: usize) -> Result<Self> {
        if dim == 0 || max_seq_len == 0 {
            return Err(Error::validation("toy encoder needs dim ≥ 1 and max_seq_len ≥ 1"));
        }
        Ok(ToyHashEncoder {
            id: format!("{TOY_PREFIX}{dim}"),
            dim,
            max_seq_len,
        })
    }

    pub fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }
}

impl Encoder for ToyHashEncoder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Embedding> {
        if text.trim().is_empty() {
            return Err(Error::validation("cannot encode empty text"));
        }
        let tokens: Vec<&str> = text.split_whitespace().take(self.max_seq_len).collect();
        let padded: Vec<char> = format!(" {} ", tokens.join(" ").to_lowercase()).chars().collect();

        let mut values = vec![0.0f64; self.dim];
        let mut buf = [0u8; 12];
        for gram in padded.windows(3) {
            let mut len = 0;
            for c in gram {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            values[(fnv1a64(&buf[..len]) % self.dim as u64) as usize] += 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Embedding {
            values,
            source: self.id.clone(),
        })
    }
}

/// Builds the encoder named `id`. Only the toy hashing encoders
/// (`toy-hash-3gram-d<N>`) ship with the crate.
pub fn resolve_encoder(id: &str, max_seq_len: usize) -> Result<Box<dyn Encoder>> {
    match id.strip_prefix(TOY_PREFIX).map(str::parse::<usize>) {
        Some(Ok(dim)) => Ok(Box::new(ToyHashEncoder::new(dim, max_seq_len)?)),
        _ => Err(Error::EncoderUnavailable(id.to_string())),
    }
}

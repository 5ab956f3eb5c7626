//! Sentence-level subjectivity detection with sentiment feature fusion.
//!
//! The pipeline ingests per-language TSV corpora, attaches a three-class
//! sentiment probability vector to every sentence, trains a classification
//! head over (optionally sentiment-fused) sentence embeddings, calibrates a
//! decision threshold on the dev split and scores predictions with
//! macro-averaged F1.

pub mod calibration;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod files;
pub mod metrics;
pub mod model;
pub mod sentiment;
pub mod synthetic;

pub use error::{Error, Result};

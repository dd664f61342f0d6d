//! First-turn embeddings.
//!
//! The local embedder is a signed hashed bag of character n-grams:
//!
//! 1. lowercase the text and collapse whitespace runs to one space;
//! 2. for every n in `ngram_range` (inclusive) and every window of n
//!    Unicode scalar values, hash the UTF-8 bytes of the window with
//!    64-bit FNV-1a (offset basis `0xcbf29ce484222325`, prime
//!    `0x100000001b3`): bucket = hash mod D;
//! 3. sign = +1 when the top bit of FNV-1a over `[0xFF] ++ window` is 0,
//!    otherwise -1;
//! 4. accumulate signs per bucket, then L2-normalize unless all-zero.
//!
//! These rules are the cross-implementation contract checked by the
//! committed test-vector file.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::ConversationRecord;

pub const DEFAULT_DIMENSION: usize = 256;
pub const DEFAULT_NGRAM_RANGE: (usize, usize) = (3, 5);
pub const MIN_DIMENSION: usize = 8;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SIGN_SALT: u8 = 0xFF;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn sign_of(gram: &[u8]) -> f64 {
    let h = fnv1a64(&[SIGN_SALT]);
    let h = gram
        .iter()
        .fold(h, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME));
    if h >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("conversation has no user turn")]
    NoUserTurn,
    #[error("external embedder unavailable after {attempts} attempts: {last_error}")]
    ExternalUnavailable { attempts: u32, last_error: String },
    #[error("invalid embedder config: {0}")]
    InvalidConfig(String),
    #[error("external embedder returned {got} dimensions, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Self {
        let norm = values.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt();
        Self { values, norm }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// The all-zero vector produced for empty text; never used for training.
    pub fn is_degenerate(&self) -> bool {
        self.norm == 0.0
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        if self.is_degenerate() || other.is_degenerate() {
            return 0.0;
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f64::from(*a) * f64::from(*b))
            .sum();
        dot / (self.norm * other.norm)
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.values
    }
}

fn normalize_text(text: &str) -> Vec<char> {
    let lower = text.to_lowercase();
    let mut out = Vec::with_capacity(lower.len());
    for (i, word) in lower.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.extend(word.chars());
    }
    out
}

pub fn local_embed(text: &str, dim: usize, ngram_range: (usize, usize)) -> EmbeddingVector {
    assert!(dim >= MIN_DIMENSION, "dimension must be at least {MIN_DIMENSION}");
    let chars = normalize_text(text);
    let mut acc = vec![0f64; dim];
    let mut gram = String::new();
    for n in ngram_range.0.max(1)..=ngram_range.1 {
        for window in chars.windows(n) {
            gram.clear();
            gram.extend(window);
            let bytes = gram.as_bytes();
            let bucket = (fnv1a64(bytes) % dim as u64) as usize;
            acc[bucket] += sign_of(bytes);
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return EmbeddingVector::zeros(dim);
    }
    EmbeddingVector::new(acc.iter().map(|v| (v / norm) as f32).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderKind {
    LocalDeterministic,
    ExternalApi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub credentials_env: String,
    pub max_retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dimension: usize,
    pub ngram_range: (usize, usize),
    pub external: Option<ExternalConfig>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::LocalDeterministic,
            dimension: DEFAULT_DIMENSION,
            ngram_range: DEFAULT_NGRAM_RANGE,
            external: None,
        }
    }
}

impl EmbedderConfig {
    pub fn local(dimension: usize) -> Self {
        Self {
            dimension,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension < MIN_DIMENSION {
            return Err(EmbedError::InvalidConfig(format!(
                "dimension {} < {MIN_DIMENSION}",
                self.dimension
            )));
        }
        let (lo, hi) = self.ngram_range;
        if lo == 0 || lo > hi {
            return Err(EmbedError::InvalidConfig(format!("bad ngram range ({lo}, {hi})")));
        }
        if self.kind == EmbedderKind::ExternalApi && self.external.is_none() {
            return Err(EmbedError::InvalidConfig("external kind needs endpoint settings".into()));
        }
        Ok(())
    }
}

/// Network side of the external embedder, kept behind a trait so tests can
/// substitute recorded responses.
pub trait EmbeddingTransport: Send + Sync {
    fn fetch(&self, cfg: &ExternalConfig, text: &str) -> Result<Vec<f32>, String>;
}

/// Replays canned responses; optionally fails the first N calls.
#[derive(Debug, Default)]
pub struct RecordedTransport {
    responses: HashMap<String, Vec<f32>>,
    failures_left: AtomicU32,
    calls: AtomicU32,
}

impl RecordedTransport {
    pub fn new(responses: HashMap<String, Vec<f32>>) -> Self {
        Self {
            responses,
            ..Default::default()
        }
    }

    pub fn failing_first(self, n: u32) -> Self {
        self.failures_left.store(n, Ordering::SeqCst);
        self
    }

    pub fn calls(&self) -> u32 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl EmbeddingTransport for RecordedTransport {
    fn fetch(&self, _cfg: &ExternalConfig, text: &str) -> Result<Vec<f32>, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let fail = self
            .failures_left
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
        if fail {
            return Err("simulated outage".into());
        }
        self.responses
            .get(text)
            .cloned()
            .ok_or_else(|| format!("no recorded response for {text:?}"))
    }
}

#[derive(Clone)]
pub struct Embedder {
    cfg: EmbedderConfig,
    transport: Option<Arc<dyn EmbeddingTransport>>,
}

impl std::fmt::Debug for Embedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedder").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl Embedder {
    pub fn new(cfg: EmbedderConfig) -> Result<Self, EmbedError> {
        cfg.validate()?;
        Ok(Self { cfg, transport: None })
    }

    pub fn with_transport(cfg: EmbedderConfig, transport: Arc<dyn EmbeddingTransport>) -> Result<Self, EmbedError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            transport: Some(transport),
        })
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.cfg
    }

    pub fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        match self.cfg.kind {
            EmbedderKind::LocalDeterministic => {
                Ok(local_embed(text, self.cfg.dimension, self.cfg.ngram_range))
            }
            EmbedderKind::ExternalApi => self.embed_external(text),
        }
    }

    fn embed_external(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.is_empty() {
            return Ok(EmbeddingVector::zeros(self.cfg.dimension));
        }
        let ext = self.cfg.external.as_ref().expect("validated");
        let transport = self.transport.as_ref().ok_or_else(|| EmbedError::ExternalUnavailable {
            attempts: 0,
            last_error: "no transport configured".into(),
        })?;
        let mut last_error = String::new();
        let attempts = ext.max_retries + 1;
        for _ in 0..attempts {
            match transport.fetch(ext, text) {
                Ok(v) if v.len() != self.cfg.dimension => {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.cfg.dimension,
                        got: v.len(),
                    })
                }
                Ok(v) => {
                    let raw = EmbeddingVector::new(v);
                    if raw.is_degenerate() {
                        return Ok(raw);
                    }
                    let norm = raw.norm();
                    return Ok(EmbeddingVector::new(
                        raw.values.iter().map(|x| (f64::from(*x) / norm) as f32).collect(),
                    ));
                }
                Err(e) => last_error = e,
            }
        }
        Err(EmbedError::ExternalUnavailable { attempts, last_error })
    }

    /// Embeds only the first user turn of `record`.
    pub fn embed_first_turn(&self, record: &ConversationRecord) -> Result<EmbeddingVector, EmbedError> {
        let text = record.first_user_turn().ok_or(EmbedError::NoUserTurn)?;
        self.embed_text(text)
    }

    /// Parallel batch embedding; output order follows input order.
    pub fn embed_batch(&self, records: &[&ConversationRecord]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        records.par_iter().map(|r| self.embed_first_turn(r)).collect()
    }
}

pub fn embed_first_turn(record: &ConversationRecord, cfg: &EmbedderConfig) -> Result<EmbeddingVector, EmbedError> {
    Embedder::new(cfg.clone())?.embed_first_turn(record)
}

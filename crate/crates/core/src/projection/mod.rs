//! 2D reference layouts by neighbor-embedding optimization, and parametric
//! projectors that map new embeddings onto an existing layout.
//!
//! One projector is trained per language. The low-dimensional kernel is
//! `q = 1 / (1 + d²)` throughout.

pub mod gradients;
mod knn;
mod layout;
pub mod metrics;
mod model_file;
mod pca;
pub mod pipeline;
mod projector;

use thiserror::Error;

pub use knn::{knn_graph, KnnGraph, MAX_EXACT_KNN_POINTS};
pub use layout::{optimize_layout, LayoutParams, ReferenceLayout};
pub use model_file::{decode_model, encode_model, model_version, MODEL_MAGIC, MODEL_VERSION};
pub use pca::pca_2d;
pub use projector::{fit_projector, Mlp, ModelRegistry, ProjectorModel, ProjectorParams};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{n} points exceeds the exact k-NN limit of {max}; subsample first")]
    TooLarge { n: usize, max: usize },
    #[error("non-finite value at epoch {epoch}, point {point}")]
    NonFinite { epoch: usize, point: usize },
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projector trained for {model} cannot project {requested} conversations")]
    LanguageMismatch { model: String, requested: String },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn row_f64<V: AsRef<[f32]>>(v: &V) -> Vec<f64> {
    v.as_ref().iter().map(|&x| f64::from(x)).collect()
}

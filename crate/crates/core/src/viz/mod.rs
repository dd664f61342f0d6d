//! Display subsets, the compressed coordinate bundle, the persistent
//! coordinate cache, and subset-first highlighting.

mod bundle;
mod cache;
mod highlight;
mod subset;

use thiserror::Error;

pub use bundle::{
    build_bundle, compress_payload, decode_payload, encode_payload, parse_bundle, BundleDataset, BundlePoint,
    CoordinateBundle, BUNDLE_MAGIC,
};
pub use cache::{CacheError, CacheKey, CoordinateCache};
pub use highlight::{FallbackPoint, HighlightCounters, HighlightResult, SubsetMatch, VizContext};
pub use subset::{select_display_subset, DisplaySubset, MAX_SUBSET_PER_DATASET};

use crate::embed::EmbedError;
use crate::projection::ProjectionError;
use crate::search::SearchError;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("no coordinate for {dataset}/{conversation_id}")]
    MissingCoordinate { dataset: String, conversation_id: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("bundle: {0}")]
    BadBundle(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

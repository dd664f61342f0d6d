//! Core engine for exploring large conversation logs: ingest, exact filter
//! search, first-turn embeddings, parametric 2D projection, and the
//! coordinate bundle / cache used by the embedding map.

pub mod bench;
pub mod embed;
pub mod ingest;
pub mod projection;
pub mod record;
pub mod search;
pub mod synth;
pub mod viz;

/// Hover previews keep this many Unicode scalar values of the first user turn.
pub const PREVIEW_CHARS: usize = 120;

pub use embed::{EmbedderConfig, EmbeddingVector};
pub use ingest::{parse_record, FieldMapping};
pub use projection::{LayoutParams, ProjectorModel, ReferenceLayout};
pub use record::{ConversationRecord, Role, Turn};
pub use search::{CorpusIndex, FilterQuery, ResultPage};
pub use viz::{CoordinateBundle, DisplaySubset, HighlightResult};

//! Exact compositional filter search over a positional inverted index.

mod index;
mod persist;
mod query;
mod tokenize;
mod varint;

use thiserror::Error;

pub use index::{CorpusIndex, Field, PostingList, TURN_POSITION_GAP};
pub use persist::{
    decode_index, encode_index, read_index_file, write_index_file, IndexFileError, INDEX_MAGIC,
    INDEX_VERSION,
};
pub use query::{
    snippet, FilterQuery, Hit, Matches, ResultPage, DEFAULT_PAGE_SIZE, DEFAULT_THRESHOLD,
    MATCH_CAP, MAX_PAGE_SIZE, MAX_THRESHOLD,
};
pub use tokenize::{for_each_token, terms, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("duplicate conversation {dataset}/{conversation_id}")]
    DuplicateId {
        dataset: String,
        conversation_id: String,
    },
    #[error("page {page} is beyond the last page ({last_page})")]
    PageOutOfRange { page: u32, last_page: u32 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("conversation {dataset}/{conversation_id} not found")]
    NotFound {
        dataset: String,
        conversation_id: String,
    },
}

pub fn build_index(
    records: Vec<crate::record::ConversationRecord>,
) -> Result<CorpusIndex, SearchError> {
    CorpusIndex::build(records)
}

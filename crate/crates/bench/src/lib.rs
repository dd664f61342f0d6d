//! Shared fixtures for the benchmarks.

use wildvis_core::synth::{generate_synthetic_corpus, uniform_topic_mix};
use wildvis_core::{ConversationRecord, CorpusIndex};

pub fn corpus(n: usize) -> Vec<ConversationRecord> {
    generate_synthetic_corpus(n, 1, &uniform_topic_mix()).expect("valid synth config")
}

pub fn index(n: usize) -> CorpusIndex {
    CorpusIndex::build(corpus(n)).expect("synthetic records are valid")
}

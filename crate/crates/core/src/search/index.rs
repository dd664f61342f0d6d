use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tokenize::for_each_token;
use super::SearchError;
use crate::record::ConversationRecord;

/// Position gap between the last term of one turn and the first of the next.
/// Phrases need consecutive positions, so none can straddle a turn boundary.
pub const TURN_POSITION_GAP: u32 = 2;

/// Categorical fields with exact-match postings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Dataset,
    HashedIp,
    Country,
    State,
    Language,
    Model,
    Toxic,
    Redacted,
}

impl Field {
    pub const ALL: [Field; 8] = [
        Field::Dataset,
        Field::HashedIp,
        Field::Country,
        Field::State,
        Field::Language,
        Field::Model,
        Field::Toxic,
        Field::Redacted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Dataset => "dataset",
            Field::HashedIp => "hashed_ip",
            Field::Country => "country",
            Field::State => "state",
            Field::Language => "language",
            Field::Model => "model",
            Field::Toxic => "toxic",
            Field::Redacted => "redacted",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Field> {
        Field::ALL.get(code as usize).copied()
    }

    pub fn value_of(self, r: &ConversationRecord) -> String {
        match self {
            Field::Dataset => r.dataset.clone(),
            Field::HashedIp => r.hashed_ip.clone(),
            Field::Country => r.country.clone(),
            Field::State => r.state.clone(),
            Field::Language => r.language.clone(),
            Field::Model => r.model.clone(),
            Field::Toxic => bool_value(r.toxic).into(),
            Field::Redacted => bool_value(r.redacted).into(),
        }
    }
}

pub(crate) fn bool_value(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Docs containing one term, with that term's positions in each doc.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostingList {
    pub(crate) docs: Vec<u32>,
    /// `positions[offsets[i]..offsets[i + 1]]` belong to `docs[i]`.
    pub(crate) offsets: Vec<u32>,
    pub(crate) positions: Vec<u32>,
}

impl PostingList {
    pub fn docs(&self) -> &[u32] {
        &self.docs
    }

    pub fn positions_at(&self, i: usize) -> &[u32] {
        &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub(crate) fn push(&mut self, doc: u32, positions: &[u32]) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        self.docs.push(doc);
        self.positions.extend_from_slice(positions);
        self.offsets.push(self.positions.len() as u32);
    }
}

/// Immutable positional inverted index over a set of conversations.
///
/// Ordinals are assigned in result order (timestamp descending, then
/// dataset and conversation id ascending), so every sorted postings list is
/// also in result order and `doc_order` is the identity permutation.
#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    pub(crate) docs: Vec<ConversationRecord>,
    pub(crate) term_ids: HashMap<String, u32>,
    pub(crate) terms: Vec<String>,
    pub(crate) postings: Vec<PostingList>,
    pub(crate) fields: HashMap<Field, HashMap<String, Vec<u32>>>,
    pub(crate) turn_counts: Vec<u32>,
    pub(crate) by_id: HashMap<(String, String), u32>,
}

pub(crate) fn doc_order_cmp(a: &ConversationRecord, b: &ConversationRecord) -> Ordering {
    b.timestamp
        .cmp(&a.timestamp)
        .then_with(|| a.dataset.cmp(&b.dataset))
        .then_with(|| a.conversation_id.cmp(&b.conversation_id))
}

/// Terms of a record's turns with turn-gapped positions.
pub(crate) fn doc_terms(r: &ConversationRecord) -> Vec<(String, Vec<u32>)> {
    let mut per_term: HashMap<String, Vec<u32>> = HashMap::new();
    let mut base = 0u32;
    for (t, turn) in r.turns.iter().enumerate() {
        if t > 0 {
            base += TURN_POSITION_GAP - 1;
        }
        let mut count = 0;
        for_each_token(&turn.text, |term, pos, _| {
            match per_term.get_mut(term) {
                Some(v) => v.push(base + pos),
                None => {
                    per_term.insert(term.to_string(), vec![base + pos]);
                }
            }
            count = pos + 1;
        });
        base += count;
    }
    let mut out: Vec<_> = per_term.into_iter().collect();
    out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    out
}

impl CorpusIndex {
    pub fn build(mut records: Vec<ConversationRecord>) -> Result<Self, SearchError> {
        records.par_sort_by(doc_order_cmp);
        let mut by_id = HashMap::with_capacity(records.len());
        for (ord, r) in records.iter().enumerate() {
            let key = (r.dataset.clone(), r.conversation_id.clone());
            if by_id.insert(key, ord as u32).is_some() {
                return Err(SearchError::DuplicateId {
                    dataset: r.dataset.clone(),
                    conversation_id: r.conversation_id.clone(),
                });
            }
        }

        let per_doc: Vec<Vec<(String, Vec<u32>)>> = records.par_iter().map(doc_terms).collect();
        let mut term_ids: HashMap<String, u32> = HashMap::new();
        let mut terms = Vec::new();
        let mut postings: Vec<PostingList> = Vec::new();
        for (ord, doc) in per_doc.into_iter().enumerate() {
            for (term, positions) in doc {
                let id = match term_ids.get(&term) {
                    Some(id) => *id,
                    None => {
                        let id = terms.len() as u32;
                        term_ids.insert(term.clone(), id);
                        terms.push(term);
                        postings.push(PostingList::default());
                        id
                    }
                };
                postings[id as usize].push(ord as u32, &positions);
            }
        }

        let mut fields: HashMap<Field, HashMap<String, Vec<u32>>> = HashMap::new();
        for field in Field::ALL {
            let map = fields.entry(field).or_default();
            for (ord, r) in records.iter().enumerate() {
                map.entry(field.value_of(r)).or_default().push(ord as u32);
            }
        }

        Ok(Self {
            turn_counts: records.iter().map(|r| r.turn_count).collect(),
            docs: records,
            term_ids,
            terms,
            postings,
            fields,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, ordinal: u32) -> &ConversationRecord {
        &self.docs[ordinal as usize]
    }

    pub fn docs(&self) -> &[ConversationRecord] {
        &self.docs
    }

    pub fn ordinal_of(&self, dataset: &str, conversation_id: &str) -> Option<u32> {
        self.by_id
            .get(&(dataset.to_string(), conversation_id.to_string()))
            .copied()
    }

    pub fn get_conversation(&self, dataset: &str, conversation_id: &str) -> Result<&ConversationRecord, SearchError> {
        self.ordinal_of(dataset, conversation_id)
            .map(|o| self.doc(o))
            .ok_or_else(|| SearchError::NotFound {
                dataset: dataset.to_string(),
                conversation_id: conversation_id.to_string(),
            })
    }

    pub fn postings(&self, term: &str) -> Option<&PostingList> {
        self.term_ids.get(term).map(|id| &self.postings[*id as usize])
    }

    pub fn field_postings(&self, field: Field, value: &str) -> &[u32] {
        self.fields
            .get(&field)
            .and_then(|m| m.get(value))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn field_values(&self, field: Field) -> impl Iterator<Item = (&str, &[u32])> {
        self.fields
            .get(&field)
            .into_iter()
            .flat_map(|m| m.iter().map(|(k, v)| (k.as_str(), v.as_slice())))
    }

    pub fn turn_count(&self, ordinal: u32) -> u32 {
        self.turn_counts[ordinal as usize]
    }

    /// Dictionary terms in lexicographic order.
    pub fn vocabulary(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.terms.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The result-order permutation of ordinals.
    pub fn doc_order(&self) -> impl Iterator<Item = u32> {
        0..self.docs.len() as u32
    }

    /// Checks every structural invariant; used after loading and in tests.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.docs.len() as u32;
        for w in self.docs.windows(2) {
            if doc_order_cmp(&w[0], &w[1]) != Ordering::Less {
                return Err(format!(
                    "doc order violated at {}/{}",
                    w[1].dataset, w[1].conversation_id
                ));
            }
        }
        if self.terms.len() != self.postings.len() || self.term_ids.len() != self.terms.len() {
            return Err("term dictionary and postings disagree".into());
        }
        for (id, term) in self.terms.iter().enumerate() {
            if self.term_ids.get(term) != Some(&(id as u32)) {
                return Err(format!("term {term:?} has inconsistent id"));
            }
            let pl = &self.postings[id];
            if pl.docs.is_empty() || pl.offsets.len() != pl.docs.len() + 1 {
                return Err(format!("term {term:?} has malformed postings"));
            }
            if pl.docs.windows(2).any(|w| w[0] >= w[1]) || *pl.docs.last().unwrap() >= n {
                return Err(format!("term {term:?} docs not strictly ascending"));
            }
            for i in 0..pl.docs.len() {
                let p = pl.positions_at(i);
                if p.is_empty() || p.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(format!("term {term:?} positions not strictly ascending"));
                }
            }
        }
        for field in Field::ALL {
            let mut seen = vec![0u8; n as usize];
            for (_, list) in self.field_values(field) {
                if list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(format!("{} postings not ascending", field.name()));
                }
                for &o in list {
                    match seen.get_mut(o as usize) {
                        Some(s) => *s += 1,
                        None => return Err(format!("{} posting out of range", field.name())),
                    }
                }
            }
            if seen.iter().any(|&c| c != 1) {
                return Err(format!("{} does not cover every doc exactly once", field.name()));
            }
        }
        if self.turn_counts.len() != self.docs.len() || self.by_id.len() != self.docs.len() {
            return Err("doc tables disagree in length".into());
        }
        Ok(())
    }
}

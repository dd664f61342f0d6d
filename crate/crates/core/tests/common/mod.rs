//! Linear-scan search oracle and random query generation, shared by the
//! integration and acceptance tests. Written against the record schema only.

#![allow(dead_code)]

pub mod blobs;
pub mod grad;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wildvis_core::ingest::read_corpus;
use wildvis_core::viz::DisplaySubset;
use wildvis_core::{ConversationRecord, FilterQuery};

/// Lowercased maximal alphanumeric runs.
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn has_phrase(r: &ConversationRecord, phrase: &[String]) -> bool {
    phrase.is_empty()
        || r.turns.iter().any(|t| {
            let w = words(&t.text);
            w.len() >= phrase.len() && (0..=w.len() - phrase.len()).any(|i| w[i..i + phrase.len()] == *phrase)
        })
}

pub fn accepts(r: &ConversationRecord, q: &FilterQuery) -> bool {
    fn ok(want: &Option<String>, have: &str) -> bool {
        match want {
            Some(w) => w == have,
            None => true,
        }
    }
    ok(&q.dataset, &r.dataset)
        && ok(&q.hashed_ip, &r.hashed_ip)
        && ok(&q.country, &r.country)
        && ok(&q.state, &r.state)
        && ok(&q.language, &r.language)
        && ok(&q.model, &r.model)
        && q.toxic.is_none_or(|b| b == r.toxic)
        && q.redacted.is_none_or(|b| b == r.redacted)
        && q.min_turns.is_none_or(|m| r.turn_count >= m)
        && has_phrase(r, &q.contains.as_deref().map(words).unwrap_or_default())
}

/// Every match as (dataset, conversation_id): newest first, then dataset,
/// then id.
pub fn oracle(corpus: &[ConversationRecord], q: &FilterQuery) -> Vec<(String, String)> {
    let mut hits: Vec<&ConversationRecord> = corpus.iter().filter(|r| accepts(r, q)).collect();
    hits.sort_by(|a, b| {
        b.timestamp
            .cmp(&a.timestamp)
            .then(a.dataset.cmp(&b.dataset))
            .then(a.conversation_id.cmp(&b.conversation_id))
    });
    hits.into_iter()
        .map(|r| (r.dataset.clone(), r.conversation_id.clone()))
        .collect()
}

/// A query built from values that occur in `corpus`, so most queries have
/// some matches, with occasional values that occur nowhere.
pub fn random_query(corpus: &[ConversationRecord], rng: &mut ChaCha8Rng) -> FilterQuery {
    let mut q = FilterQuery::default();
    let pick = |rng: &mut ChaCha8Rng| &corpus[rng.random_range(0..corpus.len())];
    if rng.random_bool(0.7) {
        let r = pick(rng);
        let turn = &r.turns[rng.random_range(0..r.turns.len())];
        let w = words(&turn.text);
        if !w.is_empty() {
            let len = rng.random_range(1..=3.min(w.len()));
            let start = rng.random_range(0..=w.len() - len);
            let mut phrase = w[start..start + len].join(" ");
            if rng.random_bool(0.2) {
                phrase = phrase.to_uppercase();
            }
            q.contains = Some(phrase);
        }
    } else if rng.random_bool(0.1) {
        q.contains = Some("zzqxv".into());
    }
    let field = |rng: &mut ChaCha8Rng, get: fn(&ConversationRecord) -> String| -> Option<String> {
        if rng.random_bool(0.25) {
            Some(if rng.random_bool(0.05) { "no-such-value".into() } else { get(pick(rng)) })
        } else {
            None
        }
    };
    q.dataset = field(rng, |r| r.dataset.clone());
    q.hashed_ip = field(rng, |r| r.hashed_ip.clone());
    q.country = field(rng, |r| r.country.clone());
    q.state = field(rng, |r| r.state.clone());
    q.language = field(rng, |r| r.language.clone());
    q.model = field(rng, |r| r.model.clone());
    if rng.random_bool(0.2) {
        q.toxic = Some(rng.random_bool(0.5));
    }
    if rng.random_bool(0.2) {
        q.redacted = Some(rng.random_bool(0.5));
    }
    if rng.random_bool(0.2) {
        q.min_turns = Some(rng.random_range(1..=6));
    }
    q.page_size = rng.random_range(1..=30);
    q
}

pub type Coords = HashMap<(String, String), (f32, f32)>;
pub type Previews = HashMap<(String, String), String>;

/// Inputs of the committed golden bundle: every record of the golden corpus,
/// with coordinates that are a fixed function of line order.
pub fn golden_bundle_inputs(corpus: &Path) -> (DisplaySubset, Coords, Previews) {
    let records = read_corpus(corpus).unwrap().records;
    let mut datasets: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in &records {
        datasets.entry(r.dataset.clone()).or_default().push(r.conversation_id.clone());
    }
    datasets.values_mut().for_each(|v| v.sort());
    let subset = DisplaySubset { language: "English".into(), seed: 0, datasets };
    let mut coords = HashMap::new();
    let mut previews = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = (r.dataset.clone(), r.conversation_id.clone());
        coords.insert(key.clone(), (i as f32 * 0.25 - 3.0, 1.0 / (i as f32 + 1.0)));
        previews.insert(key, r.preview());
    }
    (subset, coords, previews)
}

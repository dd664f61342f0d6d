//! Indexed search vs. a naive scan over random vocabulary keywords.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::record::ConversationRecord;
use crate::search::{snippet, terms, tokenize, CorpusIndex, FilterQuery, Hit, ResultPage, MATCH_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_s: f64,
    pub stdev_s: f64,
}

impl Timing {
    /// Sample standard deviation (n − 1); 0 for a single sample.
    pub fn from_samples(s: &[f64]) -> Self {
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n.max(1.0);
        let var = if s.len() > 1 {
            s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean_s: mean,
            stdev_s: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTiming {
    pub term: String,
    pub total_matched: usize,
    pub indexed_s: f64,
    pub naive_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub docs: usize,
    pub seed: u64,
    pub queries: Vec<QueryTiming>,
    pub indexed: Timing,
    pub naive: Timing,
    /// naive mean / indexed mean
    pub speedup: f64,
}

/// `n` distinct vocabulary terms drawn uniformly for `seed`.
pub fn sample_queries(index: &CorpusIndex, n: usize, seed: u64) -> Vec<String> {
    let mut vocab = index.vocabulary();
    vocab.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vocab.choose_multiple(&mut rng, n).map(|s| s.to_string()).collect()
}

fn scan_matches(r: &ConversationRecord, phrase: &[String]) -> bool {
    if phrase.is_empty() {
        return true;
    }
    r.turns.iter().any(|t| {
        let toks: Vec<String> = tokenize(&t.text).into_iter().map(|(s, _)| s).collect();
        toks.windows(phrase.len()).any(|w| w == phrase)
    })
}

fn scan_accepts(r: &ConversationRecord, q: &FilterQuery) -> bool {
    let eq = |want: &Option<String>, have: &str| want.as_deref().is_none_or(|w| w == have);
    eq(&q.dataset, &r.dataset)
        && eq(&q.hashed_ip, &r.hashed_ip)
        && eq(&q.country, &r.country)
        && eq(&q.state, &r.state)
        && eq(&q.language, &r.language)
        && eq(&q.model, &r.model)
        && q.toxic.is_none_or(|b| b == r.toxic)
        && q.redacted.is_none_or(|b| b == r.redacted)
        && q.min_turns.is_none_or(|m| r.turn_count >= m)
}

/// The baseline: tokenize every document on every query. Same result page as
/// [`CorpusIndex::execute_search`] for valid page numbers.
pub fn naive_search(docs: &[ConversationRecord], q: &FilterQuery) -> ResultPage {
    let phrase = q.contains.as_deref().map(terms).unwrap_or_default();
    let mut matched = Vec::new();
    let mut total = 0usize;
    for r in docs {
        if scan_accepts(r, q) && scan_matches(r, &phrase) {
            total += 1;
            if matched.len() < MATCH_CAP {
                matched.push(r);
            }
        }
    }
    let size = q.effective_page_size() as usize;
    let start = (q.page.max(1) as usize - 1) * size;
    let hits = matched
        .iter()
        .skip(start)
        .take(size)
        .map(|r| Hit {
            conversation_id: r.conversation_id.clone(),
            dataset: r.dataset.clone(),
            timestamp: r.timestamp,
            country: r.country.clone(),
            state: r.state.clone(),
            hashed_ip: r.hashed_ip.clone(),
            model: r.model.clone(),
            snippet: snippet(r, &phrase),
        })
        .collect();
    ResultPage {
        total_matched: matched.len(),
        cap_applied: total > MATCH_CAP,
        page: q.page,
        hits,
    }
}

pub fn run_bench(index: &CorpusIndex, n_queries: usize, seed: u64) -> BenchReport {
    let mut queries = Vec::new();
    for term in sample_queries(index, n_queries, seed) {
        let q = FilterQuery::contains(term.clone());
        let t0 = Instant::now();
        let page = index.execute_search(&q).expect("page 1 is always valid");
        let indexed_s = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let slow = naive_search(index.docs(), &q);
        let naive_s = t0.elapsed().as_secs_f64();
        debug_assert_eq!(slow, page);
        queries.push(QueryTiming {
            term,
            total_matched: page.total_matched,
            indexed_s,
            naive_s,
        });
    }
    let indexed = Timing::from_samples(&queries.iter().map(|q| q.indexed_s).collect::<Vec<_>>());
    let naive = Timing::from_samples(&queries.iter().map(|q| q.naive_s).collect::<Vec<_>>());
    BenchReport {
        docs: index.len(),
        seed,
        queries,
        indexed,
        naive,
        speedup: naive.mean_s / indexed.mean_s.max(1e-12),
    }
}

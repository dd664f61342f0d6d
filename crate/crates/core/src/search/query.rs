use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::index::{bool_value, CorpusIndex, Field, PostingList};
use super::tokenize::{for_each_token, terms};
use super::SearchError;
use crate::record::ConversationRecord;

pub const MAX_PAGE_SIZE: u32 = 30;
pub const DEFAULT_PAGE_SIZE: u32 = 30;
pub const MATCH_CAP: usize = 10_000;
pub const DEFAULT_THRESHOLD: u32 = 100;
pub const MAX_THRESHOLD: u32 = 1_000;

/// Conjunction of the ten filters plus pagination and highlight controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterQuery {
    pub contains: Option<String>,
    pub hashed_ip: Option<String>,
    pub country: Option<String>,
    pub state: Option<String>,
    pub language: Option<String>,
    pub model: Option<String>,
    pub dataset: Option<String>,
    pub toxic: Option<bool>,
    pub redacted: Option<bool>,
    pub min_turns: Option<u32>,
    pub page: u32,
    pub page_size: u32,
    pub threshold: u32,
}

impl Default for FilterQuery {
    fn default() -> Self {
        Self {
            contains: None,
            hashed_ip: None,
            country: None,
            state: None,
            language: None,
            model: None,
            dataset: None,
            toxic: None,
            redacted: None,
            min_turns: None,
            page: 1,
            page_size: DEFAULT_PAGE_SIZE,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl FilterQuery {
    pub fn contains(phrase: impl Into<String>) -> Self {
        Self {
            contains: Some(phrase.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.page < 1 {
            return Err(SearchError::InvalidQuery("page must be at least 1".into()));
        }
        if !(1..=MAX_THRESHOLD).contains(&self.threshold) {
            return Err(SearchError::InvalidQuery(format!(
                "threshold must be in [1, {MAX_THRESHOLD}]"
            )));
        }
        Ok(())
    }

    /// Page size clamped to [1, 30].
    pub fn effective_page_size(&self) -> u32 {
        self.page_size.clamp(1, MAX_PAGE_SIZE)
    }

    /// The exact-match predicates that are set.
    pub fn field_predicates(&self) -> Vec<(Field, String)> {
        let mut out = Vec::new();
        let mut push = |f: Field, v: &Option<String>| {
            if let Some(v) = v {
                out.push((f, v.clone()));
            }
        };
        push(Field::Dataset, &self.dataset);
        push(Field::HashedIp, &self.hashed_ip);
        push(Field::Country, &self.country);
        push(Field::State, &self.state);
        push(Field::Language, &self.language);
        push(Field::Model, &self.model);
        if let Some(b) = self.toxic {
            out.push((Field::Toxic, bool_value(b).into()));
        }
        if let Some(b) = self.redacted {
            out.push((Field::Redacted, bool_value(b).into()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub conversation_id: String,
    pub dataset: String,
    pub timestamp: DateTime<Utc>,
    pub country: String,
    pub state: String,
    pub hashed_ip: String,
    pub model: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPage {
    pub total_matched: usize,
    pub cap_applied: bool,
    pub page: u32,
    pub hits: Vec<Hit>,
}

/// Sorted-list cursor with galloping seek.
struct Cursor<'a> {
    list: &'a [u32],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn new(list: &'a [u32]) -> Self {
        Self { list, at: 0 }
    }

    /// Advances to the first element ≥ target; returns its index if present.
    fn seek(&mut self, target: u32) -> Option<usize> {
        let rest = &self.list[self.at..];
        if rest.first().is_some_and(|&x| x >= target) {
            return Some(self.at);
        }
        let mut bound = 1;
        while bound < rest.len() && rest[bound] < target {
            bound *= 2;
        }
        let lo = bound / 2;
        let hi = (bound + 1).min(rest.len());
        self.at += lo + rest[lo..hi].partition_point(|&x| x < target);
        (self.at < self.list.len()).then_some(self.at)
    }
}

enum Driver<'a> {
    All(std::ops::Range<u32>),
    List(Cursor<'a>),
    Empty,
}

/// Lazily enumerates matching ordinals in result order.
pub struct Matches<'a> {
    index: &'a CorpusIndex,
    driver: Driver<'a>,
    filters: Vec<Cursor<'a>>,
    phrase: Vec<(&'a PostingList, Cursor<'a>)>,
    min_turns: Option<u32>,
}

impl<'a> Matches<'a> {
    fn new(index: &'a CorpusIndex, q: &FilterQuery) -> Self {
        let empty = |index| Matches {
            index,
            driver: Driver::Empty,
            filters: Vec::new(),
            phrase: Vec::new(),
            min_turns: None,
        };

        let mut lists: Vec<&'a [u32]> = Vec::new();
        for (field, value) in q.field_predicates() {
            let list = index.field_postings(field, &value);
            if list.is_empty() {
                return empty(index);
            }
            lists.push(list);
        }
        let mut phrase = Vec::new();
        if let Some(text) = &q.contains {
            for term in terms(text) {
                match index.postings(&term) {
                    Some(pl) => phrase.push(pl),
                    None => return empty(index),
                }
            }
        }

        // drive from the shortest list, intersect the others
        let mut candidates: Vec<&'a [u32]> = lists.clone();
        candidates.extend(phrase.iter().map(|pl| pl.docs()));
        let driver = match candidates.iter().enumerate().min_by_key(|(_, l)| l.len()) {
            Some((i, _)) => {
                let list = candidates[i];
                if i < lists.len() {
                    lists.remove(i);
                }
                Driver::List(Cursor::new(list))
            }
            None => Driver::All(0..index.len() as u32),
        };
        Matches {
            index,
            driver,
            filters: lists.into_iter().map(Cursor::new).collect(),
            phrase: phrase.into_iter().map(|pl| (pl, Cursor::new(pl.docs()))).collect(),
            min_turns: q.min_turns,
        }
    }

    fn accepts(&mut self, doc: u32) -> bool {
        for c in &mut self.filters {
            match c.seek(doc) {
                Some(i) if c.list[i] == doc => {}
                _ => return false,
            }
        }
        if let Some(min) = self.min_turns {
            if self.index.turn_count(doc) < min {
                return false;
            }
        }
        if self.phrase.is_empty() {
            return true;
        }
        let mut slots = Vec::with_capacity(self.phrase.len());
        for (pl, c) in &mut self.phrase {
            match c.seek(doc) {
                Some(i) if c.list[i] == doc => slots.push(pl.positions_at(i)),
                _ => return false,
            }
        }
        slots[0].iter().any(|&p| {
            slots[1..]
                .iter()
                .enumerate()
                .all(|(k, pos)| pos.binary_search(&(p + k as u32 + 1)).is_ok())
        })
    }
}

impl Iterator for Matches<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        loop {
            let doc = match &mut self.driver {
                Driver::Empty => return None,
                Driver::All(range) => range.next()?,
                Driver::List(c) => {
                    let d = *c.list.get(c.at)?;
                    c.at += 1;
                    d
                }
            };
            if self.accepts(doc) {
                return Some(doc);
            }
        }
    }
}

impl CorpusIndex {
    /// All matches of `q` in result order, uncapped and unpaginated.
    pub fn matches(&self, q: &FilterQuery) -> Matches<'_> {
        Matches::new(self, q)
    }

    /// The first `MATCH_CAP` matches and whether more exist.
    pub fn capped_matches(&self, q: &FilterQuery) -> (Vec<u32>, bool) {
        let mut it = self.matches(q);
        let hits: Vec<u32> = it.by_ref().take(MATCH_CAP).collect();
        let more = hits.len() == MATCH_CAP && it.next().is_some();
        (hits, more)
    }

    pub fn execute_search(&self, q: &FilterQuery) -> Result<ResultPage, SearchError> {
        q.validate()?;
        let (matched, cap_applied) = self.capped_matches(q);
        let page_size = q.effective_page_size() as usize;
        let last_page = matched.len().div_ceil(page_size).max(1);
        if q.page as usize > last_page {
            return Err(SearchError::PageOutOfRange {
                page: q.page,
                last_page: last_page as u32,
            });
        }
        let start = (q.page as usize - 1) * page_size;
        let end = (start + page_size).min(matched.len());
        let phrase = q.contains.as_deref().map(terms).unwrap_or_default();
        let hits = matched[start..end]
            .iter()
            .map(|&o| {
                let r = self.doc(o);
                Hit {
                    conversation_id: r.conversation_id.clone(),
                    dataset: r.dataset.clone(),
                    timestamp: r.timestamp,
                    country: r.country.clone(),
                    state: r.state.clone(),
                    hashed_ip: r.hashed_ip.clone(),
                    model: r.model.clone(),
                    snippet: snippet(r, &phrase),
                }
            })
            .collect();
        Ok(ResultPage {
            total_matched: matched.len(),
            cap_applied,
            page: q.page,
            hits,
        })
    }
}

const SNIPPET_CONTEXT: usize = 60;

/// Text around the first phrase occurrence, or the preview when there is no
/// phrase (or it cannot be located).
pub fn snippet(r: &ConversationRecord, phrase: &[String]) -> String {
    if !phrase.is_empty() {
        for turn in &r.turns {
            let mut toks: Vec<(String, std::ops::Range<usize>)> = Vec::new();
            for_each_token(&turn.text, |t, _, span| toks.push((t.to_string(), span)));
            let found = toks
                .windows(phrase.len())
                .find(|w| w.iter().zip(phrase).all(|((t, _), p)| t == p));
            if let Some(w) = found {
                let (start, end) = (w[0].1.start, w[w.len() - 1].1.end);
                return window(&turn.text, start, end);
            }
        }
    }
    r.preview()
}

fn window(text: &str, start: usize, end: usize) -> String {
    let before: Vec<(usize, char)> = text[..start].char_indices().collect();
    let from = before
        .len()
        .checked_sub(SNIPPET_CONTEXT)
        .map(|i| before[i].0)
        .unwrap_or(0);
    let to = text[end..]
        .char_indices()
        .nth(SNIPPET_CONTEXT)
        .map(|(i, _)| end + i)
        .unwrap_or(text.len());
    let mut s = String::new();
    if from > 0 {
        s.push('…');
    }
    s.push_str(&text[from..to]);
    if to < text.len() {
        s.push('…');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::index::tests::doc;

    fn ids(idx: &CorpusIndex, q: &FilterQuery) -> Vec<String> {
        idx.matches(q).map(|o| idx.doc(o).conversation_id.clone()).collect()
    }

    #[test]
    fn phrase_within_turn_only() {
        let idx = CorpusIndex::build(vec![doc("a", 1, &["ab cd", "cd ab"])]).unwrap();
        assert_eq!(ids(&idx, &FilterQuery::contains("cd ab")), ["a"]);
        assert!(ids(&idx, &FilterQuery::contains("cd cd")).is_empty());
        assert!(ids(&idx, &FilterQuery::contains("ab ab")).is_empty());
    }

    #[test]
    fn five_doc_homework() {
        let idx = CorpusIndex::build(vec![
            doc("d0", 5, &["hello"]),
            doc("d1", 4, &["my homework is due"]),
            doc("d2", 3, &["write code"]),
            doc("d3", 2, &["HOMEWORK help please"]),
            doc("d4", 1, &["home work"]),
        ])
        .unwrap();
        let page = idx.execute_search(&FilterQuery::contains("homework")).unwrap();
        assert_eq!(page.total_matched, 2);
        let got: Vec<_> = page.hits.iter().map(|h| h.conversation_id.as_str()).collect();
        assert_eq!(got, ["d1", "d3"]);
        assert!(page.hits[1].snippet.contains("HOMEWORK"));
    }

    #[test]
    fn pagination_and_out_of_range() {
        let docs: Vec<_> = (0..45).map(|i| doc(&format!("d{i:02}"), i, &["same text"])).collect();
        let idx = CorpusIndex::build(docs).unwrap();
        let mut q = FilterQuery::default();
        assert_eq!(idx.execute_search(&q).unwrap().hits.len(), 30);
        q.page = 2;
        assert_eq!(idx.execute_search(&q).unwrap().hits.len(), 15);
        q.page = 3;
        assert!(matches!(
            idx.execute_search(&q),
            Err(SearchError::PageOutOfRange { page: 3, last_page: 2 })
        ));
        q.page = 1;
        q.page_size = 100;
        assert_eq!(idx.execute_search(&q).unwrap().hits.len(), 30);
        q.page_size = 0;
        assert_eq!(idx.execute_search(&q).unwrap().hits.len(), 1);
    }

    #[test]
    fn empty_result_page_one_ok_page_two_err() {
        let idx = CorpusIndex::build(vec![doc("a", 1, &["x"])]).unwrap();
        let mut q = FilterQuery::contains("absent");
        let page = idx.execute_search(&q).unwrap();
        assert_eq!(page.total_matched, 0);
        assert!(page.hits.is_empty());
        q.page = 2;
        assert!(idx.execute_search(&q).is_err());
    }

    #[test]
    fn fields_booleans_and_min_turns() {
        let mut a = doc("a", 3, &["x", "y", "z", "w"]);
        a.toxic = true;
        a.country = "Brazil".into();
        let b = doc("b", 2, &["x", "y"]);
        let mut c = doc("c", 1, &["x"]);
        c.country = "Brazil".into();
        let idx = CorpusIndex::build(vec![a, b, c]).unwrap();
        let q = FilterQuery {
            country: Some("Brazil".into()),
            ..Default::default()
        };
        assert_eq!(ids(&idx, &q), ["a", "c"]);
        let q = FilterQuery {
            toxic: Some(false),
            ..Default::default()
        };
        assert_eq!(ids(&idx, &q), ["b", "c"]);
        let q = FilterQuery {
            min_turns: Some(2),
            ..Default::default()
        };
        assert_eq!(ids(&idx, &q), ["a", "b"]);
        let q = FilterQuery {
            min_turns: Some(2),
            country: Some("Brazil".into()),
            contains: Some("X".into()),
            ..Default::default()
        };
        assert_eq!(ids(&idx, &q), ["a"]);
    }

    #[test]
    fn invalid_threshold_and_page() {
        let idx = CorpusIndex::build(vec![]).unwrap();
        let q = FilterQuery {
            threshold: 1001,
            ..Default::default()
        };
        assert!(matches!(idx.execute_search(&q), Err(SearchError::InvalidQuery(_))));
        let q = FilterQuery {
            page: 0,
            ..Default::default()
        };
        assert!(idx.execute_search(&q).is_err());
    }

    #[test]
    fn cursor_seek() {
        let list = [1, 3, 5, 7, 9, 11, 13, 15, 17];
        let mut c = Cursor::new(&list);
        assert_eq!(c.seek(0), Some(0));
        assert_eq!(c.seek(6), Some(3));
        assert_eq!(c.seek(7), Some(3));
        assert_eq!(c.seek(16), Some(8));
        assert_eq!(c.seek(18), None);
    }
}

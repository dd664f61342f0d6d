use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CacheKey, CoordinateCache, DisplaySubset, VizError};
use crate::embed::Embedder;
use crate::projection::{model_version, ProjectorModel};
use crate::search::{CorpusIndex, FilterQuery};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetMatch {
    pub dataset: String,
    pub conversation_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackPoint {
    pub dataset: String,
    pub conversation_id: String,
    pub x: f32,
    pub y: f32,
    pub preview: String,
}

/// Work done by one highlight call (or, from [`VizContext::totals`], by all
/// calls so far).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightCounters {
    pub subset_searches: u64,
    pub full_searches: u64,
    pub projector_invocations: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    /// Points computed without being stored because the cache failed.
    pub cache_unavailable: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightResult {
    pub matched_in_subset: Vec<SubsetMatch>,
    pub fallback_points: Vec<FallbackPoint>,
    pub fallback_used: bool,
    pub counters: HighlightCounters,
}

#[derive(Default)]
struct Totals([AtomicU64; 6]);

impl Totals {
    fn add(&self, c: &HighlightCounters) {
        let vals = [
            c.subset_searches,
            c.full_searches,
            c.projector_invocations,
            c.cache_hits,
            c.cache_misses,
            c.cache_unavailable,
        ];
        for (a, v) in self.0.iter().zip(vals) {
            a.fetch_add(v, Ordering::Relaxed);
        }
    }

    fn snapshot(&self) -> HighlightCounters {
        let v: Vec<u64> = self.0.iter().map(|a| a.load(Ordering::Relaxed)).collect();
        HighlightCounters {
            subset_searches: v[0],
            full_searches: v[1],
            projector_invocations: v[2],
            cache_hits: v[3],
            cache_misses: v[4],
            cache_unavailable: v[5],
        }
    }
}

/// Everything the embedding map needs for one language.
pub struct VizContext {
    index: Arc<CorpusIndex>,
    subset: DisplaySubset,
    subset_index: CorpusIndex,
    model: Arc<ProjectorModel>,
    model_version: u64,
    embedder: Embedder,
    cache: Arc<CoordinateCache>,
    totals: Totals,
}

impl std::fmt::Debug for VizContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VizContext")
            .field("language", &self.model.language)
            .field("subset", &self.subset.len())
            .field("model_version", &self.model_version)
            .finish_non_exhaustive()
    }
}

impl VizContext {
    /// Builds the subset index from `index`; every subset member must be in it.
    pub fn new(
        index: Arc<CorpusIndex>,
        subset: DisplaySubset,
        model: Arc<ProjectorModel>,
        embedder: Embedder,
        cache: Arc<CoordinateCache>,
    ) -> Result<Self, VizError> {
        if embedder.config().dimension != model.input_dim {
            return Err(VizError::InvalidInput(format!(
                "embedder dimension {} but projector expects {}",
                embedder.config().dimension,
                model.input_dim
            )));
        }
        let mut members = Vec::with_capacity(subset.len());
        for (d, id) in subset.iter() {
            members.push(index.get_conversation(d, id)?.clone());
        }
        let subset_index = CorpusIndex::build(members)?;
        Ok(Self {
            model_version: model_version(&model),
            index,
            subset,
            subset_index,
            model,
            embedder,
            cache,
            totals: Totals::default(),
        })
    }

    pub fn language(&self) -> &str {
        &self.model.language
    }

    pub fn subset(&self) -> &DisplaySubset {
        &self.subset
    }

    pub fn subset_index(&self) -> &CorpusIndex {
        &self.subset_index
    }

    pub fn model(&self) -> &ProjectorModel {
        &self.model
    }

    pub fn model_version(&self) -> u64 {
        self.model_version
    }

    pub fn cache(&self) -> &CoordinateCache {
        &self.cache
    }

    /// Counters summed over every highlight call on this context.
    pub fn totals(&self) -> HighlightCounters {
        self.totals.snapshot()
    }

    /// Subset-first highlight.
    ///
    /// The query's language filter is replaced by the map's language. If the
    /// subset alone yields at least `q.threshold` matches they are returned
    /// and the full index is never touched. Otherwise the full index is
    /// walked in result order, skipping subset members, until subset and
    /// fallback matches together reach the threshold; fallback points get
    /// coordinates from the cache or, failing that, from the projector.
    pub fn highlight(&self, q: &FilterQuery) -> Result<HighlightResult, VizError> {
        q.validate()?;
        let mut q = q.clone();
        q.language = Some(self.model.language.clone());
        let threshold = q.threshold as usize;
        let mut c = HighlightCounters::default();

        c.subset_searches += 1;
        let matched_in_subset: Vec<SubsetMatch> = self
            .subset_index
            .matches(&q)
            .map(|o| {
                let r = self.subset_index.doc(o);
                SubsetMatch {
                    dataset: r.dataset.clone(),
                    conversation_id: r.conversation_id.clone(),
                }
            })
            .collect();
        if matched_in_subset.len() >= threshold {
            self.totals.add(&c);
            return Ok(HighlightResult {
                matched_in_subset,
                fallback_points: Vec::new(),
                fallback_used: false,
                counters: c,
            });
        }

        c.full_searches += 1;
        let need = threshold - matched_in_subset.len();
        let mut fallback_points = Vec::with_capacity(need);
        for o in self.index.matches(&q) {
            if fallback_points.len() == need {
                break;
            }
            let r = self.index.doc(o);
            if self.subset.contains(&r.dataset, &r.conversation_id) {
                continue;
            }
            let key = CacheKey::new(&r.dataset, &r.conversation_id, self.model_version);
            let cached = match self.cache.get(&key) {
                Ok(Some(xy)) => {
                    c.cache_hits += 1;
                    Some(xy)
                }
                Ok(None) => {
                    c.cache_misses += 1;
                    None
                }
                Err(_) => None,
            };
            let (x, y) = match cached {
                Some(xy) => xy,
                None => {
                    let v = self.embedder.embed_first_turn(r)?;
                    c.projector_invocations += 1;
                    let (x, y) = self.model.project_for(&r.language, v.values())?;
                    let xy = (x as f32, y as f32);
                    match self.cache.put_once(key, xy) {
                        Ok(stored) => stored,
                        Err(e) => {
                            tracing::debug!("{e}");
                            c.cache_unavailable += 1;
                            xy
                        }
                    }
                }
            };
            fallback_points.push(FallbackPoint {
                dataset: r.dataset.clone(),
                conversation_id: r.conversation_id.clone(),
                x,
                y,
                preview: r.preview(),
            });
        }
        self.totals.add(&c);
        Ok(HighlightResult {
            matched_in_subset,
            fallback_points,
            fallback_used: true,
            counters: c,
        })
    }
}

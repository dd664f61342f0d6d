use std::collections::{BTreeMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VizError;
use crate::record::ConversationRecord;

pub const MAX_SUBSET_PER_DATASET: usize = 1_500;

/// Conversations of one language whose coordinates ship in the bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplaySubset {
    pub language: String,
    pub seed: u64,
    /// dataset → conversation ids, sorted
    pub datasets: BTreeMap<String, Vec<String>>,
}

impl DisplaySubset {
    pub fn len(&self) -> usize {
        self.datasets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, dataset: &str, conversation_id: &str) -> bool {
        self.datasets
            .get(dataset)
            .is_some_and(|ids| ids.binary_search_by(|x| x.as_str().cmp(conversation_id)).is_ok())
    }

    /// (dataset, id) pairs, datasets in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.datasets
            .iter()
            .flat_map(|(d, ids)| ids.iter().map(move |id| (d.as_str(), id.as_str())))
    }

    /// Keep only members for which `keep` holds.
    pub fn retain(&mut self, mut keep: impl FnMut(&str, &str) -> bool) {
        for (d, ids) in self.datasets.iter_mut() {
            ids.retain(|id| keep(d, id));
        }
        self.datasets.retain(|_, ids| !ids.is_empty());
    }

    /// The member records, in subset order.
    pub fn records<'a>(&self, corpus: &'a [ConversationRecord]) -> Vec<&'a ConversationRecord> {
        let wanted: HashSet<(&str, &str)> = self.iter().collect();
        let mut out: Vec<&ConversationRecord> = corpus
            .iter()
            .filter(|r| wanted.contains(&(r.dataset.as_str(), r.conversation_id.as_str())))
            .collect();
        out.sort_by(|a, b| (&a.dataset, &a.conversation_id).cmp(&(&b.dataset, &b.conversation_id)));
        out.dedup_by(|a, b| a.dataset == b.dataset && a.conversation_id == b.conversation_id);
        out
    }
}

/// Uniform sample without replacement of up to `n_per_dataset`
/// conversations per dataset among those in `language` (case-insensitive).
/// Independent of corpus order.
pub fn select_display_subset(
    corpus: &[ConversationRecord],
    language: &str,
    n_per_dataset: usize,
    seed: u64,
) -> Result<DisplaySubset, VizError> {
    if n_per_dataset > MAX_SUBSET_PER_DATASET {
        return Err(VizError::InvalidInput(format!(
            "at most {MAX_SUBSET_PER_DATASET} conversations per dataset"
        )));
    }
    let mut pools: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in corpus.iter().filter(|r| r.language.eq_ignore_ascii_case(language)) {
        pools.entry(&r.dataset).or_default().push(&r.conversation_id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut datasets = BTreeMap::new();
    for (dataset, mut ids) in pools {
        ids.sort_unstable();
        ids.dedup();
        let mut picked: Vec<String> = ids
            .choose_multiple(&mut rng, n_per_dataset)
            .map(|s| s.to_string())
            .collect();
        picked.sort_unstable();
        if !picked.is_empty() {
            datasets.insert(dataset.to_string(), picked);
        }
    }
    Ok(DisplaySubset {
        language: language.to_string(),
        seed,
        datasets,
    })
}

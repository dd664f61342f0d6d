//! Per-language training: display subset → first-turn embeddings → layout →
//! projector, plus the artifacts the bundle builder and server read.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{bbox_diagonal, kmeans, silhouette};
use super::{
    fit_projector, knn_graph, optimize_layout, LayoutParams, ProjectionError, ProjectorModel, ProjectorParams,
    ReferenceLayout,
};
use crate::embed::{EmbedError, Embedder, EmbedderConfig};
use crate::record::ConversationRecord;
use crate::search::CorpusIndex;
use crate::viz::{build_bundle, select_display_subset, DisplaySubset, VizError, MAX_SUBSET_PER_DATASET};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no conversations in language {0:?}")]
    UnknownLanguage(String),
    #[error("{n} usable points; need more than k = {k}")]
    TooFewPoints { n: usize, k: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Viz(#[from] VizError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub embedder: EmbedderConfig,
    pub layout: LayoutParams,
    pub projector: ProjectorParams,
    pub n_per_dataset: usize,
    pub subset_seed: u64,
    /// Records carry no topic labels, so the reported silhouette scores the
    /// layout against k-means clusters found in embedding space.
    pub silhouette_clusters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embedder: EmbedderConfig::default(),
            layout: LayoutParams::default(),
            projector: ProjectorParams::default(),
            n_per_dataset: MAX_SUBSET_PER_DATASET,
            subset_seed: 0,
            silhouette_clusters: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub language: String,
    pub points: usize,
    /// Subset members dropped because their first turn embedded to zero.
    pub excluded_degenerate: usize,
    pub silhouette: f64,
    pub train_rmse: f64,
    pub layout_diagonal: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPoint {
    pub dataset: String,
    pub conversation_id: String,
    pub x: f32,
    pub y: f32,
}

/// What `train` leaves on disk next to the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutArtifact {
    pub language: String,
    /// Fallback points must be embedded exactly as the training points were.
    pub embedder: EmbedderConfig,
    pub subset: DisplaySubset,
    pub points: Vec<LayoutPoint>,
    pub report: TrainReport,
}

impl LayoutArtifact {
    pub fn coordinates(&self) -> HashMap<(String, String), (f32, f32)> {
        self.points
            .iter()
            .map(|p| ((p.dataset.clone(), p.conversation_id.clone()), (p.x, p.y)))
            .collect()
    }

    /// Compressed bundle of the subset, previews taken from `index`.
    pub fn bundle(&self, index: &CorpusIndex) -> Result<Vec<u8>, VizError> {
        let mut previews = HashMap::with_capacity(self.points.len());
        for (d, id) in self.subset.iter() {
            previews.insert((d.to_string(), id.to_string()), index.get_conversation(d, id)?.preview());
        }
        build_bundle(&self.subset, &self.coordinates(), &previews)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedLanguage {
    pub model: ProjectorModel,
    pub layout: ReferenceLayout,
    pub artifact: LayoutArtifact,
}

/// k-NN graph, layout, and projector for one point set.
pub fn fit_layout_and_projector<V: AsRef<[f32]> + Sync>(
    x: &[V],
    language: &str,
    layout: &LayoutParams,
    projector: &ProjectorParams,
) -> Result<(ReferenceLayout, ProjectorModel), ProjectionError> {
    layout.validate()?;
    let graph = knn_graph(x, layout.k_neighbors)?;
    let reference = optimize_layout(x, &graph, layout)?;
    let model = fit_projector(x, &reference, language, projector)?;
    Ok((reference, model))
}

pub fn train_language(
    corpus: &[ConversationRecord],
    language: &str,
    cfg: &TrainConfig,
) -> Result<TrainedLanguage, TrainError> {
    let canonical = corpus
        .iter()
        .find(|r| r.language.eq_ignore_ascii_case(language))
        .map(|r| r.language.clone())
        .ok_or_else(|| TrainError::UnknownLanguage(language.to_string()))?;
    let mut subset = select_display_subset(corpus, &canonical, cfg.n_per_dataset, cfg.subset_seed)?;
    let embedder = Embedder::new(cfg.embedder.clone())?;
    let members = subset.records(corpus);
    let vectors = embedder.embed_batch(&members)?;

    let mut keep = Vec::with_capacity(members.len());
    let mut x = Vec::with_capacity(members.len());
    for (r, v) in members.iter().zip(vectors) {
        if !v.is_degenerate() {
            keep.push((r.dataset.clone(), r.conversation_id.clone()));
            x.push(v.into_values());
        }
    }
    let excluded_degenerate = members.len() - keep.len();
    if excluded_degenerate > 0 {
        let kept: std::collections::HashSet<(String, String)> = keep.iter().cloned().collect();
        subset.retain(|d, id| kept.contains(&(d.to_string(), id.to_string())));
    }
    if x.len() <= cfg.layout.k_neighbors {
        return Err(TrainError::TooFewPoints {
            n: x.len(),
            k: cfg.layout.k_neighbors,
        });
    }

    let (layout, model) = fit_layout_and_projector(&x, &canonical, &cfg.layout, &cfg.projector)?;
    let layout = layout.with_ids(keep.iter().map(|(_, id)| id.clone()).collect());
    let labels = kmeans(&x, cfg.silhouette_clusters, 50, cfg.subset_seed);
    let report = TrainReport {
        language: canonical.clone(),
        points: x.len(),
        excluded_degenerate,
        silhouette: silhouette(&layout.coords, &labels),
        train_rmse: f64::from(model.train_rmse),
        layout_diagonal: bbox_diagonal(&layout.coords),
        initial_loss: layout.loss_trace.first().copied().unwrap_or(0.0),
        final_loss: layout.loss_trace.last().copied().unwrap_or(0.0),
    };
    let points = keep
        .into_iter()
        .zip(&layout.coords)
        .map(|((dataset, conversation_id), c)| LayoutPoint {
            dataset,
            conversation_id,
            x: c[0] as f32,
            y: c[1] as f32,
        })
        .collect();
    Ok(TrainedLanguage {
        model,
        artifact: LayoutArtifact {
            language: canonical,
            embedder: cfg.embedder.clone(),
            subset,
            points,
            report,
        },
        layout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic_corpus, uniform_topic_mix};

    fn quick() -> TrainConfig {
        TrainConfig {
            embedder: EmbedderConfig::local(64),
            layout: LayoutParams { epochs: 30, ..Default::default() },
            projector: ProjectorParams { epochs: 30, ..Default::default() },
            n_per_dataset: 150,
            ..Default::default()
        }
    }

    #[test]
    fn trains_and_bundles() {
        let corpus = generate_synthetic_corpus(1_000, 5, &uniform_topic_mix()).unwrap();
        let t = train_language(&corpus, "english", &quick()).unwrap();
        assert_eq!(t.model.language, "English");
        assert_eq!(t.artifact.points.len(), t.artifact.subset.len());
        assert!(t.artifact.report.final_loss < t.artifact.report.initial_loss);
        let index = CorpusIndex::build(corpus.clone()).unwrap();
        let bundle = crate::viz::parse_bundle(&t.artifact.bundle(&index).unwrap()).unwrap();
        assert_eq!(bundle.point_count(), t.artifact.points.len());

        let again = train_language(&corpus, "English", &quick()).unwrap();
        assert_eq!(again.artifact, t.artifact);
        assert_eq!(again.model, t.model);
    }

    #[test]
    fn unknown_language() {
        let corpus = generate_synthetic_corpus(50, 5, &uniform_topic_mix()).unwrap();
        assert!(matches!(
            train_language(&corpus, "Klingon", &quick()),
            Err(TrainError::UnknownLanguage(_))
        ));
    }
}

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;
use wildvis_core::embed::Embedder;
use wildvis_core::projection::pipeline::LayoutArtifact;
use wildvis_core::projection::{decode_model, ProjectionError};
use wildvis_core::search::{read_index_file, IndexFileError, DEFAULT_PAGE_SIZE, DEFAULT_THRESHOLD, MAX_PAGE_SIZE, MAX_THRESHOLD};
use wildvis_core::viz::{CoordinateCache, VizContext, VizError};
use wildvis_core::CorpusIndex;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("index: {0}")]
    Index(#[from] IndexFileError),
    #[error("model {path}: {source}")]
    Model { path: PathBuf, source: ProjectionError },
    #[error("layout {path}: {message}")]
    Layout { path: PathBuf, message: String },
    #[error(transparent)]
    Viz(#[from] VizError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    pub index_path: PathBuf,
    /// Holds `<language>.wvpm`, `<language>.layout.json` and optionally a
    /// prebuilt `<language>.wvb1.gz` per language.
    pub models_dir: PathBuf,
    /// Coordinate cache log; `None` keeps coordinates in memory only.
    pub cache_path: Option<PathBuf>,
    /// Allowed browser origin; `None` allows any.
    pub cors_origin: Option<String>,
    pub default_page_size: u32,
    pub default_threshold: u32,
}

impl ApiConfig {
    pub fn new(bind: SocketAddr, index_path: PathBuf, models_dir: PathBuf) -> Self {
        Self {
            bind,
            index_path,
            models_dir,
            cache_path: None,
            cors_origin: None,
            default_page_size: DEFAULT_PAGE_SIZE,
            default_threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<(), LoadError> {
        if !(1..=MAX_PAGE_SIZE).contains(&self.default_page_size) {
            return Err(LoadError::Config(format!("page size must be in [1, {MAX_PAGE_SIZE}]")));
        }
        if !(1..=MAX_THRESHOLD).contains(&self.default_threshold) {
            return Err(LoadError::Config(format!("threshold must be in [1, {MAX_THRESHOLD}]")));
        }
        Ok(())
    }
}

/// File names used for one language's artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelPaths {
    pub model: PathBuf,
    pub layout: PathBuf,
    pub bundle: PathBuf,
}

pub fn model_paths(dir: &Path, language: &str) -> ModelPaths {
    let stem = language.to_lowercase();
    ModelPaths {
        model: dir.join(format!("{stem}.wvpm")),
        layout: dir.join(format!("{stem}.layout.json")),
        bundle: dir.join(format!("{stem}.wvb1.gz")),
    }
}

/// One language's embedding map: highlight context plus the bundle bytes.
pub struct LanguageMap {
    pub viz: VizContext,
    pub bundle: Vec<u8>,
    /// Strong validator, quoted.
    pub etag: String,
}

impl LanguageMap {
    pub fn new(viz: VizContext, bundle: Vec<u8>) -> Self {
        let digest = Sha256::digest(&bundle);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            viz,
            bundle,
            etag: format!("\"{hex}\""),
        }
    }
}

pub struct AppState {
    pub index: Arc<CorpusIndex>,
    /// Keyed by lowercased language.
    pub maps: HashMap<String, Arc<LanguageMap>>,
    pub config: ApiConfig,
}

impl AppState {
    pub fn new(index: Arc<CorpusIndex>, maps: Vec<LanguageMap>, config: ApiConfig) -> Self {
        let maps = maps
            .into_iter()
            .map(|m| (m.viz.language().to_lowercase(), Arc::new(m)))
            .collect();
        Self { index, maps, config }
    }

    pub fn map(&self, language: &str) -> Option<&Arc<LanguageMap>> {
        self.maps.get(&language.to_lowercase())
    }

    /// Reads the index and every language found in `models_dir`.
    pub fn load(config: ApiConfig) -> Result<Self, LoadError> {
        config.validate()?;
        let index = Arc::new(read_index_file(&config.index_path)?);
        let cache = Arc::new(match &config.cache_path {
            Some(p) => CoordinateCache::open_or_unavailable(p),
            None => CoordinateCache::in_memory(),
        });
        let mut model_files: Vec<PathBuf> = std::fs::read_dir(&config.models_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "wvpm"))
            .collect();
        model_files.sort();

        let mut maps = Vec::new();
        for path in model_files {
            let model = decode_model(&std::fs::read(&path)?).map_err(|source| LoadError::Model {
                path: path.clone(),
                source,
            })?;
            let paths = model_paths(&config.models_dir, &model.language);
            let layout_err = |message: String| LoadError::Layout {
                path: paths.layout.clone(),
                message,
            };
            let raw = std::fs::read(&paths.layout).map_err(|e| layout_err(e.to_string()))?;
            let artifact: LayoutArtifact = serde_json::from_slice(&raw).map_err(|e| layout_err(e.to_string()))?;
            let bundle = match std::fs::read(&paths.bundle) {
                Ok(b) => b,
                Err(_) => artifact.bundle(&index)?,
            };
            let embedder = Embedder::new(artifact.embedder.clone()).map_err(|e| layout_err(e.to_string()))?;
            let viz = VizContext::new(index.clone(), artifact.subset, Arc::new(model), embedder, cache.clone())?;
            tracing::info!(language = viz.language(), points = viz.subset().len(), "loaded embedding map");
            maps.push(LanguageMap::new(viz, bundle));
        }
        Ok(Self::new(index, maps, config))
    }
}

//! Write-once coordinate cache keyed by (dataset, conversation id, model
//! version), persisted as an append-only JSON-lines log.
//!
//! Coordinates are stored as raw f32 bit patterns so reads are bit-exact.
//! On open the log is replayed; the first record for a key wins and a torn
//! final line is ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("coordinate cache unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub dataset: String,
    pub conversation_id: String,
    pub model_version: u64,
}

impl CacheKey {
    pub fn new(dataset: &str, conversation_id: &str, model_version: u64) -> Self {
        Self {
            dataset: dataset.to_string(),
            conversation_id: conversation_id.to_string(),
            model_version,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    d: String,
    i: String,
    v: u64,
    x: u32,
    y: u32,
}

enum Store {
    Memory,
    Log(Mutex<File>),
    Unavailable(String),
}

pub struct CoordinateCache {
    map: Mutex<HashMap<CacheKey, (f32, f32)>>,
    store: Store,
    path: Option<PathBuf>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl std::fmt::Debug for CoordinateCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoordinateCache")
            .field("path", &self.path)
            .field("len", &self.len())
            .finish()
    }
}

impl CoordinateCache {
    fn with_store(store: Store, map: HashMap<CacheKey, (f32, f32)>, path: Option<PathBuf>) -> Self {
        Self {
            map: Mutex::new(map),
            store,
            path,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Non-persistent cache with the same write-once semantics.
    pub fn in_memory() -> Self {
        Self::with_store(Store::Memory, HashMap::new(), None)
    }

    /// A cache whose every operation fails, for callers that could not open
    /// the real one.
    pub fn unavailable(reason: impl Into<String>) -> Self {
        Self::with_store(Store::Unavailable(reason.into()), HashMap::new(), None)
    }

    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let err = |e: std::io::Error| CacheError::Unavailable(format!("{}: {e}", path.display()));
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(err)?);
            for line in reader.lines() {
                let line = line.map_err(err)?;
                let Ok(rec) = serde_json::from_str::<LogLine>(&line) else {
                    continue;
                };
                map.entry(CacheKey {
                    dataset: rec.d,
                    conversation_id: rec.i,
                    model_version: rec.v,
                })
                .or_insert((f32::from_bits(rec.x), f32::from_bits(rec.y)));
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        // finish a torn last line so the next record starts clean
        if file.metadata().map_err(err)?.len() > 0 {
            let bytes = std::fs::read(path).map_err(err)?;
            if bytes.last() != Some(&b'\n') {
                file.write_all(b"\n").map_err(err)?;
            }
        }
        Ok(Self::with_store(Store::Log(Mutex::new(file)), map, Some(path.to_path_buf())))
    }

    /// Opens `path`, or falls back to [`CoordinateCache::unavailable`].
    pub fn open_or_unavailable(path: &Path) -> Self {
        Self::open(path).unwrap_or_else(|e| {
            tracing::warn!("{e}; coordinates will be computed without caching");
            Self::unavailable(e.to_string())
        })
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<(f32, f32)>, CacheError> {
        if let Store::Unavailable(reason) = &self.store {
            return Err(CacheError::Unavailable(reason.clone()));
        }
        let found = self.map.lock().unwrap().get(key).copied();
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        Ok(found)
    }

    /// Stores `value` unless the key already has one; returns the value the
    /// cache holds for the key afterwards.
    pub fn put_once(&self, key: CacheKey, value: (f32, f32)) -> Result<(f32, f32), CacheError> {
        let mut map = self.map.lock().unwrap();
        if let Some(&existing) = map.get(&key) {
            return Ok(existing);
        }
        match &self.store {
            Store::Unavailable(reason) => return Err(CacheError::Unavailable(reason.clone())),
            Store::Memory => {}
            Store::Log(file) => {
                let mut line = serde_json::to_string(&LogLine {
                    d: key.dataset.clone(),
                    i: key.conversation_id.clone(),
                    v: key.model_version,
                    x: value.0.to_bits(),
                    y: value.1.to_bits(),
                })
                .expect("cache line serializes");
                line.push('\n');
                let mut f = file.lock().unwrap();
                f.write_all(line.as_bytes())
                    .and_then(|_| f.flush())
                    .map_err(|e| CacheError::Unavailable(e.to_string()))?;
            }
        }
        map.insert(key, value);
        Ok(value)
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.map.lock().unwrap().contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn keys(&self) -> Vec<CacheKey> {
        self.map.lock().unwrap().keys().cloned().collect()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_once_and_persisted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coords.log");
        let k = CacheKey::new("wildchat", "c1", 7);
        {
            let c = CoordinateCache::open(&path).unwrap();
            assert_eq!(c.get(&k).unwrap(), None);
            assert_eq!(c.put_once(k.clone(), (1.5, f32::MIN_POSITIVE)).unwrap(), (1.5, f32::MIN_POSITIVE));
            assert_eq!(c.put_once(k.clone(), (9.0, 9.0)).unwrap(), (1.5, f32::MIN_POSITIVE));
            assert_eq!(c.hits(), 0);
            assert_eq!(c.misses(), 1);
        }
        let c = CoordinateCache::open(&path).unwrap();
        assert_eq!(c.get(&k).unwrap(), Some((1.5, f32::MIN_POSITIVE)));
        assert_eq!(c.get(&CacheKey::new("wildchat", "c1", 8)).unwrap(), None);
        assert_eq!(c.hits(), 1);
    }

    #[test]
    fn torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coords.log");
        {
            let c = CoordinateCache::open(&path).unwrap();
            c.put_once(CacheKey::new("d", "a", 1), (1.0, 2.0)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"d\":\"d\",\"i\":\"b\"").unwrap();
        drop(f);
        let c = CoordinateCache::open(&path).unwrap();
        assert_eq!(c.len(), 1);
        c.put_once(CacheKey::new("d", "b", 1), (3.0, 4.0)).unwrap();
        drop(c);
        assert_eq!(CoordinateCache::open(&path).unwrap().len(), 2);
    }

    #[test]
    fn unavailable_cache_errors() {
        let c = CoordinateCache::unavailable("disk gone");
        let k = CacheKey::new("d", "a", 1);
        assert!(c.get(&k).is_err());
        assert!(c.put_once(k, (0.0, 0.0)).is_err());
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing-dir").join("coords.log");
        assert!(CoordinateCache::open(&bad).is_err());
    }
}

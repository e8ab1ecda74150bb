//! Append-only JSONL response cache.

use super::GatewayError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One cached backend response, keyed by
/// `digest(model_id, rendered prompt, schema_id)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub raw: String,
    pub timestamp: String,
    pub attempts: u32,
}

/// In-memory cache mirrored to an append-only JSONL file. The first entry
/// written for a key wins; identical keys always return identical responses.
#[derive(Debug, Default)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: HashMap<String, CacheEntry>,
}

impl ResponseCache {
    /// In-memory only.
    pub fn ephemeral() -> Self {
        Self::default()
    }

    /// Backed by `path`; existing entries are loaded, the file is created on
    /// first insert.
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let content = std::fs::read_to_string(path)
                .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display())))?;
            for (i, line) in content.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry = serde_json::from_str(line).map_err(|e| {
                    GatewayError::Cache(format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                entries.entry(entry.key.clone()).or_insert(entry);
            }
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            entries,
        })
    }

    pub fn get(&self, key: &str) -> Option<&CacheEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, entry: CacheEntry) -> Result<(), GatewayError> {
        if self.entries.contains_key(&entry.key) {
            return Ok(());
        }
        if let Some(path) = &self.path {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| GatewayError::Cache(format!("{}: {e}", parent.display())))?;
            }
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display())))?;
            let line = serde_json::to_string(&entry)
                .map_err(|e| GatewayError::Cache(e.to_string()))?;
            writeln!(file, "{line}")
                .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display())))?;
        }
        self.entries.insert(entry.key.clone(), entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(key: &str, raw: &str) -> CacheEntry {
        CacheEntry {
            key: key.into(),
            raw: raw.into(),
            timestamp: "1970-01-01T00:00:00Z".into(),
            attempts: 1,
        }
    }

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let mut cache = ResponseCache::open(&path).unwrap();
            cache.insert(entry("k1", "r1")).unwrap();
            cache.insert(entry("k2", "r2")).unwrap();
        }
        let cache = ResponseCache::open(&path).unwrap();
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.get("k1").unwrap().raw, "r1");
    }

    #[test]
    fn first_write_wins_for_duplicate_keys() {
        let mut cache = ResponseCache::ephemeral();
        cache.insert(entry("k", "first")).unwrap();
        cache.insert(entry("k", "second")).unwrap();
        assert_eq!(cache.get("k").unwrap().raw, "first");
        assert_eq!(cache.len(), 1);
    }
}

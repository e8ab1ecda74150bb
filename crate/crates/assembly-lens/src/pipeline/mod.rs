//! Pipeline orchestration: tool configuration, run manifests, and the
//! file-based stage functions behind the CLI subcommands.
//!
//! Every stage reads its inputs from disk, writes its artifacts plus a
//! [`RunManifest`] recording models, templates, seeds, digests, and cache
//! counters, and can therefore be rerun and diffed in isolation.

mod stages;

pub use stages::{
    record_heuristic_script, run_dedup, run_embed, run_end_to_end, run_eval, run_extract,
    run_gaps, run_ingest, run_map, run_profile, run_report, run_votes, EvalArgs, GapSpace,
    StageOutcome,
};

use crate::corpus::CorpusManifest;
use crate::error::Error;
use crate::gateway::{BackendConfig, Gateway};
use crate::space::TsneConfig;
use crate::util::{self, Clock};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Paper-anchored pipeline defaults: 10-turn batches with 10 turns of
/// context, a 0.5 confidence floor, the 100 most distant suggestions, and a
/// 0.95 dedup threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineDefaults {
    pub batch_size: usize,
    pub context_size: usize,
    pub min_confidence: f64,
    pub gap_k: usize,
    pub dedup_threshold: f64,
    pub suggestion_template: String,
    pub evidence_template: String,
    pub max_retries: u32,
    pub include_nondelegate_suggestions: bool,
    pub tsne: TsneConfig,
}

impl Default for PipelineDefaults {
    fn default() -> Self {
        Self {
            batch_size: 10,
            context_size: 10,
            min_confidence: 0.5,
            gap_k: 100,
            dedup_threshold: 0.95,
            suggestion_template: "suggestions-v2-final".into(),
            evidence_template: "evidence-v4-final".into(),
            max_retries: 2,
            include_nondelegate_suggestions: false,
            tsne: TsneConfig::default(),
        }
    }
}

/// Top-level tool configuration. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolConfig {
    pub corpus_manifest: PathBuf,
    pub backend: BackendConfig,
    #[serde(default)]
    pub pipeline: PipelineDefaults,
    pub out_dir: PathBuf,
}

impl ToolConfig {
    pub fn from_path(path: &Path) -> Result<ToolConfig, Error> {
        let bytes = std::fs::read(path)?;
        let mut config: ToolConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // Relative paths resolve against the config file's directory.
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.corpus_manifest = resolve(base, &config.corpus_manifest);
        config.out_dir = resolve(base, &config.out_dir);
        if let Some(mock) = &mut config.backend.mock {
            if let Some(fixture) = &mock.fixture {
                mock.fixture = Some(resolve(base, fixture));
            }
        }
        if let Some(cache) = &config.backend.cache_path {
            config.backend.cache_path = Some(resolve(base, cache));
        }
        Ok(config)
    }

    /// Stable digest of the analysis-relevant configuration. The output
    /// directory is excluded so runs into different directories stay
    /// byte-comparable.
    pub fn digest(&self) -> String {
        let mut normalized = self.clone();
        normalized.out_dir = PathBuf::new();
        let json = serde_json::to_string(&normalized).expect("config serializes");
        util::digest_parts(&["tool-config", &json])
    }

    /// Cache file path: explicit from the backend config, or
    /// `<out_dir>/cache.jsonl`.
    pub fn cache_path(&self) -> PathBuf {
        self.backend
            .cache_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("cache.jsonl"))
    }

    /// Build a gateway honoring the resolved cache path.
    pub fn gateway(&self) -> Result<Gateway, Error> {
        let mut backend = self.backend.clone();
        backend.cache_path = Some(self.cache_path());
        Ok(Gateway::from_config(&backend)?)
    }

    /// Timestamp source: fixed epoch for mock runs, wall clock for live.
    pub fn clock(&self) -> Clock {
        match self.backend.kind {
            crate::gateway::BackendKind::Mock => Clock::Fixed(0),
            crate::gateway::BackendKind::Live => Clock::Wall,
        }
    }

    /// Every corpus file the manifest references, manifest included.
    pub fn corpus_files(&self) -> Result<Vec<PathBuf>, Error> {
        let manifest = CorpusManifest::from_path(&self.corpus_manifest)?;
        let base = self
            .corpus_manifest
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        let mut files = vec![self.corpus_manifest.clone()];
        for t in &manifest.transcripts {
            files.push(resolve(&base, Path::new(&t.path)));
        }
        for v in &manifest.votes {
            files.push(resolve(&base, Path::new(v)));
        }
        for l in &manifest.labels {
            files.push(resolve(&base, Path::new(l)));
        }
        Ok(files)
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Path plus content digest, as recorded in run manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<FileDigest, Error> {
        let bytes = std::fs::read(path)?;
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256: util::digest_bytes(&bytes),
        })
    }

    /// Like [`FileDigest::of`], but paths under `base` are recorded
    /// relative to it.
    pub fn of_relative(path: &Path, base: &Path) -> Result<FileDigest, Error> {
        let mut digest = FileDigest::of(path)?;
        if let Ok(rel) = path.strip_prefix(base) {
            digest.path = rel.display().to_string();
        }
        Ok(digest)
    }
}

/// Machine-readable record of one pipeline run: enough to re-execute it
/// byte-identically against the same cache or fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub backend_kind: String,
    pub chat_model: String,
    pub embed_model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub attempts_total: u64,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    /// Atomic write: serialize to a sibling temp file, then rename over the
    /// target.
    pub fn write_atomic(&self, path: &Path) -> Result<(), Error> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("json.tmp");
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&tmp, json.as_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<RunManifest, Error> {
        let bytes = std::fs::read(path)?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        let json = r#"{
            "corpus_manifest": "m.json",
            "backend": {"kind": "mock"},
            "out_dir": "out",
            "mystery": 1
        }"#;
        let parsed: Result<ToolConfig, _> = serde_json::from_str(json);
        assert!(parsed.is_err());
    }

    #[test]
    fn defaults_match_anchored_values() {
        let d = PipelineDefaults::default();
        assert_eq!(d.batch_size, 10);
        assert_eq!(d.context_size, 10);
        assert_eq!(d.min_confidence, 0.5);
        assert_eq!(d.gap_k, 100);
        assert_eq!(d.dedup_threshold, 0.95);
        assert_eq!(d.tsne.perplexity, 30.0);
        assert_eq!(d.tsne.learning_rate, 200.0);
        assert_eq!(d.tsne.early_exaggeration, 12.0);
        assert_eq!(d.tsne.exaggeration_iters, 250);
        assert_eq!(d.tsne.iterations, 1000);
    }

    #[test]
    fn manifest_round_trips_through_atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = RunManifest {
            command: "extract".into(),
            config_digest: "abc".into(),
            backend_kind: "mock".into(),
            chat_model: "mock-chat".into(),
            embed_model: "mock-embed-64".into(),
            template_id: Some("suggestions-v2-final".into()),
            schema_id: Some("suggestion-batch-v1".into()),
            seed: None,
            inputs: vec![],
            outputs: vec![],
            cache_hits: 0,
            cache_misses: 3,
            attempts_total: 3,
            started_at: "1970-01-01T00:00:00Z".into(),
            finished_at: "1970-01-01T00:00:00Z".into(),
        };
        let path = dir.path().join("manifests/extract.json");
        manifest.write_atomic(&path).unwrap();
        assert_eq!(RunManifest::from_path(&path).unwrap(), manifest);
        assert!(!path.with_extension("json.tmp").exists());
    }
}

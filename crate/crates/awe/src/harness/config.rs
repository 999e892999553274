use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DEFAULT_MIN_CHARS, DEFAULT_MIN_DURATION_S};
use crate::embed::{PoolingMethod, ScaleMode};
use crate::error::{Error, Result};
use crate::samediff::SameDiffResult;

fn default_pooling() -> PoolingMethod {
    PoolingMethod::Mean
}

fn default_true() -> bool {
    true
}

fn default_min_chars() -> usize {
    DEFAULT_MIN_CHARS
}

fn default_min_duration() -> f64 {
    DEFAULT_MIN_DURATION_S
}

/// One experiment: which features, which words, and how to embed them.
///
/// Read from a single JSON document and echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub feature_archive_path: PathBuf,
    pub alignment_path: PathBuf,
    /// Informational; each layer lives in its own archive file.
    #[serde(default)]
    pub layer_tag: String,
    #[serde(default = "default_pooling")]
    pub pooling: PoolingMethod,
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub scale_mode: ScaleMode,
    #[serde(default)]
    pub pca_dim: Option<usize>,
    #[serde(default = "default_min_chars")]
    pub min_chars: usize,
    #[serde(default = "default_min_duration")]
    pub min_duration_s: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            feature_archive_path: PathBuf::new(),
            alignment_path: PathBuf::new(),
            layer_tag: String::new(),
            pooling: default_pooling(),
            normalize: true,
            scale_mode: ScaleMode::default(),
            pca_dim: None,
            min_chars: DEFAULT_MIN_CHARS,
            min_duration_s: DEFAULT_MIN_DURATION_S,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn new(
        feature_archive_path: impl Into<PathBuf>,
        alignment_path: impl Into<PathBuf>,
    ) -> Self {
        ExperimentConfig {
            feature_archive_path: feature_archive_path.into(),
            alignment_path: alignment_path.into(),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Load a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = ExperimentConfig::from_json(&text)
            .map_err(|e| e.context(format!("config {}", path.display())))?;
        if let Some(dir) = path.parent() {
            config.resolve_relative_to(dir);
        }
        Ok(config)
    }

    pub fn resolve_relative_to(&mut self, dir: &Path) {
        for p in [&mut self.feature_archive_path, &mut self.alignment_path] {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pooling
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.pca_dim == Some(0) {
            return Err(Error::Config("pca_dim must be at least 1".into()));
        }
        if !(self.min_duration_s.is_finite() && self.min_duration_s >= 0.0) {
            return Err(Error::Config(format!(
                "min_duration_s must be a non-negative number, got {}",
                self.min_duration_s
            )));
        }
        Ok(())
    }

    /// Final embedding length for frames of width `frame_dim`.
    pub fn embedding_dim(&self, frame_dim: usize) -> usize {
        self.pooling.output_dim(self.pca_dim.unwrap_or(frame_dim))
    }

    /// Short human-readable identifier for logs and summaries.
    pub fn label(&self) -> String {
        let pca = self
            .pca_dim
            .map_or("full".to_string(), |k| format!("pca{k}"));
        let norm = if self.normalize { "norm" } else { "raw" };
        let layer = if self.layer_tag.is_empty() {
            self.feature_archive_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        } else {
            self.layer_tag.clone()
        };
        format!("{layer}/{}/{norm}/{pca}", self.pooling)
    }
}

/// The outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub result: SameDiffResult,
    pub embedding_dim: usize,
    pub n_tokens: usize,
    pub n_types: usize,
}

impl ResultRecord {
    /// The record as JSON with the wall-clock field removed, for comparing
    /// runs.
    pub fn metrics_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(r) = value.get_mut("result").and_then(|r| r.as_object_mut()) {
            r.remove("wall_time_s");
        }
        Ok(serde_json::to_string(&value)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(
            r#"{"feature_archive_path": "a.awef", "alignment_path": "a.tsv"}"#,
        )
        .unwrap();
        assert_eq!(c.pooling, PoolingMethod::Mean);
        assert!(c.normalize);
        assert_eq!(c.min_chars, 5);
        assert_eq!(c.min_duration_s, 0.5);
        assert_eq!(c.embedding_dim(1024), 1024);
    }

    #[test]
    fn dimension_bookkeeping() {
        let mut c = ExperimentConfig {
            pooling: PoolingMethod::Subsample { n_samples: 10 },
            pca_dim: Some(13),
            ..Default::default()
        };
        assert_eq!(c.embedding_dim(1024), 130);
        c.pca_dim = None;
        assert_eq!(c.embedding_dim(1024), 10240);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"feature_archive_path": "a", "alignment_path": "b", "pca_dim": 0}"#,
            r#"{"feature_archive_path": "a", "alignment_path": "b", "pooling": {"kind": "subsample", "n_samples": 0}}"#,
            r#"{"feature_archive_path": "a", "alignment_path": "b", "min_duration_s": -1}"#,
            r#"{"feature_archive_path": "a", "alignment_path": "b", "colour": "red"}"#,
            r#"{"alignment_path": "b"}"#,
        ];
        for text in bad {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(
            &path,
            r#"{"feature_archive_path": "x.awef", "alignment_path": "/abs/x.tsv"}"#,
        )
        .unwrap();
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.feature_archive_path, dir.path().join("x.awef"));
        assert_eq!(c.alignment_path, PathBuf::from("/abs/x.tsv"));
    }
}

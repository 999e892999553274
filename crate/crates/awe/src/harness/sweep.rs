//! Grids of experiments over layers, pooling, normalization and PCA size.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ResultRecord};
use super::run::run_experiment_with;
use crate::embed::PoolingMethod;
use crate::error::{Error, Result};
use crate::samediff::EvalOptions;

/// One model layer, stored as its own archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerArchive {
    pub layer_tag: String,
    pub feature_archive_path: PathBuf,
}

/// Values to sweep per field. An empty axis keeps the base config's value.
///
/// Combinations are enumerated with `layers` outermost, then `pooling`,
/// `normalize`, and `pca_dim` innermost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub layers: Vec<LayerArchive>,
    #[serde(default)]
    pub pooling: Vec<PoolingMethod>,
    #[serde(default)]
    pub normalize: Vec<bool>,
    #[serde(default)]
    pub pca_dim: Vec<Option<usize>>,
}

impl SweepAxes {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut axes: SweepAxes = serde_json::from_str(&text)
            .map_err(|e| Error::from(e).context(format!("axes {}", path.display())))?;
        if let Some(dir) = path.parent() {
            for l in &mut axes.layers {
                if l.feature_archive_path.is_relative() {
                    l.feature_archive_path = dir.join(&l.feature_archive_path);
                }
            }
        }
        Ok(axes)
    }

    /// The Cartesian product applied to `base`, in sweep order.
    pub fn combinations(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        fn axis<T: Clone>(values: &[T], fallback: T) -> Vec<T> {
            if values.is_empty() {
                vec![fallback]
            } else {
                values.to_vec()
            }
        }
        let base_layer = LayerArchive {
            layer_tag: base.layer_tag.clone(),
            feature_archive_path: base.feature_archive_path.clone(),
        };
        let mut out = Vec::new();
        for layer in axis(&self.layers, base_layer) {
            for &pooling in &axis(&self.pooling, base.pooling) {
                for &normalize in &axis(&self.normalize, base.normalize) {
                    for &pca_dim in &axis(&self.pca_dim, base.pca_dim) {
                        out.push(ExperimentConfig {
                            layer_tag: layer.layer_tag.clone(),
                            feature_archive_path: layer.feature_archive_path.clone(),
                            pooling,
                            normalize,
                            pca_dim,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

/// One cell of a sweep. Failures are kept, not propagated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub index: usize,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub record: Option<ResultRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SweepEntry {
    pub fn is_ok(&self) -> bool {
        self.record.is_some()
    }

    pub fn average_precision(&self) -> Option<f64> {
        self.record.as_ref().map(|r| r.result.average_precision)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Combinations run concurrently; 0 uses the ambient rayon pool.
    pub workers: usize,
    pub eval: EvalOptions,
}

/// Run every combination. The output is in sweep order whatever the
/// completion order.
pub fn sweep(
    base: &ExperimentConfig,
    axes: &SweepAxes,
    opts: SweepOptions,
) -> Result<Vec<SweepEntry>> {
    let configs = axes.combinations(base);
    let run_all = || {
        configs
            .into_par_iter()
            .enumerate()
            .map(|(index, config)| {
                let outcome = run_experiment_with(&config, opts.eval);
                let (record, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => {
                        log::error!("sweep entry {index} ({}) failed: {e}", config.label());
                        (None, Some(e.to_string()))
                    }
                };
                SweepEntry {
                    index,
                    config,
                    record,
                    error,
                }
            })
            .collect::<Vec<_>>()
    };
    if opts.workers == 0 {
        return Ok(run_all());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| {
            Error::Argument(format!("cannot build a {}-thread pool: {e}", opts.workers))
        })?;
    Ok(pool.install(run_all))
}

/// The successful entry with the highest AP; the earliest wins ties.
pub fn select_best(entries: &[SweepEntry]) -> Option<&SweepEntry> {
    let mut best: Option<&SweepEntry> = None;
    for e in entries {
        if let Some(ap) = e.average_precision() {
            if best
                .and_then(|b| b.average_precision())
                .is_none_or(|b| ap > b)
            {
                best = Some(e);
            }
        }
    }
    best
}

/// One JSON object per line, in sweep order.
pub fn entries_jsonl(entries: &[SweepEntry]) -> Result<String> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Summary table, one row per combination.
pub fn summary_csv(entries: &[SweepEntry]) -> String {
    let mut out = String::from(
        "index,layer_tag,pooling,normalize,pca_dim,embedding_dim,n_tokens,n_types,average_precision,auc_roc,status,error\n",
    );
    for e in entries {
        let c = &e.config;
        let pca = c.pca_dim.map(|k| k.to_string()).unwrap_or_default();
        let (dim, tokens, types, ap, auc) = match &e.record {
            Some(r) => (
                r.embedding_dim.to_string(),
                r.n_tokens.to_string(),
                r.n_types.to_string(),
                r.result.average_precision.to_string(),
                r.result.auc_roc.to_string(),
            ),
            None => Default::default(),
        };
        let status = if e.is_ok() { "ok" } else { "error" };
        writeln!(
            out,
            "{},{},{},{},{},{dim},{tokens},{types},{ap},{auc},{status},{}",
            e.index,
            csv_field(&c.layer_tag),
            c.pooling,
            c.normalize,
            pca,
            csv_field(e.error.as_deref().unwrap_or("")),
        )
        .unwrap();
    }
    out
}

use ndarray::Array2;

use super::config::{ExperimentConfig, ResultRecord};
use crate::corpus::{
    filter_words, parse_alignments, read_feature_archive, FeatureArchive, WordSegment,
};
use crate::embed::{embed_segments, fit_normalizer, fit_pca, segment_frames, EmbeddingSet};
use crate::error::{Error, Result};
use crate::samediff::{evaluate_with, EvalOptions};

/// Build the embedding set described by `config` from already-loaded inputs.
///
/// The normalizer and PCA are fitted on the frames of the evaluated words
/// only, PCA after normalization.
pub fn embed_corpus(
    config: &ExperimentConfig,
    archive: &FeatureArchive,
    segments: &[WordSegment],
) -> Result<EmbeddingSet> {
    config.validate()?;
    let evaluated = filter_words(segments, config.min_chars, config.min_duration_s);
    log::info!(
        "{}: {} of {} segments pass the word filter",
        config.label(),
        evaluated.len(),
        segments.len()
    );
    let raw = segment_frames(archive, &evaluated)?;

    let normalizer = if config.normalize && !raw.is_empty() {
        Some(fit_normalizer(raw.iter().cloned(), config.scale_mode)?)
    } else {
        None
    };
    let pca = match config.pca_dim {
        Some(k) if !raw.is_empty() => {
            let normalized: Option<Vec<Array2<f32>>> = normalizer
                .as_ref()
                .map(|n| raw.iter().map(|f| n.apply(*f)).collect::<Result<_>>())
                .transpose()?;
            let views: Vec<_> = match &normalized {
                Some(v) => v.iter().map(|m| m.view()).collect(),
                None => raw.clone(),
            };
            Some(fit_pca(&views, k)?)
        }
        _ => None,
    };
    Ok(embed_segments(
        archive,
        &evaluated,
        config.pooling,
        normalizer.as_ref(),
        pca.as_ref(),
    )?
    .with_meta(config.clone()))
}

/// Read the config's inputs and build its embedding set.
pub fn build_embeddings(config: &ExperimentConfig) -> Result<EmbeddingSet> {
    let archive = read_feature_archive(&config.feature_archive_path)?;
    let table = parse_alignments(&config.alignment_path)?;
    embed_corpus(config, &archive, &table.segments)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultRecord> {
    run_experiment_with(config, EvalOptions::default())
}

/// Parse, filter, fit, embed and evaluate.
pub fn run_experiment_with(config: &ExperimentConfig, opts: EvalOptions) -> Result<ResultRecord> {
    let wrap = |e: Error| e.context(format!("experiment {}", config.label()));
    let set = build_embeddings(config).map_err(wrap)?;
    let result = evaluate_with(&set, opts).map_err(wrap)?;
    Ok(ResultRecord {
        config: config.clone(),
        embedding_dim: set.dim(),
        n_tokens: set.len(),
        n_types: set.n_types(),
        result,
    })
}

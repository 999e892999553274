//! Experiment configuration, single runs, sweeps, synthetic corpora and 2-D
//! projection export.

mod config;
mod project;
mod run;
mod sweep;
mod synth;

pub use config::{ExperimentConfig, ResultRecord};
pub use project::{export_projection_2d, project_2d, projection_csv, ProjectedPoint};
pub use run::{build_embeddings, embed_corpus, run_experiment, run_experiment_with};
pub use sweep::{
    entries_jsonl, select_best, summary_csv, sweep, LayerArchive, SweepAxes, SweepEntry,
    SweepOptions,
};
pub use synth::{generate_synthetic, synth_word, SynthParams};

//! Acoustic word embeddings from frame-level speech representations.
//!
//! A word token is the run of encoder frames between its aligned start and
//! end times. [`embed`] turns that variable-length run into a fixed-length
//! vector (optionally after per-dimension normalization and PCA), and
//! [`samediff`] measures how well the vectors separate word types: every
//! pair of tokens is scored by cosine similarity, and the ranking of
//! same-word pairs above different-word pairs is summarized by average
//! precision and AUC-ROC.
//!
//! ```
//! use awe::embed::{pool, PoolingMethod};
//! use awe::samediff::evaluate;
//! use awe::EmbeddingSet;
//! use ndarray::array;
//!
//! let frames = array![[1.0f32, 3.0], [3.0, 5.0]];
//! assert_eq!(pool(frames.view(), PoolingMethod::Mean)?, vec![2.0, 4.0]);
//!
//! let set = EmbeddingSet::from_rows(
//!     vec!["a".into(), "a".into(), "b".into(), "b".into()],
//!     vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]],
//! )?;
//! assert_eq!(evaluate(&set)?.average_precision, 1.0);
//! # Ok::<(), awe::Error>(())
//! ```
//!
//! The guide in `book/` walks through each stage; its code listings are
//! compiled and run as doc-tests of this crate.

mod codec;
pub mod corpus;
pub mod embed;
mod error;
pub mod harness;
pub mod samediff;

pub use corpus::{AlignmentTable, FeatureArchive, WordSegment};
pub use embed::{EmbeddingSet, Normalizer, PcaModel, PoolingMethod};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ResultRecord};
pub use samediff::{SameDiffResult, ScoredPairs};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/pooling.md")]
    mod pooling {}
    #[doc = include_str!("../../../book/src/normalization-pca.md")]
    mod normalization_pca {}
    #[doc = include_str!("../../../book/src/same-different.md")]
    mod same_different {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}

//! Feature archives, word alignments and per-word frame slicing.

mod alignment;
mod archive;

pub use alignment::{
    filter_words, fold_word, frame_range, parse_alignments, slice_frames, write_alignments,
    AlignmentTable, WordSegment,
};
pub use archive::{
    read_feature_archive, write_feature_archive, write_manifest, FeatureArchive, ARCHIVE_MAGIC,
    ARCHIVE_VERSION, DEFAULT_FRAME_RATE_HZ,
};

/// Default minimum word length in characters for the evaluated set.
pub const DEFAULT_MIN_CHARS: usize = 5;
/// Default minimum word duration in seconds for the evaluated set.
pub const DEFAULT_MIN_DURATION_S: f64 = 0.5;

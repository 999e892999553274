//! Word alignments: `utterance_id\tword\tstart_s\tend_s` rows.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::archive::FeatureArchive;
use crate::error::{Error, Result};

/// Boundaries that land within this distance of a frame edge snap to it,
/// so `0.3 * 50.0` maps to frame 15 and not 16.
const FRAME_SNAP: f64 = 1e-6;

/// Slack on the minimum-duration comparison, so decimal times such as
/// `0.1..0.6` count as exactly half a second.
const DURATION_SLACK: f64 = 1e-9;

/// One spoken word token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSegment {
    pub utterance_id: String,
    /// Case-folded orthographic label.
    pub word: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl WordSegment {
    pub fn new(
        utterance_id: impl Into<String>,
        word: &str,
        start_s: f64,
        end_s: f64,
    ) -> Result<Self> {
        let word = fold_word(word);
        if word.is_empty() {
            return Err(Error::Argument("word label is empty".into()));
        }
        check_times(start_s, end_s).map_err(Error::Argument)?;
        Ok(WordSegment {
            utterance_id: utterance_id.into(),
            word,
            start_s,
            end_s,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Word identity: trimmed, lowercased orthography.
pub fn fold_word(word: &str) -> String {
    word.trim().to_lowercase()
}

fn check_times(start_s: f64, end_s: f64) -> std::result::Result<(), String> {
    if !start_s.is_finite() || !end_s.is_finite() {
        return Err(format!("non-finite time {start_s}..{end_s}"));
    }
    if start_s < 0.0 {
        return Err(format!("negative start time {start_s}"));
    }
    if end_s <= start_s {
        return Err(format!("end {end_s} is not after start {start_s}"));
    }
    Ok(())
}

/// All word segments of a corpus split, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentTable {
    pub segments: Vec<WordSegment>,
}

impl AlignmentTable {
    pub fn new(segments: Vec<WordSegment>) -> Self {
        AlignmentTable { segments }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segments grouped by utterance id, in first-appearance order.
    pub fn by_utterance(&self) -> Vec<(&str, Vec<&WordSegment>)> {
        let mut groups: Vec<(&str, Vec<&WordSegment>)> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for seg in &self.segments {
            let slot = *index.entry(seg.utterance_id.as_str()).or_insert_with(|| {
                groups.push((seg.utterance_id.as_str(), Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(seg);
        }
        groups
    }

    /// Parse TSV text. The first data line is treated as a header when its
    /// third field is not a number; `#` lines and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut segments = Vec::new();
        let mut seen_data = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 4 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 4 tab-separated columns, found {}", fields.len()),
                });
            }
            if fields.len() > 4 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unexpected extra columns ({} found)", fields.len()),
                });
            }
            let first = !seen_data;
            seen_data = true;
            let start_s = match fields[2].trim().parse::<f64>() {
                Ok(v) => v,
                Err(_) if first => continue,
                Err(_) => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("start time {:?} is not a number", fields[2]),
                    })
                }
            };
            let end_s = fields[3].trim().parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("end time {:?} is not a number", fields[3]),
            })?;
            let word = fold_word(fields[1]);
            if word.is_empty() {
                return Err(Error::Validation {
                    line: line_no,
                    message: "word label is empty".into(),
                });
            }
            let utterance_id = fields[0].trim();
            if utterance_id.is_empty() {
                return Err(Error::Validation {
                    line: line_no,
                    message: "utterance id is empty".into(),
                });
            }
            check_times(start_s, end_s).map_err(|message| Error::Validation {
                line: line_no,
                message,
            })?;
            segments.push(WordSegment {
                utterance_id: utterance_id.to_string(),
                word,
                start_s,
                end_s,
            });
        }
        Ok(AlignmentTable { segments })
    }

    /// Render as header-less TSV that [`AlignmentTable::parse`] reads back
    /// unchanged.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            // `{}` on f64 prints the shortest string that round-trips.
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                s.utterance_id, s.word, s.start_s, s.end_s
            )
            .unwrap();
        }
        out
    }
}

pub fn parse_alignments(path: impl AsRef<Path>) -> Result<AlignmentTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AlignmentTable::parse(&text)
}

pub fn write_alignments(table: &AlignmentTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_tsv()).map_err(|e| Error::io(path, e))
}

/// Keep the segments with at least `min_chars` characters and at least
/// `min_duration_s` seconds; both bounds inclusive, order preserved.
pub fn filter_words(
    segments: &[WordSegment],
    min_chars: usize,
    min_duration_s: f64,
) -> Vec<WordSegment> {
    segments
        .iter()
        .filter(|s| {
            s.word.chars().count() >= min_chars && s.duration_s() + DURATION_SLACK >= min_duration_s
        })
        .cloned()
        .collect()
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < FRAME_SNAP {
        r
    } else {
        x
    }
}

/// Row range `[a, b)` covered by a segment in an utterance of `n_frames`
/// frames: `a = floor(start * rate)`, `b = ceil(end * rate)`, clamped to the
/// utterance. Degenerate ranges collapse to the nearest valid frame.
pub fn frame_range(
    start_s: f64,
    end_s: f64,
    frame_rate_hz: f64,
    n_frames: usize,
) -> std::ops::Range<usize> {
    debug_assert!(n_frames >= 1);
    let t = n_frames as f64;
    let a = snap(start_s * frame_rate_hz).floor().clamp(0.0, t) as usize;
    let b = snap(end_s * frame_rate_hz).ceil().clamp(0.0, t) as usize;
    if b > a {
        a..b
    } else {
        let nearest = a.min(n_frames - 1);
        nearest..nearest + 1
    }
}

/// The frames of one word token.
pub fn slice_frames<'a>(
    archive: &'a FeatureArchive,
    seg: &WordSegment,
) -> Result<ArrayView2<'a, f32>> {
    let frames = archive
        .get(&seg.utterance_id)
        .ok_or_else(|| Error::Lookup(seg.utterance_id.clone()))?;
    let range = frame_range(
        seg.start_s,
        seg.end_s,
        archive.frame_rate_hz(),
        frames.nrows(),
    );
    Ok(frames.slice(ndarray::s![range, ..]))
}

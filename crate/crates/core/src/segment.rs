//! Structural points, development segments and context windows over a
//! token stream of length `n`.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{Screenplay, Token};

pub const NUM_STRUCTURAL_POINTS: usize = 9;
pub const NUM_SEGMENTS: usize = NUM_STRUCTURAL_POINTS - 1;
pub const DEFAULT_WINDOW_PCT: f64 = 1.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("token count must be at least 1")]
    InvalidLength,
    #[error("index {index} out of range for {n_tokens} tokens")]
    IndexOutOfRange { index: usize, n_tokens: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPartition {
    pub n_tokens: usize,
    pub sp_indices: [usize; NUM_STRUCTURAL_POINTS],
    pub segments: [Range<usize>; NUM_SEGMENTS],
}

impl SegmentPartition {
    /// Segment containing token `pos`.
    pub fn segment_of(&self, pos: usize) -> Option<usize> {
        self.segments.iter().position(|r| r.contains(&pos))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow<'a> {
    pub sp_ordinal: usize,
    pub range: Range<usize>,
    pub tokens: &'a [Token],
}

impl ContextWindow<'_> {
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }
}

/// `round(i * (n - 1) / 8)` with halves rounded up, for `i` in `0..9`.
pub fn locate_structural_points(n_tokens: usize) -> Result<[usize; NUM_STRUCTURAL_POINTS], SegmentError> {
    if n_tokens == 0 {
        return Err(SegmentError::InvalidLength);
    }
    let last = (n_tokens - 1) as u128;
    let q = NUM_SEGMENTS as u128;
    let mut out = [0; NUM_STRUCTURAL_POINTS];
    for (i, slot) in out.iter_mut().enumerate() {
        let p = i as u128 * last;
        *slot = ((2 * p + q) / (2 * q)) as usize;
    }
    Ok(out)
}

pub fn partition_segments(n_tokens: usize) -> Result<SegmentPartition, SegmentError> {
    let sp = locate_structural_points(n_tokens)?;
    let segments = std::array::from_fn(|i| {
        let end = if i == NUM_SEGMENTS - 1 { n_tokens } else { sp[i + 1] };
        sp[i]..end
    });
    Ok(SegmentPartition { n_tokens, sp_indices: sp, segments })
}

/// Half-width of a window covering `window_pct` percent of the document,
/// never below one token.
pub fn window_half_width(n_tokens: usize, window_pct: f64) -> usize {
    let h = (window_pct * n_tokens as f64 / 200.0 + 0.5).floor();
    (h as usize).max(1)
}

pub fn context_window_range(sp_index: usize, n_tokens: usize, window_pct: f64) -> Result<Range<usize>, SegmentError> {
    if sp_index >= n_tokens {
        return Err(SegmentError::IndexOutOfRange { index: sp_index, n_tokens });
    }
    let h = window_half_width(n_tokens, window_pct);
    Ok(sp_index.saturating_sub(h)..(sp_index + h + 1).min(n_tokens))
}

/// The nine structural-point windows of a screenplay, in order.
pub fn context_windows<'a>(
    s: &'a Screenplay,
    partition: &SegmentPartition,
    window_pct: f64,
) -> Result<Vec<ContextWindow<'a>>, SegmentError> {
    partition
        .sp_indices
        .iter()
        .enumerate()
        .map(|(sp_ordinal, &sp)| {
            let range = context_window_range(sp, s.tokens.len(), window_pct)?;
            Ok(ContextWindow { sp_ordinal, tokens: &s.tokens[range.clone()], range })
        })
        .collect()
}

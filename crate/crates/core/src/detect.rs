//! Peak-interest detection on a rewatch series.
//!
//! Bins are flagged when their value lies strictly above the upper Tukey fence
//! `Q3 + k * (Q3 - Q1)`. Quartiles use linear interpolation between order
//! statistics at position `q * (n - 1)`. The fence is affine-equivariant, so
//! flagging raw or min-max normalized values gives the same mask.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segment::{Segment, SegmentSource};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("cannot detect peaks in an empty series")]
    EmptySeries,
    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("fence multiplier must be >= 0, got {0}")]
    BadMultiplier(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IqrConfig {
    pub k: f64,
}

impl Default for IqrConfig {
    fn default() -> Self {
        Self { k: 1.5 }
    }
}

impl IqrConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.k >= 0.0 && self.k.is_finite() {
            Ok(())
        } else {
            Err(DetectError::BadMultiplier(self.k))
        }
    }
}

/// A detector that marks bins of anomalously high interest.
pub trait PeakDetector {
    fn flag(&self, values: &[f64]) -> Result<Vec<bool>, DetectError>;
}

impl PeakDetector for IqrConfig {
    fn flag(&self, values: &[f64]) -> Result<Vec<bool>, DetectError> {
        detect_seed_bins(values, self)
    }
}

/// Quantile of an already sorted slice, interpolating at `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fence {
    pub q1: f64,
    pub q3: f64,
    pub upper: f64,
}

pub fn upper_fence(values: &[f64], cfg: &IqrConfig) -> Result<Fence, DetectError> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(DetectError::EmptySeries);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(DetectError::NonFinite(i));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    Ok(Fence {
        q1,
        q3,
        upper: q3 + cfg.k * (q3 - q1),
    })
}

pub fn detect_seed_bins(values: &[f64], cfg: &IqrConfig) -> Result<Vec<bool>, DetectError> {
    let fence = upper_fence(values, cfg)?;
    Ok(values.iter().map(|&v| v > fence.upper).collect())
}

/// Groups maximal runs of flagged bins into `[i * bin, (j + 1) * bin)` segments
/// scored by the mean of `values` over the run.
pub fn group_seed_segments(mask: &[bool], values: &[f64], bin: f64) -> Vec<Segment> {
    group_seed_windows(mask, values, bin, bin, f64::INFINITY)
}

/// Like [`group_seed_segments`], but a flagged bin `t` stands for the whole
/// scoring window `[t * bin, t * bin + window)`. Overlapping windows are joined,
/// and segments are clipped to `duration`. The score averages `values` over the
/// flagged bins of each group.
pub fn group_seed_windows(mask: &[bool], values: &[f64], bin: f64, window: f64, duration: f64) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let start = i as f64 * bin;
        let end = (start + window).min(duration);
        let v = values.get(i).copied().unwrap_or(0.0);
        match out.last_mut() {
            Some(last) if start <= last.end => {
                last.end = last.end.max(end);
                sum += v;
                count += 1;
                last.score = sum / count as f64;
            }
            _ => {
                sum = v;
                count = 1;
                out.push(Segment::new(start, end, v, SegmentSource::V1Seed));
            }
        }
    }
    out
}

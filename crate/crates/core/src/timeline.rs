//! The rewatch-percentage timeline.
//!
//! A viewer rewatches a bin when at least two of their plays fully cover it and
//! at least one of those plays is a replay. The metric at bin `t` is the
//! percentage of the viewer base that rewatched every bin of the window
//! `[t, t + window)`; windows running past the end of the asset are truncated.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exec::{sum_counts, Parallelism};
use crate::session::{AssetInfo, IngestError, PlayMode, ViewSession};

const EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TimelineError {
    #[error("viewer base is empty")]
    EmptyBase,
    #[error("bad binning: bin={bin}, window={window} (need bin > 0 and window >= bin)")]
    BadBinning { bin: f64, window: f64 },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimelineParams {
    pub bin: f64,
    pub window: f64,
    #[serde(default)]
    pub allow_empty: bool,
}

impl Default for TimelineParams {
    fn default() -> Self {
        Self {
            bin: 1.0,
            window: 15.0,
            allow_empty: false,
        }
    }
}

impl TimelineParams {
    pub fn validate(&self) -> Result<(), TimelineError> {
        let ok = self.bin.is_finite() && self.window.is_finite() && self.bin > 0.0 && self.window >= self.bin;
        if ok {
            Ok(())
        } else {
            Err(TimelineError::BadBinning {
                bin: self.bin,
                window: self.window,
            })
        }
    }

    /// Number of bins spanned by one scoring window.
    pub fn window_bins(&self) -> usize {
        ((self.window / self.bin) - EPS).ceil().max(1.0) as usize
    }
}

/// Number of bins needed to cover `duration` at `bin` resolution.
pub fn bin_count(duration: f64, bin: f64) -> usize {
    ((duration / bin) - EPS).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewatchTimeline {
    pub asset_id: String,
    pub bin: f64,
    pub window: f64,
    pub base_size: usize,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl RewatchTimeline {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("timeline serializes")
    }

    /// Plot-ready CSV with header `bin_start_s,raw,normalized`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start_s,raw,normalized\n");
        for (i, (r, n)) in self.raw.iter().zip(&self.normalized).enumerate() {
            out.push_str(&format!("{},{},{}\n", i as f64 * self.bin, r, n));
        }
        out
    }

    /// Hex SHA-256 of the JSON export; recorded in reel provenance.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Per-bin rewatch indicator for one viewer.
pub fn viewer_rewatch_bins(session: &ViewSession, duration: f64, bin: f64) -> Vec<bool> {
    let n = bin_count(duration, bin);
    let mut cover = vec![0u32; n];
    let mut replay = vec![false; n];
    for play in &session.plays {
        let first = ((play.content_start - EPS) / bin).ceil().max(0.0) as usize;
        for t in first..n {
            let end = ((t + 1) as f64 * bin).min(duration);
            if end > play.content_end + EPS {
                break;
            }
            cover[t] += 1;
            if play.mode == PlayMode::Replay {
                replay[t] = true;
            }
        }
    }
    cover.iter().zip(&replay).map(|(&c, &r)| c >= 2 && r).collect()
}

/// Adds one to `acc[t]` for every window start `t` the viewer fully rewatched.
fn accumulate_windows(rewatched: &[bool], window_bins: usize, acc: &mut [u64]) {
    let n = rewatched.len();
    // run[t] = length of the rewatched run starting at t, computed right to left
    let mut run = 0usize;
    for t in (0..n).rev() {
        run = if rewatched[t] { run + 1 } else { 0 };
        if run > 0 && run >= window_bins.min(n - t) {
            acc[t] += 1;
        }
    }
}

pub fn compute_rewatch_timeline(
    base: &[ViewSession],
    asset: &AssetInfo,
    params: &TimelineParams,
) -> Result<RewatchTimeline, TimelineError> {
    compute_rewatch_timeline_with(base, asset, params, Parallelism::default())
}

pub fn compute_rewatch_timeline_with(
    base: &[ViewSession],
    asset: &AssetInfo,
    params: &TimelineParams,
    mode: Parallelism,
) -> Result<RewatchTimeline, TimelineError> {
    params.validate()?;
    if base.is_empty() && !params.allow_empty {
        return Err(TimelineError::EmptyBase);
    }
    for s in base {
        asset.check(s)?;
    }
    let n = bin_count(asset.duration, params.bin);
    let wb = params.window_bins();
    let counts = sum_counts(mode, base, n, |session, acc| {
        let bins = viewer_rewatch_bins(session, asset.duration, params.bin);
        accumulate_windows(&bins, wb, acc);
    });
    let base_size = base.len();
    let raw = counts
        .iter()
        .map(|&c| if base_size == 0 { 0.0 } else { 100.0 * c as f64 / base_size as f64 })
        .collect();
    Ok(RewatchTimeline {
        asset_id: asset.asset_id.clone(),
        bin: params.bin,
        window: params.window,
        base_size,
        raw,
        normalized: vec![0.0; n],
    })
}

/// Min-max scales `raw` into `normalized`; a constant series maps to zeros.
pub fn normalize(mut timeline: RewatchTimeline) -> RewatchTimeline {
    timeline.normalized = min_max(&timeline.raw);
    timeline
}

pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || hi <= lo {
        return vec![0.0; values.len()];
    }
    let range = hi - lo;
    values.iter().map(|v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
}

/// Normalized timelines for the early and late cohorts, sharing one binning.
/// Empty cohorts are allowed and yield all-zero timelines.
pub fn cohort_timelines(
    early: &[ViewSession],
    late: &[ViewSession],
    asset: &AssetInfo,
    params: &TimelineParams,
) -> Result<(RewatchTimeline, RewatchTimeline), TimelineError> {
    let params = TimelineParams {
        allow_empty: true,
        ..*params
    };
    let e = compute_rewatch_timeline(early, asset, &params)?;
    let l = compute_rewatch_timeline(late, asset, &params)?;
    Ok((normalize(e), normalize(l)))
}

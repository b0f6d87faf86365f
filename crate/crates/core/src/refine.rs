//! Post-processing of seed segments into coherent clips.
//!
//! Stages run in a fixed order: merge close segments, expand short ones,
//! snap to shots, filter by tag expression, then enforce a total-duration budget.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{covered_length, Span};
use crate::metadata::{MetadataError, MetadataTag, ShotTrack};
use crate::segment::{is_sorted_disjoint, Segment};
use crate::tagexpr::{ExprParseError, TagExpr};

#[derive(Debug, Error, PartialEq)]
pub enum RefineError {
    #[error("segments must be sorted by start and pairwise disjoint")]
    UnsortedInput,
    #[error("shot track is empty")]
    EmptyShotTrack,
    #[error(transparent)]
    ExprParse(#[from] ExprParseError),
    #[error("invalid refine config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapMode {
    #[default]
    ShotCover,
    NearestBoundary,
    None,
}

impl FromStr for SnapMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shot_cover" => Ok(Self::ShotCover),
            "nearest_boundary" => Ok(Self::NearestBoundary),
            "none" => Ok(Self::None),
            other => Err(format!("unknown snap mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub merge_gap: f64,
    pub min_len: f64,
    pub snap_mode: SnapMode,
    #[serde(default)]
    pub max_total: Option<f64>,
    pub tag_min_overlap: f64,
    #[serde(default)]
    pub tag_expr: Option<String>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            merge_gap: 5.0,
            min_len: 15.0,
            snap_mode: SnapMode::ShotCover,
            max_total: None,
            tag_min_overlap: 0.0,
            tag_expr: None,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        if !(self.merge_gap >= 0.0) {
            return Err(RefineError::BadConfig(format!("merge_gap {} must be >= 0", self.merge_gap)));
        }
        if !(self.min_len > 0.0) {
            return Err(RefineError::BadConfig(format!("min_len {} must be > 0", self.min_len)));
        }
        if let Some(m) = self.max_total {
            if !(m > 0.0) {
                return Err(RefineError::BadConfig(format!("max_total {m} must be > 0")));
            }
        }
        if !(self.tag_min_overlap >= 0.0) {
            return Err(RefineError::BadConfig("tag_min_overlap must be >= 0".into()));
        }
        if let Some(e) = &self.tag_expr {
            TagExpr::parse(e)?;
        }
        Ok(())
    }
}

/// Joins segments sorted by start whose gap is at most `gap`, overlaps included.
/// Scores combine as a duration-weighted mean; labels are unioned.
fn coalesce(segments: Vec<Segment>, gap: f64) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    let mut weight = 0.0;
    let mut weighted = 0.0;
    for seg in segments {
        match out.last_mut() {
            Some(last) if seg.start - last.end <= gap => {
                weighted += seg.score * seg.len();
                weight += seg.len();
                last.end = last.end.max(seg.end);
                last.score = if weight > 0.0 { weighted / weight } else { last.score };
                last.labels.extend(seg.labels);
            }
            _ => {
                weight = seg.len();
                weighted = seg.score * seg.len();
                out.push(seg);
            }
        }
    }
    out
}

fn sort_by_start(segments: &mut [Segment]) {
    segments.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
}

pub fn merge_close(segments: &[Segment], merge_gap: f64) -> Result<Vec<Segment>, RefineError> {
    if !is_sorted_disjoint(segments) {
        return Err(RefineError::UnsortedInput);
    }
    Ok(coalesce(segments.to_vec(), merge_gap))
}

/// Widens segments shorter than `min_len` symmetrically about their midpoint,
/// shifting inward at the asset edges, then re-merges any overlaps.
pub fn expand_short(segments: &[Segment], min_len: f64, duration: f64) -> Vec<Segment> {
    let mut expanded: Vec<Segment> = segments
        .iter()
        .map(|s| {
            if s.len() >= min_len {
                return s.clone();
            }
            let mut out = s.clone();
            if min_len >= duration {
                out.start = 0.0;
                out.end = duration;
                return out;
            }
            let mid = (s.start + s.end) / 2.0;
            let (mut start, mut end) = (mid - min_len / 2.0, mid + min_len / 2.0);
            if start < 0.0 {
                start = 0.0;
                end = min_len;
            } else if end > duration {
                end = duration;
                start = duration - min_len;
            }
            out.start = start;
            out.end = end;
            out
        })
        .collect();
    sort_by_start(&mut expanded);
    coalesce(expanded, 0.0)
}

/// Picks the boundary nearest to `t`; ties go to the lower boundary when
/// `prefer_lower`, else to the upper one.
fn nearest_boundary(boundaries: &[f64], t: f64, prefer_lower: bool) -> f64 {
    let idx = boundaries.partition_point(|&b| b < t);
    if idx == 0 {
        return boundaries[0];
    }
    if idx == boundaries.len() {
        return boundaries[idx - 1];
    }
    let (lo, hi) = (boundaries[idx - 1], boundaries[idx]);
    let (dl, dh) = (t - lo, hi - t);
    if dl < dh || (dl == dh && prefer_lower) {
        lo
    } else {
        hi
    }
}

/// The shot containing `t`; a `t` exactly on an interior boundary takes both neighbours.
fn containing_shots(shots: &ShotTrack, t: f64) -> Span {
    let b = shots.boundaries();
    match b.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) if i > 0 && i + 1 < b.len() => Span::new(b[i - 1], b[i + 1]),
        _ => shots.shot(shots.shot_index_at(t)),
    }
}

fn snap_one(seg: &Segment, shots: &ShotTrack, mode: SnapMode) -> Option<Span> {
    let (lo, hi) = (shots.first(), shots.last());
    let (start, end) = (seg.start.max(lo), seg.end.min(hi));
    if end <= start {
        return None;
    }
    let b = shots.boundaries();
    match mode {
        SnapMode::None => Some(seg.span()),
        SnapMode::ShotCover => {
            let first = b.partition_point(|&x| x <= start) - 1;
            let last = b.partition_point(|&x| x < end) - 1;
            Some(Span::new(b[first], b[last + 1]))
        }
        SnapMode::NearestBoundary => {
            let s = nearest_boundary(b, start, true);
            let e = nearest_boundary(b, end, false);
            if e > s {
                Some(Span::new(s, e))
            } else {
                Some(containing_shots(shots, (start + end) / 2.0))
            }
        }
    }
}

pub fn snap_to_shots(segments: &[Segment], shots: &ShotTrack, mode: SnapMode) -> Vec<Segment> {
    if mode == SnapMode::None {
        return segments.to_vec();
    }
    let mut snapped: Vec<Segment> = segments
        .iter()
        .filter_map(|s| {
            snap_one(s, shots, mode).map(|span| Segment {
                start: span.start,
                end: span.end,
                ..s.clone()
            })
        })
        .collect();
    sort_by_start(&mut snapped);
    coalesce(snapped, 0.0)
}

/// Snaps using an optional track; a track of fewer than two boundaries is an error.
pub fn snap_with(segments: &[Segment], shots: Option<&[f64]>, mode: SnapMode) -> Result<Vec<Segment>, RefineError> {
    match shots {
        None => Ok(segments.to_vec()),
        Some([]) => Err(RefineError::EmptyShotTrack),
        Some(b) => Ok(snap_to_shots(segments, &ShotTrack::new(b.to_vec())?, mode)),
    }
}

/// Keeps segments whose overlap with the tags satisfies `expr`. An atom holds
/// when the segment's overlap with the union of matching tags exceeds `min_overlap`.
pub fn filter_by_tags(segments: &[Segment], expr: &TagExpr, tags: &[MetadataTag], min_overlap: f64) -> Vec<Segment> {
    segments
        .iter()
        .filter(|seg| {
            let span = seg.span();
            expr.eval(&mut |category, label| {
                let matching = tags.iter().filter(|t| t.matches(category, label)).map(MetadataTag::span);
                covered_length(&span, matching) > min_overlap
            })
        })
        .cloned()
        .collect()
}

/// Drops the lowest-scoring segments (later start first on ties) until the
/// total duration fits `max_total`. Survivors keep chronological order.
pub fn enforce_budget(segments: &[Segment], max_total: f64) -> Vec<Segment> {
    let mut total: f64 = segments.iter().map(Segment::len).sum();
    if total <= max_total {
        return segments.to_vec();
    }
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&segments[a], &segments[b]);
        x.score.total_cmp(&y.score).then(y.start.total_cmp(&x.start))
    });
    let mut dropped = vec![false; segments.len()];
    for i in order {
        if total <= max_total {
            break;
        }
        dropped[i] = true;
        total -= segments[i].len();
    }
    segments
        .iter()
        .zip(dropped)
        .filter(|(_, d)| !d)
        .map(|(s, _)| s.clone())
        .collect()
}

/// Merge and expand; the pipeline state before shot snapping.
pub fn pre_snap(seeds: &[Segment], duration: f64, cfg: &RefineConfig) -> Result<Vec<Segment>, RefineError> {
    cfg.validate()?;
    let merged = merge_close(seeds, cfg.merge_gap)?;
    Ok(expand_short(&merged, cfg.min_len, duration))
}

/// Runs the full refinement pipeline over sorted, disjoint seeds.
pub fn refine(
    seeds: &[Segment],
    duration: f64,
    shots: Option<&ShotTrack>,
    tags: &[MetadataTag],
    cfg: &RefineConfig,
) -> Result<Vec<Segment>, RefineError> {
    let mut segs = pre_snap(seeds, duration, cfg)?;
    if let Some(track) = shots {
        segs = snap_to_shots(&segs, track, cfg.snap_mode);
    }
    if let Some(src) = &cfg.tag_expr {
        let expr = TagExpr::parse(src)?;
        segs = filter_by_tags(&segs, &expr, tags, cfg.tag_min_overlap);
    }
    if let Some(budget) = cfg.max_total {
        segs = enforce_budget(&segs, budget);
    }
    Ok(segs)
}

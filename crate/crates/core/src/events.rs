//! Event-partition ranking: score externally supplied events (points, plays)
//! by their mean normalized rewatch value and keep the top `k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metadata::ShotTrack;
use crate::refine::{expand_short, merge_close, snap_to_shots, RefineConfig, RefineError, SnapMode};
use crate::segment::{Segment, SegmentSource};
use crate::timeline::RewatchTimeline;

#[derive(Debug, Error, PartialEq)]
pub enum EventError {
    #[error("event `{label}` [{start}, {end}) lies outside the timeline [0, {limit})")]
    EventOutOfRange { label: String, start: f64, end: f64, limit: f64 },
    #[error("invalid event partition: {0}")]
    BadPartition(String),
    #[error("top-k requires k >= 1")]
    ZeroK,
    #[error(transparent)]
    Refine(#[from] RefineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub start: f64,
    pub end: f64,
    pub label: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

/// Non-overlapping events sorted by start: `{"events":[...]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventPartition {
    pub events: Vec<Event>,
}

impl EventPartition {
    pub fn new(events: Vec<Event>) -> Result<Self, EventError> {
        let p = Self { events };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EventError> {
        for e in &self.events {
            if !(e.end > e.start) {
                return Err(EventError::BadPartition(format!("event `{}` has end <= start", e.label)));
            }
        }
        if let Some(w) = self.events.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(EventError::BadPartition(format!(
                "events `{}` and `{}` overlap or are out of order",
                w[0].label, w[1].label
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEvent {
    pub event: Event,
    pub score: f64,
}

/// Scores an event as the mean normalized value of the bins whose start lies
/// inside it. An event narrower than a bin, containing no bin start, takes the
/// value of the bin containing its start.
pub fn score_event(event: &Event, timeline: &RewatchTimeline) -> f64 {
    let n = timeline.normalized.len();
    let bin = timeline.bin;
    let first = (event.start / bin).ceil().max(0.0) as usize;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut t = first;
    while t < n && (t as f64) * bin < event.end {
        sum += timeline.normalized[t];
        count += 1;
        t += 1;
    }
    if count > 0 {
        return sum / count as f64;
    }
    let containing = (event.start / bin).floor() as usize;
    timeline.normalized.get(containing).copied().unwrap_or(0.0)
}

pub fn score_events(partition: &EventPartition, timeline: &RewatchTimeline) -> Result<Vec<ScoredEvent>, EventError> {
    partition.validate()?;
    let limit = timeline.len() as f64 * timeline.bin;
    partition
        .events
        .iter()
        .map(|e| {
            if e.start < 0.0 || e.end > limit + 1e-9 {
                return Err(EventError::EventOutOfRange {
                    label: e.label.clone(),
                    start: e.start,
                    end: e.end,
                    limit,
                });
            }
            Ok(ScoredEvent {
                event: e.clone(),
                score: score_event(e, timeline),
            })
        })
        .collect()
}

/// The `min(k, n)` best events (higher score first, earlier start on ties),
/// returned chronologically as segments.
pub fn top_k_events(scored: &[ScoredEvent], k: usize) -> Result<Vec<Segment>, EventError> {
    if k == 0 {
        return Err(EventError::ZeroK);
    }
    let mut order: Vec<&ScoredEvent> = scored.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.event.start.total_cmp(&b.event.start)));
    order.truncate(k);
    order.sort_by(|a, b| a.event.start.total_cmp(&b.event.start));
    Ok(order
        .into_iter()
        .map(|s| {
            let mut seg = Segment::new(s.event.start, s.event.end, s.score.max(0.0), SegmentSource::V2Event);
            seg.labels.insert(s.event.label.clone());
            seg
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V2Options {
    pub k: usize,
    /// Also merge close clips and expand short ones before snapping.
    #[serde(default)]
    pub merge_expand: bool,
}

impl Default for V2Options {
    fn default() -> Self {
        Self {
            k: 15,
            merge_expand: false,
        }
    }
}

/// Score, select top-k, optionally merge/expand, then snap to shots.
pub fn v2_pipeline(
    partition: &EventPartition,
    timeline: &RewatchTimeline,
    shots: Option<&ShotTrack>,
    opts: &V2Options,
    cfg: &RefineConfig,
) -> Result<Vec<Segment>, EventError> {
    cfg.validate()?;
    let scored = score_events(partition, timeline)?;
    if scored.is_empty() {
        return Ok(Vec::new());
    }
    let mut segs = top_k_events(&scored, opts.k)?;
    if opts.merge_expand {
        let duration = timeline.len() as f64 * timeline.bin;
        segs = merge_close(&segs, cfg.merge_gap)?;
        segs = expand_short(&segs, cfg.min_len, duration);
    }
    if let Some(track) = shots {
        if cfg.snap_mode != SnapMode::None {
            segs = snap_to_shots(&segs, track, cfg.snap_mode);
        }
    }
    Ok(segs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::normalize;

    fn timeline(normalized: Vec<f64>) -> RewatchTimeline {
        RewatchTimeline {
            asset_id: "a".into(),
            bin: 1.0,
            window: 1.0,
            base_size: 1,
            raw: normalized.clone(),
            normalized,
        }
    }

    fn event(start: f64, end: f64, label: &str) -> Event {
        Event {
            start,
            end,
            label: label.into(),
            attributes: BTreeMap::new(),
        }
    }

    #[test]
    fn mean_over_contained_bins() {
        let mut v = vec![0.0; 20];
        v[10] = 0.2;
        v[11] = 0.4;
        v[12] = 0.6;
        let s = score_event(&event(10.0, 13.0, "p"), &timeline(v));
        assert!((s - 0.4).abs() < 1e-12);
    }

    #[test]
    fn sub_bin_event_uses_containing_bin() {
        let mut v = vec![0.0; 10];
        v[4] = 0.7;
        assert_eq!(score_event(&event(4.2, 4.8, "p"), &timeline(v)), 0.7);
    }

    #[test]
    fn constant_series_scores_equally() {
        let tl = normalize(timeline(vec![3.0; 30]));
        let p = EventPartition::new(vec![event(0.0, 5.0, "a"), event(7.0, 9.5, "b"), event(20.0, 30.0, "c")]).unwrap();
        let scored = score_events(&p, &tl).unwrap();
        assert!(scored.iter().all(|s| s.score == scored[0].score));
    }

    #[test]
    fn out_of_range_event() {
        let p = EventPartition::new(vec![event(5.0, 12.0, "late")]).unwrap();
        assert!(matches!(score_events(&p, &timeline(vec![0.0; 10])), Err(EventError::EventOutOfRange { .. })));
    }

    #[test]
    fn overlapping_partition_rejected() {
        assert!(EventPartition::new(vec![event(0.0, 5.0, "a"), event(4.0, 6.0, "b")]).is_err());
    }

    #[test]
    fn top_k_ties_and_saturation() {
        let scored: Vec<ScoredEvent> = [(0.0, 0.5), (10.0, 0.9), (20.0, 0.5), (30.0, 0.1)]
            .iter()
            .map(|&(s, score)| ScoredEvent {
                event: event(s, s + 5.0, &format!("e{s}")),
                score,
            })
            .collect();
        let top2 = top_k_events(&scored, 2).unwrap();
        assert_eq!(top2.iter().map(|s| s.start).collect::<Vec<_>>(), vec![0.0, 10.0]);
        assert!(top2[0].labels.contains("e0"));
        assert_eq!(top2[0].source, SegmentSource::V2Event);

        let all = top_k_events(&scored, 10).unwrap();
        assert_eq!(all.iter().map(|s| s.start).collect::<Vec<_>>(), vec![0.0, 10.0, 20.0, 30.0]);
        assert_eq!(top_k_events(&scored, 0), Err(EventError::ZeroK));
    }

    #[test]
    fn empty_partition_gives_empty_output() {
        let out = v2_pipeline(
            &EventPartition::default(),
            &timeline(vec![0.0; 10]),
            None,
            &V2Options::default(),
            &RefineConfig::default(),
        )
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn planted_peaks_rank_first() {
        let mut v = vec![0.05; 300];
        for t in (40..60).chain(130..150).chain(220..240) {
            v[t] = 0.9;
        }
        let events: Vec<Event> = (0..30).map(|i| event(i as f64 * 10.0, i as f64 * 10.0 + 9.0, &format!("p{i}"))).collect();
        let p = EventPartition::new(events).unwrap();
        let opts = V2Options { k: 6, merge_expand: false };
        let cfg = RefineConfig {
            snap_mode: SnapMode::None,
            ..RefineConfig::default()
        };
        let segs = v2_pipeline(&p, &timeline(v), None, &opts, &cfg).unwrap();
        let starts: Vec<f64> = segs.iter().map(|s| s.start).collect();
        assert_eq!(starts, vec![40.0, 50.0, 130.0, 140.0, 220.0, 230.0]);
    }
}

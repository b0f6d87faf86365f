//! End-to-end runs shared by the CLI and the curation service, so that both
//! produce byte-identical reels for the same inputs and config.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{detect_seed_bins, group_seed_windows, DetectError, IqrConfig};
use crate::events::{score_events, top_k_events, v2_pipeline, EventError, EventPartition, V2Options};
use crate::exec::Parallelism;
use crate::interval::Span;
use crate::metadata::{Metadata, MetadataError};
use crate::reel::{assemble_reel, BumperPolicy, ExternalClip, HighlightReel, PipelineKind, Provenance, ReelError};
use crate::refine::{refine, RefineConfig, RefineError};
use crate::segment::Segment;
use crate::session::{filter_viewer_base, select_cohort, AssetInfo, Cohort, CohortWindows, IngestError, ViewSession, ViewerBaseFilter};
use crate::timeline::{compute_rewatch_timeline_with, normalize, RewatchTimeline, TimelineError, TimelineParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error(transparent)]
    Reel(#[from] ReelError),
    #[error("the v2 pipeline needs an event partition")]
    MissingEvents,
    #[error("timeline has {got} bins but the asset needs {want}")]
    TimelineMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ReelOptions {
    pub header: Option<ExternalClip>,
    pub bumpers: Vec<ExternalClip>,
    pub bumper_policy: BumperPolicy,
}

fn default_pipeline() -> PipelineKind {
    PipelineKind::V1
}

/// Every knob of a run. Serialized verbatim into reel provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    #[serde(default = "default_pipeline")]
    pub pipeline: PipelineKind,
    pub filter: ViewerBaseFilter,
    pub cohort: Cohort,
    pub cohort_windows: CohortWindows,
    pub timeline: TimelineParams,
    pub iqr: IqrConfig,
    pub refine: RefineConfig,
    pub v2: V2Options,
    pub reel: ReelOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineKind::V1,
            filter: ViewerBaseFilter::default(),
            cohort: Cohort::All,
            cohort_windows: CohortWindows::default(),
            timeline: TimelineParams::default(),
            iqr: IqrConfig::default(),
            refine: RefineConfig::default(),
            v2: V2Options::default(),
            reel: ReelOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.filter.validate()?;
        self.cohort_windows.validate()?;
        self.timeline.validate()?;
        self.iqr.validate()?;
        self.refine.validate()?;
        if let Some(expr) = &self.refine.tag_expr {
            crate::tagexpr::TagExpr::parse(expr).map_err(RefineError::from)?;
        }
        if self.v2.k == 0 {
            return Err(EventError::ZeroK.into());
        }
        if let BumperPolicy::EveryN(0) = self.reel.bumper_policy {
            return Err(ReelError::BadPolicy("every_n needs n >= 1".into()).into());
        }
        Ok(())
    }
}

/// Everything known about one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetInputs {
    pub asset: AssetInfo,
    pub sessions: Vec<ViewSession>,
    pub metadata: Metadata,
    pub events: Option<EventPartition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub timeline: RewatchTimeline,
    /// Pre-refinement seeds: flagged windows for V1, selected events for V2.
    pub seeds: Vec<Segment>,
    pub segments: Vec<Segment>,
}

impl PipelineRun {
    /// The span of the seeds that ended up inside `segment`. Used as the
    /// stable identity of a proposal across re-tuning.
    pub fn seed_span(&self, segment: &Segment) -> Span {
        let inside: Vec<&Segment> = self
            .seeds
            .iter()
            .filter(|s| s.span().overlap(&segment.span()) > 0.0)
            .collect();
        match (inside.first(), inside.last()) {
            (Some(a), Some(b)) => Span::new(a.start, b.end),
            _ => segment.span(),
        }
    }
}

/// Viewer base for the configured filter and cohort.
pub fn viewer_base(inputs: &AssetInputs, cfg: &PipelineConfig) -> Result<Vec<ViewSession>, PipelineError> {
    let base = filter_viewer_base(&inputs.sessions, &cfg.filter, &inputs.asset)?;
    Ok(select_cohort(&base, &inputs.asset, &cfg.cohort_windows, cfg.cohort)?)
}

pub fn build_timeline(inputs: &AssetInputs, cfg: &PipelineConfig, mode: Parallelism) -> Result<RewatchTimeline, PipelineError> {
    let base = viewer_base(inputs, cfg)?;
    let params = TimelineParams {
        allow_empty: cfg.timeline.allow_empty || cfg.cohort != Cohort::All,
        ..cfg.timeline
    };
    Ok(normalize(compute_rewatch_timeline_with(&base, &inputs.asset, &params, mode)?))
}

/// Flagged windows of a normalized timeline, before refinement.
pub fn v1_seeds(timeline: &RewatchTimeline, iqr: &IqrConfig, duration: f64) -> Result<Vec<Segment>, PipelineError> {
    let mask = detect_seed_bins(&timeline.normalized, iqr)?;
    Ok(group_seed_windows(&mask, &timeline.normalized, timeline.bin, timeline.window, duration))
}

/// Runs the configured pipeline on a precomputed normalized timeline.
pub fn run_on_timeline(
    timeline: RewatchTimeline,
    inputs: &AssetInputs,
    cfg: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    inputs.metadata.validate()?;
    let duration = inputs.asset.duration;
    let want = crate::timeline::bin_count(duration, timeline.bin);
    if timeline.len() != want {
        return Err(PipelineError::TimelineMismatch { got: timeline.len(), want });
    }
    let shots = inputs.metadata.shots.as_ref();
    let (seeds, segments) = match cfg.pipeline {
        PipelineKind::V1 => {
            let seeds = v1_seeds(&timeline, &cfg.iqr, duration)?;
            let segments = refine(&seeds, duration, shots, &inputs.metadata.tags, &cfg.refine)?;
            (seeds, segments)
        }
        PipelineKind::V2 => {
            let events = inputs.events.as_ref().ok_or(PipelineError::MissingEvents)?;
            let seeds = top_k_events(&score_events(events, &timeline)?, cfg.v2.k)?;
            let segments = v2_pipeline(events, &timeline, shots, &cfg.v2, &cfg.refine)?;
            (seeds, segments)
        }
    };
    Ok(PipelineRun { timeline, seeds, segments })
}

pub fn run_pipeline(inputs: &AssetInputs, cfg: &PipelineConfig, mode: Parallelism) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    let timeline = build_timeline(inputs, cfg, mode)?;
    run_on_timeline(timeline, inputs, cfg)
}

pub fn provenance(cfg: &PipelineConfig, timeline: &RewatchTimeline) -> Provenance {
    Provenance {
        pipeline: cfg.pipeline,
        config: serde_json::to_value(cfg).expect("config serializes"),
        timeline_digest: timeline.digest(),
    }
}

pub fn build_reel(
    asset_id: &str,
    clips: Vec<Segment>,
    cfg: &PipelineConfig,
    timeline: &RewatchTimeline,
) -> Result<HighlightReel, PipelineError> {
    Ok(assemble_reel(
        asset_id,
        clips,
        cfg.reel.header.clone(),
        cfg.reel.bumpers.clone(),
        cfg.reel.bumper_policy,
        provenance(cfg, timeline),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::ShotTrack;
    use crate::session::{PlayInterval, PlayMode};

    fn inputs() -> AssetInputs {
        let asset = AssetInfo::new("a", 0.0, 300.0).unwrap();
        let mut sessions = Vec::new();
        for v in 0..20 {
            let mut plays = vec![PlayInterval {
                content_start: 0.0,
                content_end: 300.0,
                wall_start: 0.0,
                mode: PlayMode::Live,
            }];
            if v < 8 {
                plays.push(PlayInterval {
                    content_start: 100.0,
                    content_end: 130.0,
                    wall_start: 7200.0,
                    mode: PlayMode::Replay,
                });
            }
            sessions.push(ViewSession {
                viewer_id: format!("v{v}"),
                asset_id: "a".into(),
                region: None,
                plays,
            });
        }
        AssetInputs {
            asset,
            sessions,
            metadata: Metadata {
                shots: Some(ShotTrack::uniform(300.0, 10.0).unwrap()),
                ..Metadata::default()
            },
            events: None,
        }
    }

    #[test]
    fn v1_finds_the_planted_replay() {
        let run = run_pipeline(&inputs(), &PipelineConfig::default(), Parallelism::Sequential).unwrap();
        assert_eq!(run.seeds.len(), 1);
        assert_eq!((run.seeds[0].start, run.seeds[0].end), (100.0, 130.0));
        assert_eq!(run.segments.len(), 1);
        assert_eq!((run.segments[0].start, run.segments[0].end), (100.0, 130.0));
        assert_eq!(run.seed_span(&run.segments[0]), Span::new(100.0, 130.0));
    }

    #[test]
    fn v2_without_events_is_an_error() {
        let cfg = PipelineConfig {
            pipeline: PipelineKind::V2,
            ..PipelineConfig::default()
        };
        assert!(matches!(
            run_pipeline(&inputs(), &cfg, Parallelism::Sequential),
            Err(PipelineError::MissingEvents)
        ));
    }

    #[test]
    fn partial_config_json_fills_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"iqr":{"k":1.0},"refine":{"min_len":20}}"#).unwrap();
        assert_eq!(cfg.iqr.k, 1.0);
        assert_eq!(cfg.refine.min_len, 20.0);
        assert_eq!(cfg.refine.merge_gap, 5.0);
        assert_eq!(cfg.pipeline, PipelineKind::V1);
    }

    #[test]
    fn bad_tag_expression_is_rejected_up_front() {
        let mut cfg = PipelineConfig::default();
        cfg.refine.tag_expr = Some("actor:x AND".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn provenance_records_config_and_digest() {
        let inputs = inputs();
        let cfg = PipelineConfig::default();
        let run = run_pipeline(&inputs, &cfg, Parallelism::Parallel).unwrap();
        let reel = build_reel("a", run.segments.clone(), &cfg, &run.timeline).unwrap();
        assert_eq!(reel.provenance.timeline_digest, run.timeline.digest());
        assert_eq!(reel.provenance.config["refine"]["min_len"], 15.0);
    }
}

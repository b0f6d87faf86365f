//! Human-in-the-loop review state for one asset.
//!
//! Proposals are identified by the span of the seeds they grew from, so a
//! curator's accept/reject/trim decision survives re-tuning whenever the same
//! seed comes back. Every mutation carries the revision it was based on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Span;
use crate::pipeline::{PipelineConfig, PipelineError, PipelineRun};
use crate::segment::{Segment, SegmentSource};

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("stale revision {got}, current is {current}")]
    StaleRevision { got: u64, current: u64 },
    #[error("no segment with id `{0}`")]
    UnknownSegment(String),
    #[error("invalid trim: {0}")]
    InvalidTrim(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Proposed,
    Accepted,
    Rejected,
    Trimmed { start: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ReviewAction {
    Accept,
    Reject,
    Trim { start: f64, end: f64 },
    /// Drops an earlier decision.
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub seed: Span,
    pub segment: Segment,
    #[serde(flatten)]
    pub status: Status,
}

impl Candidate {
    /// The interval that would be exported, if any.
    pub fn effective(&self) -> Option<Segment> {
        match self.status {
            Status::Rejected => None,
            Status::Trimmed { start, end } => {
                let mut s = self.segment.clone();
                s.start = start;
                s.end = end;
                s.source = SegmentSource::Manual;
                Some(s)
            }
            Status::Proposed | Status::Accepted => Some(self.segment.clone()),
        }
    }
}

pub fn candidate_id(seed: &Span) -> String {
    format!("{:.3}-{:.3}", seed.start, seed.end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationSession {
    pub asset_id: String,
    pub duration: f64,
    pub config: PipelineConfig,
    pub revision: u64,
    pub candidates: Vec<Candidate>,
    /// Decisions by candidate id, kept even while the seed is absent.
    pub decisions: BTreeMap<String, Status>,
}

impl CurationSession {
    pub fn new(asset_id: &str, duration: f64, config: PipelineConfig, run: &PipelineRun) -> Self {
        let mut s = Self {
            asset_id: asset_id.into(),
            duration,
            config,
            revision: 0,
            candidates: Vec::new(),
            decisions: BTreeMap::new(),
        };
        s.load_run(run);
        s
    }

    fn load_run(&mut self, run: &PipelineRun) {
        self.candidates = run
            .segments
            .iter()
            .map(|seg| {
                let seed = run.seed_span(seg);
                let id = candidate_id(&seed);
                let status = self.decisions.get(&id).copied().unwrap_or(Status::Proposed);
                Candidate {
                    id,
                    seed,
                    segment: seg.clone(),
                    status,
                }
            })
            .collect();
    }

    fn check_revision(&self, revision: u64) -> Result<(), CurationError> {
        if revision != self.revision {
            return Err(CurationError::StaleRevision {
                got: revision,
                current: self.revision,
            });
        }
        Ok(())
    }

    /// Replaces the config and reruns the pipeline. Nothing changes on error.
    pub fn update_config(
        &mut self,
        revision: u64,
        config: PipelineConfig,
        rerun: impl FnOnce(&PipelineConfig) -> Result<PipelineRun, PipelineError>,
    ) -> Result<(), CurationError> {
        self.check_revision(revision)?;
        config.validate()?;
        let run = rerun(&config)?;
        self.config = config;
        self.load_run(&run);
        self.revision += 1;
        Ok(())
    }

    pub fn review(&mut self, revision: u64, id: &str, action: ReviewAction) -> Result<(), CurationError> {
        self.check_revision(revision)?;
        let idx = self
            .candidates
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| CurationError::UnknownSegment(id.into()))?;
        let status = match action {
            ReviewAction::Accept => Status::Accepted,
            ReviewAction::Reject => Status::Rejected,
            ReviewAction::Reset => Status::Proposed,
            ReviewAction::Trim { start, end } => {
                self.check_trim(idx, start, end)?;
                Status::Trimmed { start, end }
            }
        };
        self.candidates[idx].status = status;
        if status == Status::Proposed {
            self.decisions.remove(id);
        } else {
            self.decisions.insert(id.into(), status);
        }
        self.revision += 1;
        Ok(())
    }

    fn check_trim(&self, idx: usize, start: f64, end: f64) -> Result<(), CurationError> {
        if !(start.is_finite() && end.is_finite() && start >= 0.0 && end <= self.duration && end > start) {
            return Err(CurationError::InvalidTrim(format!(
                "[{start}, {end}) must be nonempty and inside [0, {})",
                self.duration
            )));
        }
        let span = Span::new(start, end);
        let clash = self
            .candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .filter_map(|(_, c)| c.effective())
            .any(|s| s.span().overlap(&span) > 0.0);
        if clash {
            return Err(CurationError::InvalidTrim(format!("[{start}, {end}) overlaps another clip")));
        }
        Ok(())
    }

    /// Clips to export: every candidate not rejected, trimmed where trimmed.
    pub fn export_clips(&self) -> Vec<Segment> {
        let mut clips: Vec<Segment> = self.candidates.iter().filter_map(Candidate::effective).collect();
        clips.sort_by(|a, b| a.start.total_cmp(&b.start));
        clips
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::RewatchTimeline;

    fn seg(a: f64, b: f64) -> Segment {
        Segment::new(a, b, 0.5, SegmentSource::V1Seed)
    }

    fn run(seeds: Vec<Segment>, segments: Vec<Segment>) -> PipelineRun {
        PipelineRun {
            timeline: RewatchTimeline {
                asset_id: "a".into(),
                bin: 1.0,
                window: 15.0,
                base_size: 1,
                raw: vec![0.0; 100],
                normalized: vec![0.0; 100],
            },
            seeds,
            segments,
        }
    }

    fn session() -> CurationSession {
        let r = run(vec![seg(10.0, 25.0), seg(60.0, 75.0)], vec![seg(10.0, 30.0), seg(60.0, 80.0)]);
        CurationSession::new("a", 100.0, PipelineConfig::default(), &r)
    }

    #[test]
    fn ids_are_seed_spans() {
        let s = session();
        assert_eq!(s.candidates[0].id, "10.000-25.000");
        assert_eq!(s.candidates[1].seed, Span::new(60.0, 75.0));
    }

    #[test]
    fn stale_revision_changes_nothing() {
        let mut s = session();
        s.review(0, "10.000-25.000", ReviewAction::Accept).unwrap();
        let before = s.clone();
        assert!(matches!(
            s.review(0, "60.000-75.000", ReviewAction::Reject),
            Err(CurationError::StaleRevision { got: 0, current: 1 })
        ));
        assert_eq!(s, before);
    }

    #[test]
    fn decisions_survive_retuning_when_seed_persists() {
        let mut s = session();
        s.review(0, "10.000-25.000", ReviewAction::Accept).unwrap();
        s.review(1, "60.000-75.000", ReviewAction::Reject).unwrap();
        let r = run(vec![seg(10.0, 25.0), seg(40.0, 55.0)], vec![seg(5.0, 30.0), seg(40.0, 55.0)]);
        s.update_config(2, PipelineConfig::default(), |_| Ok(r.clone())).unwrap();
        assert_eq!(s.revision, 3);
        assert_eq!(s.candidates[0].status, Status::Accepted);
        assert_eq!(s.candidates[1].status, Status::Proposed);
        let r2 = run(vec![seg(60.0, 75.0)], vec![seg(60.0, 80.0)]);
        s.update_config(3, PipelineConfig::default(), |_| Ok(r2.clone())).unwrap();
        assert_eq!(s.candidates[0].status, Status::Rejected);
    }

    #[test]
    fn export_skips_rejected_and_applies_trims() {
        let mut s = session();
        s.review(0, "10.000-25.000", ReviewAction::Reject).unwrap();
        s.review(1, "60.000-75.000", ReviewAction::Trim { start: 62.0, end: 78.0 }).unwrap();
        let clips = s.export_clips();
        assert_eq!(clips.len(), 1);
        assert_eq!((clips[0].start, clips[0].end, clips[0].source), (62.0, 78.0, SegmentSource::Manual));
    }

    #[test]
    fn invalid_trims_rejected() {
        let mut s = session();
        for (a, b) in [(50.0, 40.0), (-1.0, 20.0), (90.0, 120.0), (20.0, 65.0)] {
            assert!(matches!(
                s.review(0, "10.000-25.000", ReviewAction::Trim { start: a, end: b }),
                Err(CurationError::InvalidTrim(_))
            ));
        }
        assert_eq!(s.revision, 0);
    }

    #[test]
    fn failed_rerun_keeps_state() {
        let mut s = session();
        let before = s.clone();
        let err = s.update_config(0, PipelineConfig::default(), |_| Err(PipelineError::MissingEvents));
        assert!(err.is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn status_json_shape() {
        let s = session();
        let v = serde_json::to_value(&s.candidates[0]).unwrap();
        assert_eq!(v["status"], "proposed");
        let t: ReviewAction = serde_json::from_str(r#"{"action":"trim","start":1,"end":2}"#).unwrap();
        assert_eq!(t, ReviewAction::Trim { start: 1.0, end: 2.0 });
    }
}

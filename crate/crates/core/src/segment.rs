use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::interval::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentSource {
    V1Seed,
    V2Event,
    Contextual,
    Manual,
}

/// A scored half-open interval of content time; the unit of curation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub score: f64,
    pub source: SegmentSource,
    #[serde(default)]
    pub labels: BTreeSet<String>,
}

impl Segment {
    pub fn new(start: f64, end: f64, score: f64, source: SegmentSource) -> Self {
        Self {
            start,
            end,
            score,
            source,
            labels: BTreeSet::new(),
        }
    }

    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.start.is_finite() && self.end.is_finite() && self.end > self.start) {
            return Err(format!("segment [{}, {}) is not a valid interval", self.start, self.end));
        }
        if !(self.score >= 0.0) {
            return Err(format!("segment score {} is negative", self.score));
        }
        Ok(())
    }
}

/// True when segments are sorted by start and pairwise disjoint (touching allowed).
pub fn is_sorted_disjoint(segments: &[Segment]) -> bool {
    segments.windows(2).all(|w| w[0].end <= w[1].start)
}

/// The `{"segments":[...]}` document shared by every pipeline stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentList {
    pub segments: Vec<Segment>,
}

impl SegmentList {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("segments serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_list_json_shape() {
        let list = SegmentList {
            segments: vec![Segment::new(3.0, 5.0, 0.82, SegmentSource::V1Seed)],
        };
        assert_eq!(
            list.to_json(),
            r#"{"segments":[{"start":3.0,"end":5.0,"score":0.82,"source":"v1_seed","labels":[]}]}"#
        );
        let back: SegmentList = serde_json::from_str(&list.to_json()).unwrap();
        assert_eq!(back, list);
    }

    #[test]
    fn touching_segments_count_as_disjoint() {
        let a = Segment::new(0.0, 5.0, 0.0, SegmentSource::Manual);
        let b = Segment::new(5.0, 6.0, 0.0, SegmentSource::Manual);
        assert!(is_sorted_disjoint(&[a.clone(), b.clone()]));
        assert!(!is_sorted_disjoint(&[b, a]));
    }
}

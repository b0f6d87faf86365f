//! Content metadata aligned to the asset timeline: shots, tags and captions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Span;

#[derive(Debug, Error, PartialEq)]
pub enum MetadataError {
    #[error("shot track is empty")]
    EmptyShotTrack,
    #[error("invalid shot track: {0}")]
    InvalidShotTrack(String),
    #[error("invalid tag `{label}`: {reason}")]
    InvalidTag { label: String, reason: String },
    #[error("invalid caption cue at index {index}: end must be after start")]
    InvalidCaption { index: usize },
}

/// Shot boundaries: strictly increasing, starting at 0. Consecutive pairs are shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ShotTrack {
    boundaries: Vec<f64>,
}

impl ShotTrack {
    pub fn new(boundaries: Vec<f64>) -> Result<Self, MetadataError> {
        if boundaries.is_empty() {
            return Err(MetadataError::EmptyShotTrack);
        }
        if boundaries.len() < 2 {
            return Err(MetadataError::InvalidShotTrack("need at least two boundaries".into()));
        }
        if boundaries[0] != 0.0 {
            return Err(MetadataError::InvalidShotTrack(format!(
                "first boundary must be 0, got {}",
                boundaries[0]
            )));
        }
        if let Some(w) = boundaries.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(MetadataError::InvalidShotTrack(format!(
                "boundaries not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { boundaries })
    }

    /// Evenly spaced shots of `len` seconds covering `duration`.
    pub fn uniform(duration: f64, len: f64) -> Result<Self, MetadataError> {
        let mut b = Vec::new();
        let mut t = 0.0;
        let mut i = 0u64;
        while t < duration {
            b.push(t);
            i += 1;
            t = i as f64 * len;
        }
        b.push(duration);
        Self::new(b)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn first(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn last(&self) -> f64 {
        *self.boundaries.last().expect("track has >= 2 boundaries")
    }

    pub fn shot_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn shot(&self, i: usize) -> Span {
        Span::new(self.boundaries[i], self.boundaries[i + 1])
    }

    /// Index of the shot containing `t`, clamped to the track.
    pub fn shot_index_at(&self, t: f64) -> usize {
        let idx = self.boundaries.partition_point(|&b| b <= t);
        idx.saturating_sub(1).min(self.shot_count() - 1)
    }
}

impl TryFrom<Vec<f64>> for ShotTrack {
    type Error = MetadataError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ShotTrack> for Vec<f64> {
    fn from(t: ShotTrack) -> Self {
        t.boundaries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataTag {
    pub label: String,
    pub category: String,
    pub start: f64,
    pub end: f64,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub source: String,
}

fn full_confidence() -> f64 {
    1.0
}

impl MetadataTag {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }

    pub fn validate(&self) -> Result<(), MetadataError> {
        let fail = |reason: &str| MetadataError::InvalidTag {
            label: self.label.clone(),
            reason: reason.into(),
        };
        if !(self.end > self.start) {
            return Err(fail("end must be after start"));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(fail("confidence outside [0, 1]"));
        }
        Ok(())
    }

    /// Case-insensitive match against an expression atom.
    pub fn matches(&self, category: Option<&str>, label: &str) -> bool {
        self.label.to_lowercase() == label && category.is_none_or(|c| self.category.to_lowercase() == c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionCue {
    pub start: f64,
    pub end: f64,
    pub text: String,
}

impl CaptionCue {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// The metadata file: `{"shots":[...],"tags":[...],"captions":[...]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub shots: Option<ShotTrack>,
    #[serde(default)]
    pub tags: Vec<MetadataTag>,
    #[serde(default)]
    pub captions: Vec<CaptionCue>,
}

impl Metadata {
    pub fn validate(&self) -> Result<(), MetadataError> {
        for t in &self.tags {
            t.validate()?;
        }
        if let Some(index) = self.captions.iter().position(|c| !(c.end > c.start)) {
            return Err(MetadataError::InvalidCaption { index });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shot_track_validation() {
        assert_eq!(ShotTrack::new(vec![]), Err(MetadataError::EmptyShotTrack));
        assert!(ShotTrack::new(vec![0.0]).is_err());
        assert!(ShotTrack::new(vec![1.0, 2.0]).is_err());
        assert!(ShotTrack::new(vec![0.0, 2.0, 2.0]).is_err());
        let t = ShotTrack::new(vec![0.0, 30.0, 60.0, 90.0]).unwrap();
        assert_eq!(t.shot_count(), 3);
        assert_eq!(t.shot_index_at(30.0), 1);
        assert_eq!(t.shot_index_at(89.9), 2);
        assert_eq!(t.shot_index_at(90.0), 2);
    }

    #[test]
    fn metadata_file_parses() {
        let json = r#"{"shots":[0.0,12.4,30.0],"tags":[{"label":"warren","category":"actor","start":301.0,"end":420.5,"confidence":0.93,"source":"vendor-a"}],"captions":[]}"#;
        let m: Metadata = serde_json::from_str(json).unwrap();
        assert_eq!(m.shots.unwrap().boundaries(), &[0.0, 12.4, 30.0]);
        assert!(m.tags[0].matches(Some("actor"), "warren"));
        assert!(m.tags[0].matches(None, "warren"));
        assert!(!m.tags[0].matches(Some("emotion"), "warren"));

        let bad = r#"{"shots":[0.0,5.0,4.0]}"#;
        assert!(serde_json::from_str::<Metadata>(bad).is_err());
    }

    #[test]
    fn uniform_track_ends_at_duration() {
        let t = ShotTrack::uniform(10.0, 4.0).unwrap();
        assert_eq!(t.boundaries(), &[0.0, 4.0, 8.0, 10.0]);
    }
}

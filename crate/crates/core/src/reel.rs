//! Highlight reel assembly and cut-list export.
//!
//! Exports are byte-deterministic: JSON has sorted keys and seconds printed
//! with exactly three decimals; the text format is one tab-separated line per
//! reel item with LF endings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::segment::{is_sorted_disjoint, Segment};

#[derive(Debug, Error)]
pub enum ReelError {
    #[error("a reel needs at least one clip")]
    EmptyReel,
    #[error("clips must be chronological and non-overlapping")]
    OverlappingSegments,
    #[error("unknown cut-list format `{0}` (expected json or concat_txt)")]
    UnknownFormat(String),
    #[error("invalid bumper policy `{0}`")]
    BadPolicy(String),
    #[error("malformed cut list: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A clip that is not part of the asset, such as a header or a bumper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalClip {
    pub uri: String,
    pub duration: f64,
}

impl FromStr for ExternalClip {
    type Err = String;

    /// Parses `uri@seconds`, or a bare `uri` with zero duration.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.rsplit_once('@') {
            Some((uri, d)) if !uri.is_empty() => {
                let duration = d.parse::<f64>().map_err(|e| format!("bad duration in `{s}`: {e}"))?;
                if !(duration >= 0.0) {
                    return Err(format!("negative duration in `{s}`"));
                }
                Ok(Self { uri: uri.into(), duration })
            }
            _ if !s.is_empty() => Ok(Self {
                uri: s.into(),
                duration: 0.0,
            }),
            _ => Err("empty clip reference".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumperPolicy {
    #[default]
    BetweenAll,
    BetweenNone,
    EveryN(usize),
}

impl FromStr for BumperPolicy {
    type Err = ReelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "between_all" => Ok(Self::BetweenAll),
            "between_none" => Ok(Self::BetweenNone),
            _ => s
                .strip_prefix("every_n(")
                .and_then(|r| r.strip_suffix(')'))
                .or_else(|| s.strip_prefix("every_n:"))
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n > 0)
                .map(Self::EveryN)
                .ok_or_else(|| ReelError::BadPolicy(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    V1,
    V2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub pipeline: PipelineKind,
    pub config: Value,
    pub timeline_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightReel {
    pub asset_id: String,
    pub clips: Vec<Segment>,
    #[serde(default)]
    pub header: Option<ExternalClip>,
    #[serde(default)]
    pub bumpers: Vec<ExternalClip>,
    #[serde(default)]
    pub bumper_policy: BumperPolicy,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReelItem<'a> {
    Header(&'a ExternalClip),
    Bumper(&'a ExternalClip),
    Clip(usize, &'a Segment),
}

impl HighlightReel {
    /// Playback order: header, then clips with bumpers placed per policy.
    pub fn sequence(&self) -> Vec<ReelItem<'_>> {
        let mut items = Vec::new();
        if let Some(h) = &self.header {
            items.push(ReelItem::Header(h));
        }
        let mut next_bumper = 0usize;
        for (i, clip) in self.clips.iter().enumerate() {
            if i > 0 && !self.bumpers.is_empty() {
                let insert = match self.bumper_policy {
                    BumperPolicy::BetweenAll => true,
                    BumperPolicy::BetweenNone => false,
                    BumperPolicy::EveryN(n) => i % n == 0,
                };
                if insert {
                    items.push(ReelItem::Bumper(&self.bumpers[next_bumper % self.bumpers.len()]));
                    next_bumper += 1;
                }
            }
            items.push(ReelItem::Clip(i, clip));
        }
        items
    }

    pub fn clip_seconds(&self) -> f64 {
        self.clips.iter().map(Segment::len).sum()
    }

    /// Playback length including header and inserted bumpers.
    pub fn total_seconds(&self) -> f64 {
        self.sequence()
            .iter()
            .map(|item| match item {
                ReelItem::Header(x) | ReelItem::Bumper(x) => x.duration,
                ReelItem::Clip(_, c) => c.len(),
            })
            .sum()
    }
}

pub fn assemble_reel(
    asset_id: &str,
    segments: Vec<Segment>,
    header: Option<ExternalClip>,
    bumpers: Vec<ExternalClip>,
    bumper_policy: BumperPolicy,
    provenance: Provenance,
) -> Result<HighlightReel, ReelError> {
    if segments.is_empty() {
        return Err(ReelError::EmptyReel);
    }
    if !is_sorted_disjoint(&segments) || segments.iter().any(|s| s.validate().is_err()) {
        return Err(ReelError::OverlappingSegments);
    }
    Ok(HighlightReel {
        asset_id: asset_id.into(),
        clips: segments,
        header,
        bumpers,
        bumper_policy,
        provenance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutlistFormat {
    Json,
    ConcatTxt,
}

impl FromStr for CutlistFormat {
    type Err = ReelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "concat_txt" | "txt" => Ok(Self::ConcatTxt),
            other => Err(ReelError::UnknownFormat(other.into())),
        }
    }
}

pub fn export_cutlist(reel: &HighlightReel, format: CutlistFormat) -> Vec<u8> {
    match format {
        CutlistFormat::Json => export_json(reel).into_bytes(),
        CutlistFormat::ConcatTxt => export_concat(reel).into_bytes(),
    }
}

fn export_concat(reel: &HighlightReel) -> String {
    let mut out = String::new();
    for item in reel.sequence() {
        match item {
            ReelItem::Header(x) | ReelItem::Bumper(x) => {
                writeln!(out, "ext\t{}", x.uri).unwrap();
            }
            ReelItem::Clip(_, c) => {
                writeln!(out, "{}\t{:.3}\t{:.3}", reel.asset_id, c.start, c.end).unwrap();
            }
        }
    }
    out
}

const FIXED_KEYS: [&str; 4] = ["start", "end", "duration", "total_seconds"];

fn export_json(reel: &HighlightReel) -> String {
    let mut doc = serde_json::to_value(reel).expect("reel serializes");
    let sequence: Vec<Value> = reel
        .sequence()
        .into_iter()
        .map(|item| match item {
            ReelItem::Header(x) => serde_json::json!({"kind": "header", "uri": x.uri, "duration": x.duration}),
            ReelItem::Bumper(x) => serde_json::json!({"kind": "bumper", "uri": x.uri, "duration": x.duration}),
            ReelItem::Clip(i, _) => serde_json::json!({"kind": "clip", "index": i}),
        })
        .collect();
    doc["sequence"] = Value::Array(sequence);
    doc["total_seconds"] = serde_json::json!(reel.total_seconds());
    let mut out = String::new();
    write_canonical(&doc, None, false, &mut out);
    out.push('\n');
    out
}

/// Writes `v` with sorted object keys. Seconds-valued fields outside the
/// provenance block are printed as fixed three-decimal numbers.
fn write_canonical(v: &Value, key: Option<&str>, in_provenance: bool, out: &mut String) {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            let fixed = !in_provenance && key.is_some_and(|k| FIXED_KEYS.contains(&k));
            match (fixed, n.as_f64()) {
                (true, Some(x)) => write!(out, "{x:.3}").unwrap(),
                _ => out.push_str(&n.to_string()),
            }
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, key, in_provenance, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], Some(k), in_provenance || k == "provenance", out);
            }
            out.push('}');
        }
    }
}

/// Reads a JSON cut list back into a reel.
pub fn parse_cutlist_json(bytes: &[u8]) -> Result<HighlightReel, ReelError> {
    Ok(serde_json::from_slice(bytes)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReelStats {
    pub clip_count: usize,
    pub clip_seconds: f64,
    pub total_seconds: f64,
    /// Fraction of the asset covered by clips; header and bumpers excluded.
    pub coverage_fraction: f64,
}

pub fn reel_stats(reel: &HighlightReel, asset_duration: f64) -> ReelStats {
    let clip_seconds = reel.clip_seconds();
    ReelStats {
        clip_count: reel.clips.len(),
        clip_seconds,
        total_seconds: reel.total_seconds(),
        coverage_fraction: if asset_duration > 0.0 { clip_seconds / asset_duration } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::SegmentSource;

    fn clip(start: f64, end: f64) -> Segment {
        Segment::new(start, end, 0.5, SegmentSource::V1Seed)
    }

    fn prov() -> Provenance {
        Provenance {
            pipeline: PipelineKind::V1,
            config: serde_json::json!({"k": 1.5, "refine": {"min_len": 15.0}}),
            timeline_digest: "abc".into(),
        }
    }

    fn ext(uri: &str) -> ExternalClip {
        ExternalClip {
            uri: uri.into(),
            duration: 3.0,
        }
    }

    #[test]
    fn header_and_bumpers_in_schematic_order() {
        let reel = assemble_reel(
            "a9",
            vec![clip(10.0, 20.0), clip(30.0, 40.0)],
            Some(ext("H")),
            vec![ext("B")],
            BumperPolicy::BetweenAll,
            prov(),
        )
        .unwrap();
        let kinds: Vec<String> = reel
            .sequence()
            .iter()
            .map(|i| match i {
                ReelItem::Header(x) | ReelItem::Bumper(x) => x.uri.clone(),
                ReelItem::Clip(i, _) => format!("c{}", i + 1),
            })
            .collect();
        assert_eq!(kinds, ["H", "c1", "B", "c2"]);
        assert_eq!(reel.total_seconds(), 26.0);
    }

    #[test]
    fn bumper_policies() {
        let clips: Vec<Segment> = (0..5).map(|i| clip(i as f64 * 10.0, i as f64 * 10.0 + 5.0)).collect();
        let count = |policy| {
            let r = assemble_reel("a", clips.clone(), None, vec![ext("B1"), ext("B2")], policy, prov()).unwrap();
            r.sequence().iter().filter(|i| matches!(i, ReelItem::Bumper(_))).count()
        };
        assert_eq!(count(BumperPolicy::BetweenAll), 4);
        assert_eq!(count(BumperPolicy::BetweenNone), 0);
        assert_eq!(count(BumperPolicy::EveryN(2)), 2);
        assert_eq!("every_n(2)".parse::<BumperPolicy>().unwrap(), BumperPolicy::EveryN(2));
        assert!("every_n(0)".parse::<BumperPolicy>().is_err());
    }

    #[test]
    fn clips_only_and_errors() {
        let r = assemble_reel("a", vec![clip(1.0, 2.0)], None, vec![], BumperPolicy::BetweenAll, prov()).unwrap();
        assert_eq!(r.sequence().len(), 1);
        assert!(matches!(
            assemble_reel("a", vec![], None, vec![], BumperPolicy::BetweenAll, prov()),
            Err(ReelError::EmptyReel)
        ));
        assert!(matches!(
            assemble_reel("a", vec![clip(0.0, 5.0), clip(4.0, 6.0)], None, vec![], BumperPolicy::BetweenAll, prov()),
            Err(ReelError::OverlappingSegments)
        ));
    }

    #[test]
    fn concat_txt_lines() {
        let r = assemble_reel(
            "a9",
            vec![clip(30.0, 60.0)],
            Some(ExternalClip {
                uri: "s3://h.mp4".into(),
                duration: 4.0,
            }),
            vec![],
            BumperPolicy::BetweenAll,
            prov(),
        )
        .unwrap();
        let txt = String::from_utf8(export_cutlist(&r, CutlistFormat::ConcatTxt)).unwrap();
        assert_eq!(txt, "ext\ts3://h.mp4\na9\t30.000\t60.000\n");
    }

    #[test]
    fn json_export_is_canonical_and_parses_back() {
        let r = assemble_reel("a9", vec![clip(30.0, 60.0), clip(61.25, 75.5)], None, vec![], BumperPolicy::BetweenAll, prov()).unwrap();
        let a = export_cutlist(&r, CutlistFormat::Json);
        let b = export_cutlist(&r, CutlistFormat::Json);
        assert_eq!(a, b);
        let text = String::from_utf8(a.clone()).unwrap();
        assert!(text.starts_with(r#"{"asset_id":"a9","bumper_policy":"between_all","bumpers":[],"clips":[{"end":60.000,"labels":[],"score":0.5,"source":"v1_seed","start":30.000}"#));
        assert!(text.contains(r#""total_seconds":44.250"#));
        assert!(text.contains(r#""config":{"k":1.5,"refine":{"min_len":15.0}}"#));
        assert!(text.ends_with("}\n"));
        let back = parse_cutlist_json(&a).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn stats() {
        let clips: Vec<Segment> = (0..10).map(|i| clip(i as f64 * 100.0, i as f64 * 100.0 + 15.0)).collect();
        let r = assemble_reel("a", clips, Some(ext("H")), vec![], BumperPolicy::BetweenAll, prov()).unwrap();
        let s = reel_stats(&r, 3600.0);
        assert_eq!(s.clip_count, 10);
        assert_eq!(s.clip_seconds, 150.0);
        assert!((s.coverage_fraction - 150.0 / 3600.0).abs() < 1e-12);
        assert!((s.coverage_fraction - 0.0417).abs() < 1e-4);

        let whole = assemble_reel("a", vec![clip(0.0, 3600.0)], None, vec![], BumperPolicy::BetweenAll, prov()).unwrap();
        assert_eq!(reel_stats(&whole, 3600.0).coverage_fraction, 1.0);
    }

    #[test]
    fn external_clip_refs() {
        assert_eq!("s3://h.mp4@4.5".parse::<ExternalClip>().unwrap().duration, 4.5);
        assert_eq!("s3://h.mp4".parse::<ExternalClip>().unwrap().duration, 0.0);
        assert!("".parse::<ExternalClip>().is_err());
    }
}

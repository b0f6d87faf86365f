//! Viewership log ingestion: parsing, viewer-base filtering and recency cohorts.
//!
//! Logs arrive either as JSONL (one session record per line, possibly split
//! across several lines for the same viewer and asset) or as CSV with one play
//! per row. Malformed lines are skipped and reported; a feed where too many
//! lines are malformed is rejected outright.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{union_length, Span};

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown session format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
    #[error("{malformed} of {total} lines malformed, above the abort threshold")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        report: ParseReport,
    },
    #[error("session for viewer `{viewer_id}` references asset `{found}`, expected `{expected}`")]
    AssetMismatch {
        viewer_id: String,
        expected: String,
        found: String,
    },
    #[error("invalid viewer-base filter: {0}")]
    BadFilter(String),
    #[error("invalid cohort windows: {0}")]
    BadCohortWindows(String),
    #[error("i/o error reading sessions: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayMode {
    Live,
    Replay,
}

impl FromStr for PlayMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown play mode `{other}`")),
        }
    }
}

/// One contiguous playback of the asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayInterval {
    #[serde(rename = "cs")]
    pub content_start: f64,
    #[serde(rename = "ce")]
    pub content_end: f64,
    /// UTC epoch seconds at playback start.
    #[serde(rename = "ws")]
    pub wall_start: f64,
    pub mode: PlayMode,
}

impl PlayInterval {
    pub fn span(&self) -> Span {
        Span::new(self.content_start, self.content_end)
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [self.content_start, self.content_end, self.wall_start];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err("non-finite time value".into());
        }
        if self.content_start < 0.0 {
            return Err(format!("content_start {} is negative", self.content_start));
        }
        if self.content_end <= self.content_start {
            return Err(format!(
                "content_end {} not after content_start {}",
                self.content_end, self.content_start
            ));
        }
        if self.wall_start < 0.0 {
            return Err(format!("wall_start {} is negative", self.wall_start));
        }
        Ok(())
    }
}

/// One anonymized viewer's plays of one asset, ordered by wall-clock start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSession {
    pub viewer_id: String,
    pub asset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    pub plays: Vec<PlayInterval>,
}

impl ViewSession {
    /// Seconds of distinct content watched (union of play intervals).
    pub fn watched_duration(&self) -> f64 {
        union_length(self.plays.iter().map(PlayInterval::span))
    }

    pub fn has_replay(&self) -> bool {
        self.plays.iter().any(|p| p.mode == PlayMode::Replay)
    }

    /// Wall-clock start of the earliest replay-mode play.
    pub fn first_replay_wall_start(&self) -> Option<f64> {
        self.plays
            .iter()
            .filter(|p| p.mode == PlayMode::Replay)
            .map(|p| p.wall_start)
            .min_by(f64::total_cmp)
    }

    fn sort_plays(&mut self) {
        self.plays.sort_by(|a, b| a.wall_start.total_cmp(&b.wall_start));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetInfo {
    pub asset_id: String,
    /// UTC epoch seconds of the original airing.
    pub air_start: f64,
    pub duration: f64,
}

impl AssetInfo {
    pub fn new(asset_id: impl Into<String>, air_start: f64, duration: f64) -> Result<Self, String> {
        let asset = Self {
            asset_id: asset_id.into(),
            air_start,
            duration,
        };
        asset.validate()?;
        Ok(asset)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(format!("asset duration {} must be positive", self.duration));
        }
        if !self.air_start.is_finite() {
            return Err("asset air_start must be finite".into());
        }
        Ok(())
    }

    pub fn check(&self, session: &ViewSession) -> Result<(), IngestError> {
        if session.asset_id != self.asset_id {
            return Err(IngestError::AssetMismatch {
                viewer_id: session.viewer_id.clone(),
                expected: self.asset_id.clone(),
                found: session.asset_id.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionFormat {
    Jsonl,
    Csv,
}

impl FromStr for SessionFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            _ => Err(IngestError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for SessionFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Jsonl => "jsonl",
            Self::Csv => "csv",
        })
    }
}

/// A skipped input line. Line numbers are 1-based and count the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    pub total_records: usize,
    pub malformed: Vec<MalformedRecord>,
}

impl ParseReport {
    pub fn is_clean(&self) -> bool {
        self.malformed.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        self.malformed
            .iter()
            .map(|m| serde_json::to_string(m).expect("report entry serializes") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Fraction of malformed records above which the whole parse fails.
    pub abort_fraction: f64,
    /// Feeds with fewer records than this are never aborted, only reported.
    pub abort_min_records: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            abort_fraction: 0.10,
            abort_min_records: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSessions {
    pub sessions: Vec<ViewSession>,
    pub report: ParseReport,
}

#[derive(Deserialize)]
struct CsvRow {
    viewer_id: String,
    asset_id: String,
    #[serde(default)]
    region: Option<String>,
    cs: f64,
    ce: f64,
    ws: f64,
    mode: String,
}

/// Groups records into sessions keyed by `(viewer_id, asset_id)`.
#[derive(Default)]
struct SessionBuilder {
    by_key: BTreeMap<(String, String), ViewSession>,
}

impl SessionBuilder {
    fn push(&mut self, record: ViewSession) {
        let key = (record.viewer_id.clone(), record.asset_id.clone());
        match self.by_key.get_mut(&key) {
            Some(existing) => {
                if existing.region.is_none() {
                    existing.region = record.region;
                }
                existing.plays.extend(record.plays);
            }
            None => {
                self.by_key.insert(key, record);
            }
        }
    }

    fn finish(self) -> Vec<ViewSession> {
        self.by_key
            .into_values()
            .map(|mut s| {
                s.sort_plays();
                s
            })
            .collect()
    }
}

fn validate_record(record: &ViewSession) -> Result<(), String> {
    if record.viewer_id.is_empty() {
        return Err("empty viewer_id".into());
    }
    if record.asset_id.is_empty() {
        return Err("empty asset_id".into());
    }
    if record.plays.is_empty() {
        return Err("record has no plays".into());
    }
    for (i, play) in record.plays.iter().enumerate() {
        play.validate().map_err(|e| format!("play {i}: {e}"))?;
    }
    Ok(())
}

/// Parses a session log with default abort options.
pub fn parse_sessions(input: impl Read, format: SessionFormat) -> Result<ParsedSessions, IngestError> {
    parse_sessions_with(input, format, ParseOptions::default())
}

pub fn parse_sessions_with(
    input: impl Read,
    format: SessionFormat,
    opts: ParseOptions,
) -> Result<ParsedSessions, IngestError> {
    let mut builder = SessionBuilder::default();
    let mut report = ParseReport::default();
    match format {
        SessionFormat::Jsonl => parse_jsonl(input, &mut builder, &mut report)?,
        SessionFormat::Csv => parse_csv(input, &mut builder, &mut report)?,
    }
    let malformed = report.malformed.len();
    let total = report.total_records;
    if total >= opts.abort_min_records && (malformed as f64) > opts.abort_fraction * total as f64 {
        return Err(IngestError::TooManyMalformed { malformed, total, report });
    }
    Ok(ParsedSessions {
        sessions: builder.finish(),
        report,
    })
}

fn parse_jsonl(input: impl Read, builder: &mut SessionBuilder, report: &mut ParseReport) -> Result<(), IngestError> {
    let reader = std::io::BufReader::new(input);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.total_records += 1;
        let parsed = serde_json::from_str::<ViewSession>(&line)
            .map_err(|e| e.to_string())
            .and_then(|record| validate_record(&record).map(|()| record));
        match parsed {
            Ok(record) => builder.push(record),
            Err(reason) => report.malformed.push(MalformedRecord { line: idx + 1, reason }),
        }
    }
    Ok(())
}

fn parse_csv(input: impl Read, builder: &mut SessionBuilder, report: &mut ParseReport) -> Result<(), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            if let csv::ErrorKind::Io(_) = e.kind() {
                return Err(IngestError::Io(std::io::Error::from(e)));
            }
            report.total_records += 1;
            report.malformed.push(MalformedRecord { line: 1, reason: format!("bad header: {e}") });
            return Ok(());
        }
    };
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(IngestError::Io(std::io::Error::from(e)));
                }
                report.total_records += 1;
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                report.malformed.push(MalformedRecord { line, reason: e.to_string() });
                continue;
            }
        };
        report.total_records += 1;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let parsed = record
            .deserialize::<CsvRow>(Some(&headers))
            .map_err(|e| e.to_string())
            .and_then(|row| {
                let mode = row.mode.parse::<PlayMode>()?;
                let session = ViewSession {
                    viewer_id: row.viewer_id,
                    asset_id: row.asset_id,
                    region: row.region.filter(|r| !r.is_empty()),
                    plays: vec![PlayInterval {
                        content_start: row.cs,
                        content_end: row.ce,
                        wall_start: row.ws,
                        mode,
                    }],
                };
                validate_record(&session)?;
                Ok(session)
            });
        match parsed {
            Ok(session) => builder.push(session),
            Err(reason) => report.malformed.push(MalformedRecord { line, reason }),
        }
    }
    Ok(())
}

/// Serializes sessions as JSONL, one session per line.
pub fn write_sessions_jsonl(sessions: &[ViewSession]) -> String {
    sessions
        .iter()
        .map(|s| serde_json::to_string(s).expect("session serializes") + "\n")
        .collect()
}

/// Criteria a session must meet to count towards an asset's viewer base.
/// All supplied criteria must hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewerBaseFilter {
    /// Minimum seconds of distinct content watched.
    pub min_watch: f64,
    #[serde(default)]
    pub region_allow: Option<BTreeSet<String>>,
    #[serde(default)]
    pub max_hours_after_air: Option<f64>,
    #[serde(default)]
    pub require_replay: bool,
}

impl Default for ViewerBaseFilter {
    fn default() -> Self {
        Self {
            min_watch: 0.0,
            region_allow: None,
            max_hours_after_air: None,
            require_replay: false,
        }
    }
}

impl ViewerBaseFilter {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.min_watch >= 0.0) {
            return Err(IngestError::BadFilter(format!("min_watch {} must be >= 0", self.min_watch)));
        }
        if let Some(h) = self.max_hours_after_air {
            if !(h > 0.0) {
                return Err(IngestError::BadFilter(format!("max_hours_after_air {h} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn accepts(&self, session: &ViewSession, asset: &AssetInfo) -> bool {
        if session.watched_duration() < self.min_watch {
            return false;
        }
        if let Some(hours) = self.max_hours_after_air {
            let limit = hours * SECONDS_PER_HOUR;
            if session.plays.iter().any(|p| p.wall_start - asset.air_start > limit) {
                return false;
            }
        }
        if let Some(allowed) = &self.region_allow {
            match &session.region {
                Some(r) if allowed.contains(r) => {}
                _ => return false,
            }
        }
        if self.require_replay && !session.has_replay() {
            return false;
        }
        true
    }
}

pub fn filter_viewer_base(
    sessions: &[ViewSession],
    filter: &ViewerBaseFilter,
    asset: &AssetInfo,
) -> Result<Vec<ViewSession>, IngestError> {
    filter.validate()?;
    let mut kept = Vec::new();
    for s in sessions {
        asset.check(s)?;
        if filter.accepts(s, asset) {
            kept.push(s.clone());
        }
    }
    Ok(kept)
}

/// Half-open range of hours after airing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourRange {
    pub start: f64,
    pub end: f64,
}

impl HourRange {
    pub fn contains(&self, hours: f64) -> bool {
        self.start <= hours && hours < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortWindows {
    pub early: HourRange,
    pub late: HourRange,
}

impl Default for CohortWindows {
    fn default() -> Self {
        Self {
            early: HourRange { start: 0.0, end: 12.0 },
            late: HourRange { start: 24.0, end: 48.0 },
        }
    }
}

impl CohortWindows {
    pub fn validate(&self) -> Result<(), IngestError> {
        for (name, r) in [("early", self.early), ("late", self.late)] {
            if !(r.end > r.start) {
                return Err(IngestError::BadCohortWindows(format!("{name} range is empty")));
            }
        }
        if self.early.start < self.late.end && self.late.start < self.early.end {
            return Err(IngestError::BadCohortWindows("early and late ranges overlap".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    #[default]
    All,
    Early,
    Late,
}

impl FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self::All),
            "early" => Ok(Self::Early),
            "late" => Ok(Self::Late),
            other => Err(format!("unknown cohort `{other}` (expected all, early or late)")),
        }
    }
}

/// Splits sessions by how soon after airing the viewer first replayed content.
/// Sessions without any replay belong to neither cohort.
pub fn cohort_split(
    sessions: &[ViewSession],
    asset: &AssetInfo,
    windows: &CohortWindows,
) -> Result<(Vec<ViewSession>, Vec<ViewSession>), IngestError> {
    windows.validate()?;
    let mut early = Vec::new();
    let mut late = Vec::new();
    for s in sessions {
        asset.check(s)?;
        let Some(ws) = s.first_replay_wall_start() else {
            continue;
        };
        let hours = (ws - asset.air_start) / SECONDS_PER_HOUR;
        if windows.early.contains(hours) {
            early.push(s.clone());
        } else if windows.late.contains(hours) {
            late.push(s.clone());
        }
    }
    Ok((early, late))
}

/// Selects the sessions of one cohort; `Cohort::All` returns every session.
pub fn select_cohort(
    sessions: &[ViewSession],
    asset: &AssetInfo,
    windows: &CohortWindows,
    cohort: Cohort,
) -> Result<Vec<ViewSession>, IngestError> {
    match cohort {
        Cohort::All => {
            for s in sessions {
                asset.check(s)?;
            }
            Ok(sessions.to_vec())
        }
        Cohort::Early => cohort_split(sessions, asset, windows).map(|(e, _)| e),
        Cohort::Late => cohort_split(sessions, asset, windows).map(|(_, l)| l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn play(cs: f64, ce: f64, ws: f64, mode: PlayMode) -> PlayInterval {
        PlayInterval {
            content_start: cs,
            content_end: ce,
            wall_start: ws,
            mode,
        }
    }

    fn session(viewer: &str, plays: Vec<PlayInterval>) -> ViewSession {
        ViewSession {
            viewer_id: viewer.into(),
            asset_id: "a9".into(),
            region: None,
            plays,
        }
    }

    fn asset() -> AssetInfo {
        AssetInfo::new("a9", 1_000_000.0, 3600.0).unwrap()
    }

    #[test]
    fn empty_stream_yields_nothing() {
        let parsed = parse_sessions("".as_bytes(), SessionFormat::Jsonl).unwrap();
        assert!(parsed.sessions.is_empty());
        assert!(parsed.report.is_clean());
    }

    #[test]
    fn plays_are_merged_and_sorted_by_wall_start() {
        let input = concat!(
            r#"{"viewer_id":"v1","asset_id":"a9","plays":[{"cs":0.0,"ce":10.0,"ws":100,"mode":"live"}]}"#,
            "\n",
            r#"{"viewer_id":"v1","asset_id":"a9","plays":[{"cs":5.0,"ce":8.0,"ws":50,"mode":"replay"}]}"#,
            "\n"
        );
        let parsed = parse_sessions(input.as_bytes(), SessionFormat::Jsonl).unwrap();
        assert_eq!(parsed.sessions.len(), 1);
        let ws: Vec<f64> = parsed.sessions[0].plays.iter().map(|p| p.wall_start).collect();
        assert_eq!(ws, vec![50.0, 100.0]);
    }

    #[test]
    fn malformed_line_is_reported_not_dropped_silently() {
        let input = concat!(
            r#"{"viewer_id":"v1","asset_id":"a9","plays":[{"cs":0.0,"ce":10.0,"ws":1,"mode":"live"}]}"#,
            "\n",
            r#"{"viewer_id":"v2","asset_id":"a9","plays":[{"cs":10.0,"ce":10.0,"ws":1,"mode":"live"}]}"#,
            "\n",
            r#"{"viewer_id":"v3","asset_id":"a9","plays":[{"cs":1.0,"ce":2.0,"ws":1,"mode":"replay"}]}"#,
            "\n"
        );
        let parsed = parse_sessions(input.as_bytes(), SessionFormat::Jsonl).unwrap();
        assert_eq!(parsed.sessions.len(), 2);
        assert_eq!(parsed.report.malformed.len(), 1);
        assert_eq!(parsed.report.malformed[0].line, 2);
        assert!(parsed.report.to_jsonl().starts_with(r#"{"line":2,"reason":"#));
    }

    #[test]
    fn abort_when_too_many_lines_malformed() {
        let good = r#"{"viewer_id":"v","asset_id":"a9","plays":[{"cs":0.0,"ce":1.0,"ws":1,"mode":"live"}]}"#;
        let mut input = String::new();
        for i in 0..20 {
            input.push_str(if i % 4 == 0 { "not json" } else { good });
            input.push('\n');
        }
        let err = parse_sessions(input.as_bytes(), SessionFormat::Jsonl).unwrap_err();
        assert!(matches!(err, IngestError::TooManyMalformed { malformed: 5, total: 20, .. }));

        let relaxed = ParseOptions {
            abort_fraction: 0.5,
            ..ParseOptions::default()
        };
        let parsed = parse_sessions_with(input.as_bytes(), SessionFormat::Jsonl, relaxed).unwrap();
        assert_eq!(parsed.report.malformed.len(), 5);
    }

    #[test]
    fn csv_rows_are_grouped_into_sessions() {
        let input = "viewer_id,asset_id,region,cs,ce,ws,mode\n\
                     v1,a9,US-TX,0,120.5,1576800000,live\n\
                     v1,a9,US-TX,60,75,1576805000,replay\n\
                     v2,a9,,0,30,1576800000,sideways\n";
        let parsed = parse_sessions(input.as_bytes(), SessionFormat::Csv).unwrap();
        assert_eq!(parsed.sessions.len(), 1);
        assert_eq!(parsed.sessions[0].plays.len(), 2);
        assert_eq!(parsed.sessions[0].region.as_deref(), Some("US-TX"));
        assert_eq!(parsed.report.malformed[0].line, 4);
    }

    #[test]
    fn unknown_format_is_an_error() {
        assert!(matches!("xml".parse::<SessionFormat>(), Err(IngestError::UnknownFormat(_))));
    }

    #[test]
    fn min_watch_uses_union_of_coverage() {
        let filter = ViewerBaseFilter {
            min_watch: 300.0,
            ..Default::default()
        };
        let short = session("a", vec![play(0.0, 200.0, 1e6, PlayMode::Live)]);
        let overlapping = session(
            "b",
            vec![play(0.0, 200.0, 1e6, PlayMode::Live), play(100.0, 350.0, 1e6 + 10.0, PlayMode::Replay)],
        );
        let doubled = session(
            "c",
            vec![play(0.0, 200.0, 1e6, PlayMode::Live), play(0.0, 200.0, 1e6 + 10.0, PlayMode::Replay)],
        );
        let kept = filter_viewer_base(&[short, overlapping, doubled], &filter, &asset()).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].viewer_id, "b");
    }

    #[test]
    fn vacuous_filter_keeps_everything() {
        let sessions = vec![
            session("a", vec![play(0.0, 1.0, 1e6, PlayMode::Live)]),
            session("b", vec![play(0.0, 2.0, 1e6, PlayMode::Replay)]),
        ];
        let kept = filter_viewer_base(&sessions, &ViewerBaseFilter::default(), &asset()).unwrap();
        assert_eq!(kept, sessions);
    }

    #[test]
    fn region_recency_and_replay_criteria_are_conjunctive() {
        let a = asset();
        let mut s = session("a", vec![play(0.0, 100.0, a.air_start + 3600.0, PlayMode::Replay)]);
        s.region = Some("US-TX".into());
        let filter = ViewerBaseFilter {
            min_watch: 0.0,
            region_allow: Some(["US-TX".to_string()].into()),
            max_hours_after_air: Some(2.0),
            require_replay: true,
        };
        assert!(filter.accepts(&s, &a));
        let mut other_region = s.clone();
        other_region.region = Some("US-CA".into());
        assert!(!filter.accepts(&other_region, &a));
        let mut too_late = s.clone();
        too_late.plays[0].wall_start = a.air_start + 3.0 * 3600.0;
        assert!(!filter.accepts(&too_late, &a));
        let mut live_only = s;
        live_only.plays[0].mode = PlayMode::Live;
        assert!(!filter.accepts(&live_only, &a));
    }

    #[test]
    fn asset_mismatch_is_rejected() {
        let mut s = session("a", vec![play(0.0, 1.0, 0.0, PlayMode::Live)]);
        s.asset_id = "other".into();
        let err = filter_viewer_base(&[s], &ViewerBaseFilter::default(), &asset()).unwrap_err();
        assert!(matches!(err, IngestError::AssetMismatch { .. }));
    }

    #[test]
    fn cohorts_key_on_earliest_replay() {
        let a = asset();
        let h = 3600.0;
        let early = session(
            "e",
            vec![play(0.0, 60.0, a.air_start, PlayMode::Live), play(0.0, 10.0, a.air_start + 6.0 * h, PlayMode::Replay)],
        );
        let late = session("l", vec![play(0.0, 10.0, a.air_start + 30.0 * h, PlayMode::Replay)]);
        let live_only = session("n", vec![play(0.0, 60.0, a.air_start, PlayMode::Live)]);
        let gap = session("g", vec![play(0.0, 10.0, a.air_start + 18.0 * h, PlayMode::Replay)]);
        let (e, l) = cohort_split(&[early, late, live_only, gap], &a, &CohortWindows::default()).unwrap();
        assert_eq!(e.iter().map(|s| s.viewer_id.as_str()).collect::<Vec<_>>(), ["e"]);
        assert_eq!(l.iter().map(|s| s.viewer_id.as_str()).collect::<Vec<_>>(), ["l"]);
    }

    #[test]
    fn overlapping_cohort_windows_are_rejected() {
        let windows = CohortWindows {
            early: HourRange { start: 0.0, end: 30.0 },
            late: HourRange { start: 24.0, end: 48.0 },
        };
        assert!(windows.validate().is_err());
    }
}

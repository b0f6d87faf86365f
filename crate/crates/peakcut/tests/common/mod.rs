#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use peakcut_core::events::{Event, EventPartition};
use peakcut_core::metadata::{Metadata, MetadataTag, ShotTrack};
use peakcut_core::session::write_sessions_jsonl;
use peakcut_core::synth::{generate_sessions, random_planted, SynthConfig};
use tempfile::TempDir;

pub const EVENT_COUNT: usize = 93;

pub struct Fixture {
    pub dir: TempDir,
    pub sessions: PathBuf,
    pub asset: PathBuf,
    pub meta: PathBuf,
    pub events: PathBuf,
    pub planted: Vec<(f64, f64)>,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub fn synth_config(seed: u64, n_viewers: usize) -> SynthConfig {
    SynthConfig {
        asset_id: format!("syn{seed}"),
        n_viewers,
        duration: 3600.0,
        air_start: 1_576_800_000.0,
        baseline_rewatch_p: 0.02,
        planted: random_planted(seed, 3600.0, 3, 30.0, 60.0, 0.3),
        live_watch_p: 0.9,
        rng_seed: seed,
        noise_len: 15.0,
    }
}

/// 93 points of 30 s separated by 8 s changeovers.
pub fn points() -> EventPartition {
    let events = (0..EVENT_COUNT)
        .map(|i| Event {
            start: i as f64 * 38.0,
            end: i as f64 * 38.0 + 30.0,
            label: format!("point {}", i + 1),
            attributes: [("server".to_string(), if i % 2 == 0 { "A" } else { "B" }.to_string())].into(),
        })
        .collect();
    EventPartition::new(events).unwrap()
}

pub fn fixture(seed: u64, n_viewers: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let out = generate_sessions(&synth_config(seed, n_viewers)).unwrap();
    let write = |name: &str, body: String| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let sessions = write("sessions.jsonl", write_sessions_jsonl(&out.sessions));
    let asset = write("asset.json", serde_json::to_string(&out.ground_truth.asset).unwrap());
    let planted: Vec<(f64, f64)> = out.ground_truth.planted.iter().map(|p| (p.start, p.end)).collect();
    let meta = Metadata {
        shots: Some(ShotTrack::uniform(3600.0, 10.0).unwrap()),
        tags: vec![MetadataTag {
            label: "warren".into(),
            category: "actor".into(),
            start: planted[0].0 - 5.0,
            end: planted[0].1,
            confidence: 0.9,
            source: "fixture".into(),
        }],
        captions: Vec::new(),
    };
    let meta = write("meta.json", serde_json::to_string(&meta).unwrap());
    let events = write("points.json", serde_json::to_string(&points()).unwrap());
    Fixture {
        dir,
        sessions,
        asset,
        meta,
        events,
        planted,
    }
}

pub fn peakcut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peakcut")).args(args).output().unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

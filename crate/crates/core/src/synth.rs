//! Synthetic viewer populations with planted high-interest intervals, plus the
//! oracles used to check that the pipeline recovers them.
//!
//! Each viewer draws from its own ChaCha stream derived from the seed and the
//! viewer index, so parallel and sequential generation agree exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indices, Parallelism};
use crate::interval::Span;
use crate::segment::Segment;
use crate::session::{AssetInfo, PlayInterval, PlayMode, ViewSession};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("bad synthetic config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedInterval {
    pub start: f64,
    pub end: f64,
    pub rewatch_p: f64,
}

impl PlantedInterval {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

fn default_asset_id() -> String {
    "synthetic".into()
}

fn default_air_start() -> f64 {
    1_576_800_000.0
}

fn default_noise_len() -> f64 {
    15.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default = "default_asset_id")]
    pub asset_id: String,
    pub n_viewers: usize,
    pub duration: f64,
    #[serde(default = "default_air_start")]
    pub air_start: f64,
    /// Per viewer, per planted-free gap: chance of one replay of a random noise window.
    pub baseline_rewatch_p: f64,
    pub planted: Vec<PlantedInterval>,
    pub live_watch_p: f64,
    pub rng_seed: u64,
    #[serde(default = "default_noise_len")]
    pub noise_len: f64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadConfig(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        if !(self.noise_len > 0.0) {
            return bad("noise_len must be positive".into());
        }
        let probs = [("baseline_rewatch_p", self.baseline_rewatch_p), ("live_watch_p", self.live_watch_p)]
            .into_iter()
            .chain(self.planted.iter().map(|p| ("planted rewatch_p", p.rewatch_p)));
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        let mut spans: Vec<Span> = self.planted.iter().map(PlantedInterval::span).collect();
        spans.sort_by(|a, b| a.start.total_cmp(&b.start));
        for s in &spans {
            if !(s.start >= 0.0 && s.end <= self.duration && s.end > s.start) {
                return bad(format!("planted interval [{}, {}) outside the asset", s.start, s.end));
            }
        }
        if spans.windows(2).any(|w| w[1].start < w[0].end) {
            return bad("planted intervals overlap".into());
        }
        Ok(())
    }

    pub fn asset(&self) -> AssetInfo {
        AssetInfo {
            asset_id: self.asset_id.clone(),
            air_start: self.air_start,
            duration: self.duration,
        }
    }

    /// Maximal gaps between planted intervals that can hold a noise window.
    pub fn free_gaps(&self) -> Vec<Span> {
        let mut spans: Vec<Span> = self.planted.iter().map(PlantedInterval::span).collect();
        spans.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut gaps = Vec::new();
        let mut cursor = 0.0;
        for s in spans.iter().chain(std::iter::once(&Span::new(self.duration, self.duration))) {
            if s.start - cursor >= self.noise_len {
                gaps.push(Span::new(cursor, s.start));
            }
            cursor = s.end;
        }
        gaps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub asset: AssetInfo,
    pub rng_seed: u64,
    pub planted: Vec<PlantedInterval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub sessions: Vec<ViewSession>,
    pub ground_truth: GroundTruth,
}

const HOUR: f64 = 3600.0;

fn viewer_session(cfg: &SynthConfig, gaps: &[Span], index: usize) -> Option<ViewSession> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(index as u64);
    let mut plays = Vec::new();
    let replay_at = |rng: &mut ChaCha8Rng| cfg.air_start + rng.random_range(0.5 * HOUR..48.0 * HOUR);
    if rng.random_bool(cfg.live_watch_p) {
        plays.push(PlayInterval {
            content_start: 0.0,
            content_end: cfg.duration,
            wall_start: cfg.air_start,
            mode: PlayMode::Live,
        });
    }
    for p in &cfg.planted {
        if rng.random_bool(p.rewatch_p) {
            plays.push(PlayInterval {
                content_start: p.start,
                content_end: p.end,
                wall_start: replay_at(&mut rng),
                mode: PlayMode::Replay,
            });
        }
    }
    for gap in gaps {
        if rng.random_bool(cfg.baseline_rewatch_p) {
            let latest = gap.end - cfg.noise_len;
            let start = if latest > gap.start { rng.random_range(gap.start..latest) } else { gap.start };
            plays.push(PlayInterval {
                content_start: start,
                content_end: start + cfg.noise_len,
                wall_start: replay_at(&mut rng),
                mode: PlayMode::Replay,
            });
        }
    }
    if plays.is_empty() {
        return None;
    }
    plays.sort_by(|a, b| a.wall_start.total_cmp(&b.wall_start));
    Some(ViewSession {
        viewer_id: format!("syn-{index:06}"),
        asset_id: cfg.asset_id.clone(),
        region: None,
        plays,
    })
}

/// Generates one session per viewer who watched anything.
pub fn generate_sessions(cfg: &SynthConfig) -> Result<SynthOutput, SynthError> {
    generate_sessions_with(cfg, Parallelism::default())
}

pub fn generate_sessions_with(cfg: &SynthConfig, mode: Parallelism) -> Result<SynthOutput, SynthError> {
    cfg.validate()?;
    let gaps = cfg.free_gaps();
    let sessions = map_indices(mode, cfg.n_viewers, |i| viewer_session(cfg, &gaps, i))
        .into_iter()
        .flatten()
        .collect();
    Ok(SynthOutput {
        sessions,
        ground_truth: GroundTruth {
            asset: cfg.asset(),
            rng_seed: cfg.rng_seed,
            planted: cfg.planted.clone(),
        },
    })
}

/// Places `count` disjoint planted intervals of `len` seconds at whole-second
/// offsets, at least `margin` seconds from each other and from the asset edges.
pub fn random_planted(seed: u64, duration: f64, count: usize, len: f64, margin: f64, rewatch_p: f64) -> Vec<PlantedInterval> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out: Vec<PlantedInterval> = Vec::with_capacity(count);
    let hi = (duration - len - margin).floor();
    let mut attempts = 0;
    while out.len() < count && attempts < 10_000 {
        attempts += 1;
        let start = rng.random_range(margin.ceil()..hi.max(margin.ceil() + 1.0)).floor();
        let candidate = Span::new(start, start + len);
        let clear = out
            .iter()
            .all(|p| candidate.start >= p.end + margin || candidate.end + margin <= p.start);
        if clear {
            out.push(PlantedInterval {
                start: candidate.start,
                end: candidate.end,
                rewatch_p,
            });
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// Best IoU against any detection, one entry per planted interval.
    pub best_iou: Vec<f64>,
    /// Detections that overlap no planted interval.
    pub false_positives: Vec<Span>,
}

impl RecoveryReport {
    pub fn min_iou(&self) -> f64 {
        self.best_iou.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn recovery_report(planted: &[Span], detected: &[Segment]) -> RecoveryReport {
    let best_iou = planted
        .iter()
        .map(|p| detected.iter().map(|d| p.iou(&d.span())).fold(0.0, f64::max))
        .collect();
    let false_positives = detected
        .iter()
        .map(Segment::span)
        .filter(|d| planted.iter().all(|p| p.overlap(d) == 0.0))
        .collect();
    RecoveryReport { best_iou, false_positives }
}

/// Quantile by rank counting, written independently of the detector: the
/// order statistic of rank `r` is the value with at most `r` values strictly
/// below it and more than `r` values at or below it.
pub fn brute_force_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty slice");
    let order_stat = |rank: usize| -> f64 {
        for &v in values {
            let below = values.iter().filter(|&&x| x < v).count();
            let at_or_below = values.iter().filter(|&&x| x <= v).count();
            if below <= rank && rank < at_or_below {
                return v;
            }
        }
        unreachable!("every rank has an order statistic")
    };
    let pos = q * (values.len() - 1) as f64;
    let lo_rank = pos.floor() as usize;
    let frac = pos - lo_rank as f64;
    let lo = order_stat(lo_rank);
    if frac == 0.0 {
        return lo;
    }
    let hi = order_stat(lo_rank + 1);
    lo + frac * (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::SegmentSource;

    fn config(seed: u64) -> SynthConfig {
        SynthConfig {
            asset_id: "syn".into(),
            n_viewers: 300,
            duration: 600.0,
            air_start: 1_000_000.0,
            baseline_rewatch_p: 0.05,
            planted: vec![PlantedInterval {
                start: 100.0,
                end: 130.0,
                rewatch_p: 0.3,
            }],
            live_watch_p: 0.9,
            rng_seed: seed,
            noise_len: 15.0,
        }
    }

    #[test]
    fn deterministic_under_seed_and_mode() {
        let a = generate_sessions_with(&config(7), Parallelism::Parallel).unwrap();
        let b = generate_sessions_with(&config(7), Parallelism::Sequential).unwrap();
        assert_eq!(a, b);
        let c = generate_sessions(&config(8)).unwrap();
        assert_ne!(a.sessions, c.sessions);
    }

    #[test]
    fn zero_rewatch_means_no_replays() {
        let mut cfg = config(1);
        cfg.baseline_rewatch_p = 0.0;
        cfg.planted[0].rewatch_p = 0.0;
        let out = generate_sessions(&cfg).unwrap();
        assert!(out.sessions.iter().all(|s| !s.has_replay()));
    }

    #[test]
    fn bad_configs() {
        let mut cfg = config(1);
        cfg.live_watch_p = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = config(1);
        cfg.planted.push(PlantedInterval {
            start: 120.0,
            end: 140.0,
            rewatch_p: 0.1,
        });
        assert!(cfg.validate().is_err());
        let mut cfg = config(1);
        cfg.planted[0].end = 700.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn free_gaps_skip_planted() {
        let gaps = config(1).free_gaps();
        assert_eq!(gaps, vec![Span::new(0.0, 100.0), Span::new(130.0, 600.0)]);
    }

    #[test]
    fn random_planted_is_disjoint_with_margin() {
        let p = random_planted(3, 3600.0, 3, 30.0, 60.0, 0.3);
        assert_eq!(p.len(), 3);
        for w in p.windows(2) {
            assert!(w[1].start >= w[0].end + 60.0);
        }
        assert!(p[0].start >= 60.0 && p[2].end <= 3540.0);
    }

    #[test]
    fn recovery_examples() {
        let planted = [Span::new(100.0, 130.0)];
        let exact = [Segment::new(100.0, 130.0, 1.0, SegmentSource::V1Seed)];
        assert_eq!(recovery_report(&planted, &exact).best_iou, vec![1.0]);

        let none = recovery_report(&planted, &[]);
        assert_eq!(none.best_iou, vec![0.0]);
        assert!(none.false_positives.is_empty());

        let wide = [
            Segment::new(95.0, 135.0, 1.0, SegmentSource::V1Seed),
            Segment::new(400.0, 415.0, 1.0, SegmentSource::V1Seed),
        ];
        let r = recovery_report(&planted, &wide);
        assert_eq!(r.best_iou, vec![0.75]);
        assert_eq!(r.false_positives, vec![Span::new(400.0, 415.0)]);
    }

    #[test]
    fn brute_force_quantile_examples() {
        assert_eq!(brute_force_quantile(&[1.0, 2.0, 3.0, 4.0, 100.0], 0.75), 4.0);
        assert_eq!(brute_force_quantile(&[100.0, 4.0, 1.0, 3.0, 2.0], 0.25), 2.0);
        assert_eq!(brute_force_quantile(&[5.5], 0.3), 5.5);
        let v = [3.0, -1.0, 8.0, 2.0];
        assert_eq!(brute_force_quantile(&v, 0.0), -1.0);
        assert_eq!(brute_force_quantile(&v, 1.0), 8.0);
        assert_eq!(brute_force_quantile(&[1.0, 1.0, 1.0, 5.0], 0.5), 1.0);
        assert_eq!(brute_force_quantile(&[0.0, 10.0], 0.25), 2.5);
    }
}

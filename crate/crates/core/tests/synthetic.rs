use peakcut_core::pipeline::v1_seeds;
use peakcut_core::refine::{pre_snap, RefineConfig};
use peakcut_core::synth::{generate_sessions, random_planted, recovery_report, PlantedInterval, SynthConfig};
use peakcut_core::timeline::{compute_rewatch_timeline, normalize, TimelineParams};
use peakcut_core::{IqrConfig, PlayMode};

fn config(seed: u64, planted: Vec<PlantedInterval>) -> SynthConfig {
    SynthConfig {
        asset_id: "syn".into(),
        n_viewers: 2000,
        duration: 3600.0,
        air_start: 1_576_800_000.0,
        baseline_rewatch_p: 0.02,
        planted,
        live_watch_p: 0.9,
        rng_seed: seed,
        noise_len: 15.0,
    }
}

#[test]
fn planted_interval_holds_the_argmax() {
    let mut hits = 0;
    for seed in 0..20 {
        let planted = vec![PlantedInterval {
            start: 100.0,
            end: 130.0,
            rewatch_p: 0.3,
        }];
        let out = generate_sessions(&config(seed, planted)).unwrap();
        let tl = compute_rewatch_timeline(&out.sessions, &out.ground_truth.asset, &TimelineParams::default()).unwrap();
        let argmax = tl
            .raw
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0;
        if (100..130).contains(&argmax) {
            hits += 1;
        }
    }
    assert!(hits >= 19, "argmax inside the planted interval for {hits}/20 seeds");
}

#[test]
fn replay_frequency_converges_to_rewatch_p() {
    let p = 0.3;
    let planted = vec![PlantedInterval {
        start: 500.0,
        end: 530.0,
        rewatch_p: p,
    }];
    let mut cfg = config(11, planted);
    cfg.n_viewers = 20_000;
    cfg.live_watch_p = 1.0;
    let out = generate_sessions(&cfg).unwrap();
    let n = out.sessions.len() as f64;
    let replays = out
        .sessions
        .iter()
        .filter(|s| s.plays.iter().any(|pl| pl.mode == PlayMode::Replay && pl.content_start == 500.0 && pl.content_end == 530.0))
        .count() as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    assert!((replays - n * p).abs() <= 3.0 * sigma, "{replays} replays out of {n}");
}

#[test]
fn noise_replays_are_generated() {
    let out = generate_sessions(&config(5, Vec::new())).unwrap();
    let noise = out
        .sessions
        .iter()
        .flat_map(|s| &s.plays)
        .filter(|p| p.mode == PlayMode::Replay)
        .count();
    // about 2% of 2000 viewers, one gap each
    assert!((20..=70).contains(&noise), "{noise} noise replays");
}

#[test]
fn v1_recovers_three_planted_intervals() {
    let mut passing = 0;
    for seed in 0..20 {
        let planted = random_planted(seed, 3600.0, 3, 30.0, 60.0, 0.3);
        let out = generate_sessions(&config(seed, planted.clone())).unwrap();
        let asset = &out.ground_truth.asset;
        let tl = normalize(compute_rewatch_timeline(&out.sessions, asset, &TimelineParams::default()).unwrap());
        let seeds = v1_seeds(&tl, &IqrConfig::default(), asset.duration).unwrap();
        let clips = pre_snap(&seeds, asset.duration, &RefineConfig::default()).unwrap();
        let spans: Vec<_> = planted.iter().map(PlantedInterval::span).collect();
        let report = recovery_report(&spans, &clips);
        if report.min_iou() >= 0.8 && report.false_positives.iter().all(|f| f.len() <= 15.0) {
            passing += 1;
        }
    }
    assert!(passing >= 19, "{passing}/20 seeds recovered");
}

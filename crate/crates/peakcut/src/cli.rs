//! Command-line interface. Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use peakcut_core::compare::{agreement_stats, build_matrix, ClipAnnotation, ComparisonMatrix, SourceCorpus};
use peakcut_core::pipeline::{build_reel, build_timeline, run_on_timeline, run_pipeline};
use peakcut_core::reel::{export_cutlist, reel_stats, BumperPolicy, ExternalClip, PipelineKind};
use peakcut_core::refine::SnapMode;
use peakcut_core::session::{cohort_split, filter_viewer_base, write_sessions_jsonl, Cohort, HourRange, ParseOptions, SessionFormat};
use peakcut_core::synth::{generate_sessions, random_planted, SynthConfig};
use peakcut_core::timeline::{cohort_timelines, RewatchTimeline};
use peakcut_core::{AssetInfo, AssetInputs, CutlistFormat, Parallelism, PipelineConfig};
use serde::Deserialize;
use thiserror::Error;

use crate::inputs::{load_asset, load_events, load_metadata, load_sessions, read_json, InputError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
        }
    }

    fn data(e: impl ToString) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<peakcut_core::PipelineError> for CliError {
    fn from(e: peakcut_core::PipelineError) -> Self {
        Self::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "peakcut", version, about = "Rewatch-driven highlight curation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a session log and write it back as normalized JSONL.
    Ingest(IngestArgs),
    /// Compute the normalized rewatch timeline.
    Timeline(TimelineArgs),
    /// Detect peaks, refine them and write a reel.
    V1(V1Args),
    /// Rank events by mean rewatch and write a reel of the top ones.
    V2(V2Args),
    /// Timelines for the early and late rewatch cohorts.
    Cohorts(CohortsArgs),
    /// Agreement statistics between highlight summaries.
    Compare(CompareArgs),
    /// Generate a synthetic population with planted peaks.
    Synth(SynthArgs),
    /// Start the curation service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Session log (JSONL, or CSV when the name ends in .csv).
    #[arg(long)]
    pub sessions: Option<PathBuf>,
    /// Asset description: {"asset_id","air_start","duration"}.
    #[arg(long)]
    pub asset: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<SessionFormat>,
    /// Fail when more than this fraction of records is malformed.
    #[arg(long, default_value_t = 0.10)]
    pub abort_fraction: f64,
}

#[derive(Debug, Args)]
pub struct BaseArgs {
    /// JSON pipeline config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub min_watch: Option<f64>,
    /// Allowed region code; repeat for several.
    #[arg(long = "region")]
    pub regions: Vec<String>,
    #[arg(long)]
    pub max_hours: Option<f64>,
    #[arg(long)]
    pub require_replay: bool,
    #[arg(long, value_parser = parse_cohort)]
    pub cohort: Option<Cohort>,
    /// Early cohort hours as `start,end`.
    #[arg(long, value_parser = parse_hours)]
    pub early: Option<HourRange>,
    /// Late cohort hours as `start,end`.
    #[arg(long, value_parser = parse_hours)]
    pub late: Option<HourRange>,
    #[arg(long)]
    pub bin: Option<f64>,
    #[arg(long)]
    pub window: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// IQR fence multiplier.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub merge_gap: Option<f64>,
    #[arg(long)]
    pub min_len: Option<f64>,
    #[arg(long, value_parser = parse_snap)]
    pub snap: Option<SnapMode>,
    /// Tag expression, e.g. `actor:warren AND emotion:anger`.
    #[arg(long)]
    pub tags: Option<String>,
    #[arg(long)]
    pub tag_min_overlap: Option<f64>,
    #[arg(long)]
    pub max_total: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReelArgs {
    /// Header clip as `uri@seconds`.
    #[arg(long)]
    pub header: Option<ExternalClip>,
    /// Bumper clip as `uri@seconds`; repeat for several.
    #[arg(long = "bumper")]
    pub bumpers: Vec<ExternalClip>,
    /// between_all, between_none or every_n(N).
    #[arg(long)]
    pub bumper_policy: Option<BumperPolicy>,
    /// Reel JSON path; the text cut list goes next to it with a .txt extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the malformed-record report (JSONL).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TimelineArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    /// Emit `bin_start_s,raw,normalized` CSV instead of JSON.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct V1Args {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    #[command(flatten)]
    pub refine: RefineArgs,
    #[command(flatten)]
    pub reel: ReelArgs,
    /// Metadata JSON with shots and tags.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct V2Args {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    #[command(flatten)]
    pub refine: RefineArgs,
    #[command(flatten)]
    pub reel: ReelArgs,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Event partition JSON.
    #[arg(long)]
    pub events: PathBuf,
    /// Number of events to keep.
    #[arg(long)]
    pub top: Option<usize>,
    /// Precomputed timeline JSON, instead of --sessions/--asset.
    #[arg(long)]
    pub timeline: Option<PathBuf>,
    /// Merge close clips and expand short ones before snapping.
    #[arg(long)]
    pub merge_expand: bool,
}

#[derive(Debug, Args)]
pub struct CohortsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Selection matrix TSV.
    #[arg(long, conflicts_with = "clips")]
    pub matrix: Option<PathBuf>,
    /// Reference clip annotations: {"clips":[{"key","description",...}]}.
    #[arg(long)]
    pub clips: Option<PathBuf>,
    /// Source corpus JSON; repeat for several.
    #[arg(long = "corpus", requires = "clips")]
    pub corpora: Vec<PathBuf>,
    /// Reference source name.
    #[arg(long)]
    pub reference: String,
    /// Write the built matrix as TSV.
    #[arg(long, requires = "clips")]
    pub emit_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// SynthConfig JSON. Without it, three random 30 s peaks on a 3600 s asset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub viewers: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Persistence root.
    #[arg(long, env = "PEAKCUT_DATA_DIR", default_value = "peakcut-data")]
    pub data_dir: PathBuf,
}

fn parse_format(s: &str) -> Result<SessionFormat, String> {
    s.parse::<SessionFormat>().map_err(|e| e.to_string())
}

fn parse_cohort(s: &str) -> Result<Cohort, String> {
    s.parse()
}

fn parse_snap(s: &str) -> Result<SnapMode, String> {
    s.parse()
}

fn parse_hours(s: &str) -> Result<HourRange, String> {
    let (a, b) = s.split_once(',').ok_or("expected `start,end`")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok(HourRange { start: num(a)?, end: num(b)? })
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Data(format!("stdout: {e}"))),
    }
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

fn parse_options(source: &SourceArgs) -> Result<ParseOptions, CliError> {
    if !(0.0..=1.0).contains(&source.abort_fraction) {
        return Err(CliError::Usage("--abort-fraction must be within [0, 1]".into()));
    }
    Ok(ParseOptions {
        abort_fraction: source.abort_fraction,
        ..ParseOptions::default()
    })
}

fn load_inputs(source: &SourceArgs, meta: Option<&Path>, events: Option<&Path>) -> Result<AssetInputs, CliError> {
    let (asset_path, sessions_path) = (require(&source.asset, "asset")?, require(&source.sessions, "sessions")?);
    let asset = load_asset(asset_path)?;
    let sessions = load_sessions(sessions_path, source.format, &parse_options(source)?)?.sessions;
    Ok(AssetInputs {
        asset,
        sessions,
        metadata: meta.map(load_metadata).transpose()?.unwrap_or_default(),
        events: events.map(load_events).transpose()?,
    })
}

impl BaseArgs {
    fn config(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg: PipelineConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.min_watch {
            cfg.filter.min_watch = v;
        }
        if !self.regions.is_empty() {
            cfg.filter.region_allow = Some(self.regions.iter().cloned().collect::<BTreeSet<_>>());
        }
        if let Some(v) = self.max_hours {
            cfg.filter.max_hours_after_air = Some(v);
        }
        cfg.filter.require_replay |= self.require_replay;
        if let Some(v) = self.cohort {
            cfg.cohort = v;
        }
        if let Some(v) = self.early {
            cfg.cohort_windows.early = v;
        }
        if let Some(v) = self.late {
            cfg.cohort_windows.late = v;
        }
        if let Some(v) = self.bin {
            cfg.timeline.bin = v;
        }
        if let Some(v) = self.window {
            cfg.timeline.window = v;
        }
        Ok(cfg)
    }
}

impl RefineArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.k {
            cfg.iqr.k = v;
        }
        let r = &mut cfg.refine;
        if let Some(v) = self.merge_gap {
            r.merge_gap = v;
        }
        if let Some(v) = self.min_len {
            r.min_len = v;
        }
        if let Some(v) = self.snap {
            r.snap_mode = v;
        }
        if let Some(v) = &self.tags {
            r.tag_expr = Some(v.clone());
        }
        if let Some(v) = self.tag_min_overlap {
            r.tag_min_overlap = v;
        }
        if let Some(v) = self.max_total {
            r.max_total = Some(v);
        }
    }
}

impl ReelArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(h) = &self.header {
            cfg.reel.header = Some(h.clone());
        }
        if !self.bumpers.is_empty() {
            cfg.reel.bumpers = self.bumpers.clone();
        }
        if let Some(p) = self.bumper_policy {
            cfg.reel.bumper_policy = p;
        }
    }
}

fn validated(cfg: PipelineConfig) -> Result<PipelineConfig, CliError> {
    cfg.validate().map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Timeline(a) => timeline(a),
        Command::V1(a) => v1(a),
        Command::V2(a) => v2(a),
        Command::Cohorts(a) => cohorts(a),
        Command::Compare(a) => compare(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => crate::service::serve(&a.host, a.port, a.data_dir).map_err(CliError::data),
    }
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let parsed = load_sessions(require(&a.source.sessions, "sessions")?, a.source.format, &parse_options(&a.source)?)?;
    if let Some(path) = &a.source.asset {
        let asset = load_asset(path)?;
        for s in &parsed.sessions {
            asset.check(s).map_err(CliError::data)?;
        }
    }
    if let Some(path) = &a.report {
        write_output(Some(path), parsed.report.to_jsonl().as_bytes())?;
    }
    if let Some(path) = &a.out {
        write_output(Some(path), write_sessions_jsonl(&parsed.sessions).as_bytes())?;
    }
    let summary = serde_json::json!({
        "sessions": parsed.sessions.len(),
        "records": parsed.report.total_records,
        "malformed": parsed.report.malformed.len(),
    });
    println!("{summary}");
    Ok(())
}

fn timeline(a: TimelineArgs) -> Result<(), CliError> {
    let cfg = validated(a.base.config()?)?;
    let inputs = load_inputs(&a.source, None, None)?;
    let tl = build_timeline(&inputs, &cfg, Parallelism::default())?;
    let body = if a.csv { tl.to_csv() } else { tl.to_json() + "\n" };
    write_output(a.out.as_deref(), body.as_bytes())
}

fn write_reel(asset_id: &str, clips: Vec<peakcut_core::Segment>, cfg: &PipelineConfig, tl: &RewatchTimeline, out: Option<&Path>) -> Result<(), CliError> {
    let reel = build_reel(asset_id, clips, cfg, tl)?;
    let json = export_cutlist(&reel, CutlistFormat::Json);
    match out {
        Some(path) => {
            write_output(Some(path), &json)?;
            write_output(Some(&path.with_extension("txt")), &export_cutlist(&reel, CutlistFormat::ConcatTxt))?;
            let duration = tl.len() as f64 * tl.bin;
            eprintln!("{}", serde_json::to_string(&reel_stats(&reel, duration)).expect("stats serialize"));
            Ok(())
        }
        None => write_output(None, &json),
    }
}

fn v1(a: V1Args) -> Result<(), CliError> {
    let mut cfg = a.base.config()?;
    cfg.pipeline = PipelineKind::V1;
    a.refine.apply(&mut cfg);
    a.reel.apply(&mut cfg);
    let cfg = validated(cfg)?;
    let inputs = load_inputs(&a.source, a.meta.as_deref(), None)?;
    let run = run_pipeline(&inputs, &cfg, Parallelism::default())?;
    write_reel(&inputs.asset.asset_id, run.segments, &cfg, &run.timeline, a.reel.out.as_deref())
}

fn v2(a: V2Args) -> Result<(), CliError> {
    let mut cfg = a.base.config()?;
    cfg.pipeline = PipelineKind::V2;
    a.refine.apply(&mut cfg);
    a.reel.apply(&mut cfg);
    if let Some(k) = a.top {
        cfg.v2.k = k;
    }
    cfg.v2.merge_expand |= a.merge_expand;
    let cfg = validated(cfg)?;
    let events = load_events(&a.events)?;
    let meta = a.meta.as_deref().map(load_metadata).transpose()?.unwrap_or_default();
    let run = match &a.timeline {
        Some(path) => {
            let tl: RewatchTimeline = read_json(path)?;
            let asset = match &a.source.asset {
                Some(p) => load_asset(p)?,
                None => AssetInfo::new(tl.asset_id.clone(), 0.0, tl.len() as f64 * tl.bin).map_err(CliError::Data)?,
            };
            let inputs = AssetInputs {
                asset,
                sessions: Vec::new(),
                metadata: meta,
                events: Some(events),
            };
            run_on_timeline(tl, &inputs, &cfg)?
        }
        None => {
            if a.source.sessions.is_none() {
                return Err(CliError::Usage("v2 needs --timeline, or --sessions with --asset".into()));
            }
            let mut inputs = load_inputs(&a.source, None, None)?;
            inputs.metadata = meta;
            inputs.events = Some(events);
            run_pipeline(&inputs, &cfg, Parallelism::default())?
        }
    };
    let asset_id = run.timeline.asset_id.clone();
    write_reel(&asset_id, run.segments, &cfg, &run.timeline, a.reel.out.as_deref())
}

fn cohorts(a: CohortsArgs) -> Result<(), CliError> {
    let cfg = validated(a.base.config()?)?;
    let inputs = load_inputs(&a.source, None, None)?;
    let base = filter_viewer_base(&inputs.sessions, &cfg.filter, &inputs.asset).map_err(CliError::data)?;
    let (early, late) = cohort_split(&base, &inputs.asset, &cfg.cohort_windows).map_err(CliError::data)?;
    let (e, l) = cohort_timelines(&early, &late, &inputs.asset, &cfg.timeline).map_err(CliError::data)?;
    let doc = serde_json::json!({
        "asset_id": inputs.asset.asset_id,
        "windows": cfg.cohort_windows,
        "early": e,
        "late": l,
    });
    write_output(a.out.as_deref(), (doc.to_string() + "\n").as_bytes())
}

#[derive(Deserialize)]
struct ClipFile {
    clips: Vec<ClipAnnotation>,
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let (matrix, vacuous) = match (&a.matrix, &a.clips) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            (ComparisonMatrix::from_tsv(&text).map_err(CliError::data)?, Vec::new())
        }
        (None, Some(path)) => {
            let clips: ClipFile = read_json(path)?;
            let corpora: Vec<SourceCorpus> = a.corpora.iter().map(|p| read_json(p)).collect::<Result<_, _>>()?;
            let built = build_matrix(&clips.clips, &corpora).map_err(CliError::data)?;
            let mut sources = vec![a.reference.clone()];
            sources.extend(built.matrix.sources.iter().cloned());
            let present = built
                .matrix
                .present
                .iter()
                .map(|row| std::iter::once(true).chain(row.iter().copied()).collect())
                .collect();
            let m = ComparisonMatrix::new(built.matrix.keys.clone(), sources, present).map_err(CliError::data)?;
            if let Some(out) = &a.emit_matrix {
                write_output(Some(out), m.to_tsv().as_bytes())?;
            }
            (m, built.vacuous_keys)
        }
        _ => return Err(CliError::Usage("compare needs --matrix or --clips".into())),
    };
    let stats = agreement_stats(&matrix, &a.reference).map_err(|e| CliError::Usage(e.to_string()))?;
    let doc = serde_json::json!({ "stats": stats, "vacuous_keys": vacuous });
    println!("{}", serde_json::to_string_pretty(&doc).expect("stats serialize"));
    Ok(())
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

fn default_synth(seed: u64) -> SynthConfig {
    SynthConfig {
        asset_id: "synthetic".into(),
        n_viewers: 2000,
        duration: 3600.0,
        air_start: 1_576_800_000.0,
        baseline_rewatch_p: 0.02,
        planted: random_planted(seed, 3600.0, 3, 30.0, 60.0, 0.3),
        live_watch_p: 0.9,
        rng_seed: seed,
        noise_len: 15.0,
    }
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => read_json::<SynthConfig>(p)?,
        None => default_synth(a.seed.unwrap_or(0)),
    };
    if let Some(seed) = a.seed {
        cfg.rng_seed = seed;
    }
    if let Some(n) = a.viewers {
        cfg.n_viewers = n;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out = generate_sessions(&cfg).map_err(CliError::data)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::Data(format!("{}: {e}", a.out_dir.display())))?;
    write_output(Some(&a.out_dir.join("sessions.jsonl")), write_sessions_jsonl(&out.sessions).as_bytes())?;
    write_output(Some(&a.out_dir.join("asset.json")), pretty(&out.ground_truth.asset).as_bytes())?;
    write_output(Some(&a.out_dir.join("ground_truth.json")), pretty(&out.ground_truth).as_bytes())?;
    println!(
        "{}",
        serde_json::json!({"sessions": out.sessions.len(), "planted": out.ground_truth.planted})
    );
    Ok(())
}

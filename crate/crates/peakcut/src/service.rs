//! HTTP curation service under `/api/v1`.
//!
//! Each asset has its own lock: reads share it, mutations take it exclusively,
//! so writes to one asset are serialized while other assets proceed. State is
//! saved as `<data_dir>/assets/<asset_id>.json` after every mutation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use peakcut_core::curation::{CurationError, CurationSession, ReviewAction};
use peakcut_core::detect::upper_fence;
use peakcut_core::pipeline::{build_reel, build_timeline, run_on_timeline, run_pipeline};
use peakcut_core::reel::export_cutlist;
use peakcut_core::session::Cohort;
use peakcut_core::{AssetInputs, CutlistFormat, Parallelism, PipelineConfig, PipelineError, PipelineRun};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;

use crate::inputs::InputPaths;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        Self {
            status,
            message: message.to_string(),
        }
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what}"))
    }

    fn invalid(message: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<CurationError> for ApiError {
    fn from(e: CurationError) -> Self {
        match e {
            CurationError::StaleRevision { .. } => Self::new(StatusCode::CONFLICT, e),
            CurationError::UnknownSegment(id) => Self::not_found(format_args!("segment `{id}`")),
            CurationError::InvalidTrim(_) | CurationError::Pipeline(_) => Self::invalid(e),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        Self::invalid(e)
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Persisted {
    paths: InputPaths,
    session: CurationSession,
}

struct AssetEntry {
    paths: InputPaths,
    inputs: AssetInputs,
    run: PipelineRun,
    session: CurationSession,
}

impl AssetEntry {
    fn summary(&self) -> Value {
        json!({
            "asset_id": self.session.asset_id,
            "duration": self.inputs.asset.duration,
            "sessions": self.inputs.sessions.len(),
            "pipeline": self.session.config.pipeline,
            "revision": self.session.revision,
            "candidates": self.session.candidates.len(),
        })
    }

    fn segments_view(&self) -> Value {
        let fence = upper_fence(&self.run.timeline.normalized, &self.session.config.iqr)
            .ok()
            .map(|f| json!({"q1": f.q1, "q3": f.q3, "upper": f.upper}));
        json!({
            "asset_id": self.session.asset_id,
            "revision": self.session.revision,
            "config": self.session.config,
            "fence": fence,
            "candidates": self.session.candidates,
        })
    }
}

pub struct AppState {
    data_dir: PathBuf,
    assets: RwLock<BTreeMap<String, Arc<RwLock<AssetEntry>>>>,
}

impl AppState {
    /// Opens the data directory and reloads every persisted asset.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, String> {
        let data_dir = data_dir.into();
        let dir = data_dir.join("assets");
        fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let mut assets = BTreeMap::new();
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let saved: Persisted = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let inputs = saved.paths.load().map_err(|e| e.to_string())?;
            let run = run_pipeline(&inputs, &saved.session.config, Parallelism::default()).map_err(|e| e.to_string())?;
            let entry = AssetEntry {
                paths: saved.paths,
                inputs,
                run,
                session: saved.session,
            };
            assets.insert(entry.session.asset_id.clone(), Arc::new(RwLock::new(entry)));
        }
        Ok(Self {
            data_dir,
            assets: RwLock::new(assets),
        })
    }

    async fn entry(&self, id: &str) -> ApiResult<Arc<RwLock<AssetEntry>>> {
        self.assets
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format_args!("asset `{id}`")))
    }

    fn state_path(&self, asset_id: &str) -> PathBuf {
        self.data_dir.join("assets").join(format!("{asset_id}.json"))
    }

    fn persist(&self, entry: &AssetEntry) -> ApiResult<()> {
        let saved = Persisted {
            paths: entry.paths.clone(),
            session: entry.session.clone(),
        };
        let text = serde_json::to_string_pretty(&saved).map_err(ApiError::internal)?;
        write_atomic(&self.state_path(&entry.session.asset_id), text.as_bytes()).map_err(ApiError::internal)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/assets", get(list_assets).post(register_asset))
        .route("/assets/{id}/timeline", get(get_timeline))
        .route("/assets/{id}/segments", get(get_segments))
        .route("/assets/{id}/config", patch(patch_config))
        .route("/assets/{id}/segments/{seg}/status", post(set_status))
        .route("/assets/{id}/export", post(export))
        .route("/assets/{id}/tags", get(get_tags));
    Router::new().nest("/api/v1", api).with_state(state)
}

async fn list_assets(State(state): State<Arc<AppState>>) -> Json<Value> {
    let assets = state.assets.read().await;
    let mut out = Vec::with_capacity(assets.len());
    for entry in assets.values() {
        out.push(entry.read().await.summary());
    }
    Json(json!({ "assets": out }))
}

#[derive(Debug, Deserialize)]
struct Registration {
    #[serde(flatten)]
    paths: InputPaths,
    #[serde(default)]
    config: Option<PipelineConfig>,
}

async fn register_asset(State(state): State<Arc<AppState>>, Json(body): Json<Registration>) -> ApiResult<Response> {
    let config = body.config.unwrap_or_default();
    config.validate()?;
    let paths = body.paths;
    let (inputs, run) = tokio::task::spawn_blocking({
        let paths = paths.clone();
        let config = config.clone();
        move || -> ApiResult<(AssetInputs, PipelineRun)> {
            let inputs = paths.load().map_err(ApiError::invalid)?;
            let run = run_pipeline(&inputs, &config, Parallelism::default())?;
            Ok((inputs, run))
        }
    })
    .await
    .map_err(ApiError::internal)??;
    let id = inputs.asset.asset_id.clone();
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(ApiError::invalid(format!("asset id `{id}` cannot be used as a file name")));
    }
    let mut assets = state.assets.write().await;
    if assets.contains_key(&id) {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("asset `{id}` is already registered")));
    }
    let session = CurationSession::new(&id, inputs.asset.duration, config, &run);
    let entry = AssetEntry {
        paths,
        inputs,
        run,
        session,
    };
    state.persist(&entry)?;
    let summary = entry.summary();
    assets.insert(id, Arc::new(RwLock::new(entry)));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

#[derive(Debug, Deserialize)]
struct CohortQuery {
    cohort: Option<String>,
}

async fn get_timeline(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<CohortQuery>,
) -> ApiResult<Response> {
    let entry = state.entry(&id).await?;
    let guard = entry.read().await;
    let cohort = match q.cohort.as_deref() {
        None => guard.session.config.cohort,
        Some(c) => c.parse::<Cohort>().map_err(ApiError::invalid)?,
    };
    let body = if cohort == guard.session.config.cohort {
        guard.run.timeline.to_json()
    } else {
        let cfg = PipelineConfig {
            cohort,
            ..guard.session.config.clone()
        };
        build_timeline(&guard.inputs, &cfg, Parallelism::default())?.to_json()
    };
    Ok(json_bytes(body.into_bytes()))
}

async fn get_segments(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let entry = state.entry(&id).await?;
    let guard = entry.read().await;
    Ok(Json(guard.segments_view()))
}

#[derive(Debug, Deserialize)]
struct ConfigPatch {
    revision: u64,
    config: Value,
}

/// Recursively overlays `patch` onto `base`; objects merge, anything else replaces.
fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge_json(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

async fn patch_config(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<ConfigPatch>,
) -> ApiResult<Json<Value>> {
    let entry = state.entry(&id).await?;
    let mut guard = entry.write().await;
    let mut merged = serde_json::to_value(&guard.session.config).map_err(ApiError::internal)?;
    merge_json(&mut merged, body.config);
    let config: PipelineConfig = serde_json::from_value(merged).map_err(|e| ApiError::invalid(format!("invalid config: {e}")))?;
    let entry_ref = &mut *guard;
    let inputs = &entry_ref.inputs;
    let previous = &entry_ref.run;
    let old = &entry_ref.session.config;
    let same_timeline =
        old.filter == config.filter && old.cohort == config.cohort && old.cohort_windows == config.cohort_windows && old.timeline == config.timeline;
    let mut new_run = None;
    entry_ref.session.update_config(body.revision, config, |cfg| {
        let run = if same_timeline {
            run_on_timeline(previous.timeline.clone(), inputs, cfg)?
        } else {
            run_pipeline(inputs, cfg, Parallelism::default())?
        };
        new_run = Some(run.clone());
        Ok(run)
    })?;
    if let Some(run) = new_run {
        entry_ref.run = run;
    }
    state.persist(entry_ref)?;
    Ok(Json(entry_ref.segments_view()))
}

#[derive(Debug, Deserialize)]
struct StatusBody {
    revision: u64,
    #[serde(flatten)]
    action: ReviewAction,
}

async fn set_status(
    State(state): State<Arc<AppState>>,
    UrlPath((id, seg)): UrlPath<(String, String)>,
    Json(body): Json<StatusBody>,
) -> ApiResult<Json<Value>> {
    let entry = state.entry(&id).await?;
    let mut guard = entry.write().await;
    guard.session.review(body.revision, &seg, body.action)?;
    state.persist(&guard)?;
    Ok(Json(guard.segments_view()))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let format: CutlistFormat = q
        .format
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(ApiError::invalid)?;
    let entry = state.entry(&id).await?;
    let guard = entry.read().await;
    let reel = build_reel(&guard.session.asset_id, guard.session.export_clips(), &guard.session.config, &guard.run.timeline)?;
    let bytes = export_cutlist(&reel, format);
    Ok(match format {
        CutlistFormat::Json => json_bytes(bytes),
        CutlistFormat::ConcatTxt => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], Body::from(bytes)).into_response(),
    })
}

async fn get_tags(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let entry = state.entry(&id).await?;
    let guard = entry.read().await;
    let meta = &guard.inputs.metadata;
    Ok(Json(json!({
        "asset_id": guard.session.asset_id,
        "tags": meta.tags,
        "shots": meta.shots,
    })))
}

fn json_bytes(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], Body::from(bytes)).into_response()
}

/// Runs the service until interrupted.
pub fn serve(host: &str, port: u16, data_dir: PathBuf) -> Result<(), String> {
    let state = Arc::new(AppState::open(data_dir)?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(|e| format!("bind {host}:{port}: {e}"))?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        eprintln!("listening on http://{addr}/api/v1");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| e.to_string())
    })
}

//! Local HTTP service behind the interactive tuner.
//!
//! Sessions hold one uploaded clip, its current config and the latest
//! result. Each session sits behind its own async mutex, so requests on the
//! same session run one after another while different sessions proceed in
//! parallel. Analysis runs on the blocking pool.

use std::collections::{BTreeMap, HashMap};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lru::LruCache;
use melodex_core::config::key_list;
use melodex_core::synth::{synthesize_contour, SynthMode};
use melodex_core::{AnalysisConfig, AnalysisResult, AudioClip, ConfigError};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;
use uuid::Uuid;

use crate::run::{analyze_clip, analyze_region, resolve_model};
use crate::spectrogram::{encode_png, render, SpectrogramRequest};
use crate::wav::{decode_wav, encode_wav};

pub const DEFAULT_PORT: u16 = 8775;
pub const DEFAULT_MAX_SESSIONS: usize = 16;
pub const DEFAULT_MAX_UPLOAD_MB: usize = 50;
const SYNTH_AMPLITUDE: f64 = 0.5;
/// Keys that move the frame grid; a region re-run cannot change them.
const GRID_KEYS: [&str; 2] = ["frame.window_seconds", "frame.hop_seconds"];

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_sessions: usize,
    pub max_upload_bytes: usize,
    /// Built UI assets; a minimal index page is served when absent.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_sessions: DEFAULT_MAX_SESSIONS,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_MB << 20,
            static_dir: None,
        }
    }
}

struct Session {
    clip: Arc<AudioClip>,
    config: AnalysisConfig,
    result: AnalysisResult,
    #[allow(dead_code)]
    created: SystemTime,
}

type SessionRef = Arc<tokio::sync::Mutex<Session>>;

struct AppState {
    sessions: Mutex<LruCache<Uuid, SessionRef>>,
}

impl AppState {
    fn get(&self, id: &str) -> Result<SessionRef, ApiError> {
        let id = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        self.sessions
            .lock()
            .expect("session store lock")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(&id.to_string()))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown session `{id}`"))
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    fn config(e: ConfigError) -> Self {
        let mut err = Self::unprocessable(e.to_string());
        if matches!(e, ConfigError::UnknownKey(_)) {
            err.body["valid_keys"] = json!(key_list());
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub fn router(cfg: ServiceConfig) -> Router {
    let cap = NonZeroUsize::new(cfg.max_sessions.max(1)).expect("non-zero");
    let state = Arc::new(AppState {
        sessions: Mutex::new(LruCache::new(cap)),
    });
    let api = Router::new()
        .route("/api/config", get(config_keys))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_result))
        .route("/api/sessions/{id}/analyze", post(analyze))
        .route("/api/sessions/{id}/spectrogram", get(spectrogram))
        .route("/api/sessions/{id}/audio", get(audio))
        .layer(DefaultBodyLimit::max(cfg.max_upload_bytes))
        .with_state(state);
    match cfg.static_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_HTML) })),
    }
}

pub async fn serve(host: &str, port: u16, cfg: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(cfg))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn config_map(cfg: &AnalysisConfig) -> BTreeMap<&'static str, String> {
    AnalysisConfig::keys()
        .map(|k| (k, cfg.get(k).unwrap_or_default()))
        .collect()
}

async fn config_keys() -> Json<Value> {
    let defaults = AnalysisConfig::default();
    let keys: Vec<Value> = AnalysisConfig::keys()
        .map(|k| {
            json!({
                "key": k,
                "default": defaults.get(k),
                "description": AnalysisConfig::describe(k),
            })
        })
        .collect();
    Json(json!({ "keys": keys }))
}

async fn run_blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("analysis task failed: {e}")))?
}

fn full_analysis(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<AnalysisResult, ApiError> {
    let model = resolve_model(cfg).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    analyze_clip(clip, cfg, model.as_ref(), true).map_err(|e| ApiError::unprocessable(e.to_string()))
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    if body.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty body; expected WAV bytes"));
    }
    let clip = decode_wav(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let clip = Arc::new(clip);
    let config = AnalysisConfig::default();
    let result = {
        let (clip, config) = (clip.clone(), config.clone());
        run_blocking(move || full_analysis(&clip, &config)).await?
    };
    let id = Uuid::new_v4();
    let body = json!({
        "session_id": id.to_string(),
        "duration_s": clip.duration(),
        "sample_rate": clip.sample_rate(),
        "frame_count": result.contour.len(),
        "default_config": config_map(&config),
    });
    let session = Session {
        clip,
        config,
        result,
        created: SystemTime::now(),
    };
    let evicted = state
        .sessions
        .lock()
        .expect("session store lock")
        .push(id, Arc::new(tokio::sync::Mutex::new(session)));
    if let Some((old, _)) = evicted {
        log::info!("evicted session {old}");
    }
    Ok((StatusCode::CREATED, Json(body)))
}

fn result_json(s: &Session) -> Value {
    let c = &s.result.contour;
    let candidates: Vec<Value> = s
        .result
        .diagnostics
        .iter()
        .map(|d| {
            Value::Array(
                d.candidates
                    .iter()
                    .map(|x| json!({ "f0": x.f0, "twm_error": x.twm_error, "salience": x.salience }))
                    .collect(),
            )
        })
        .collect();
    json!({
        "hop_seconds": c.hop_seconds,
        "time": c.frames.iter().map(|f| f.time).collect::<Vec<_>>(),
        "f0": c.frames.iter().map(|f| f.f0.unwrap_or(0.0)).collect::<Vec<_>>(),
        "salience": c.frames.iter().map(|f| f.salience).collect::<Vec<_>>(),
        "labels": s.result.labels,
        "candidates": candidates,
        "config": config_map(&s.config),
    })
}

async fn session_result(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.get(&id)?;
    let s = session.lock().await;
    let mut body = result_json(&s);
    body["duration_s"] = json!(s.clip.duration());
    body["sample_rate"] = json!(s.clip.sample_rate());
    Ok(Json(body))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeRequest {
    #[serde(default)]
    overrides: BTreeMap<String, Value>,
    region: Option<Region>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct Region {
    t0: f64,
    t1: f64,
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

async fn analyze(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = state.get(&id)?;
    let req: AnalyzeRequest = if body.iter().all(u8::is_ascii_whitespace) {
        AnalyzeRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::unprocessable(format!("invalid request: {e}")))?
    };

    let mut s = session.clone().lock_owned().await;
    let texts: Vec<(String, String)> = req.overrides.iter().map(|(k, v)| (k.clone(), value_text(v))).collect();
    let next = s
        .config
        .with_overrides(texts.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .map_err(ApiError::config)?;
    let clip = s.clip.clone();

    match req.region {
        None => {
            let cfg = next.clone();
            let result = run_blocking(move || full_analysis(&clip, &cfg)).await?;
            s.config = next;
            s.result = result;
        }
        Some(Region { t0, t1 }) => {
            let duration = clip.duration();
            if !(t0.is_finite() && t1.is_finite() && 0.0 <= t0 && t0 < t1 && t1 <= duration + 1e-9) {
                return Err(ApiError::unprocessable(format!(
                    "region must satisfy 0 <= t0 < t1 <= {duration}"
                )));
            }
            if let Some(k) = GRID_KEYS.iter().find(|k| next.get(k) != s.config.get(k)) {
                return Err(ApiError::unprocessable(format!(
                    "`{k}` changes the frame grid and cannot be overridden for a region"
                )));
            }
            let cfg = next.clone();
            let (first, part) = run_blocking(move || {
                let model = resolve_model(&cfg).map_err(|e| ApiError::unprocessable(e.to_string()))?;
                analyze_region(&clip, &cfg, model.as_ref(), t0, t1)
                    .map_err(|e| ApiError::unprocessable(e.to_string()))
            })
            .await?;
            let n = part.contour.len();
            if n == 0 {
                return Err(ApiError::unprocessable("no analysis frame falls inside the region"));
            }
            let r = &mut s.result;
            r.contour.frames[first..first + n].copy_from_slice(&part.contour.frames);
            r.labels[first..first + n].copy_from_slice(&part.labels);
            r.diagnostics.splice(first..first + n, part.diagnostics);
            if let (Some(old), Some(new)) = (r.other_contour.as_mut(), part.other_contour) {
                old.frames[first..first + n].copy_from_slice(&new.frames);
            }
        }
    }
    Ok(Json(result_json(&s)))
}

fn query_f64(q: &HashMap<String, String>, key: &str, default: f64) -> Result<f64, ApiError> {
    match q.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::unprocessable(format!("`{key}` must be a number, got `{v}`"))),
    }
}

async fn spectrogram(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let session = state.get(&id)?;
    let (clip, config) = {
        let s = session.lock().await;
        (s.clip.clone(), s.config.clone())
    };
    let nyquist = clip.sample_rate() as f64 / 2.0;
    let req = SpectrogramRequest {
        fmin: query_f64(&q, "fmin", 50.0)?,
        fmax: query_f64(&q, "fmax", config.max_peak_frequency.min(nyquist))?,
        t0: query_f64(&q, "t0", 0.0)?,
        t1: query_f64(&q, "t1", clip.duration())?,
        height: query_f64(&q, "height", 256.0)? as usize,
    };
    let (axes, png) = run_blocking(move || {
        let s = render(&clip, &config, &req).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        Ok((s.axes, encode_png(&s)))
    })
    .await?;

    let mut headers = HeaderMap::new();
    let mut put = |name: &'static str, value: String| {
        headers.insert(name, HeaderValue::from_str(&value).expect("ascii header"));
    };
    put("content-type", "image/png".into());
    put("x-time-start", axes.time_start.to_string());
    put("x-seconds-per-pixel", axes.seconds_per_pixel.to_string());
    put("x-first-frame", axes.first_frame.to_string());
    put("x-freq-min", axes.fmin.to_string());
    put("x-freq-max", axes.fmax.to_string());
    put("x-freq-scale", "log".into());
    put("x-image-width", axes.width.to_string());
    put("x-image-height", axes.height.to_string());
    put(
        "access-control-expose-headers",
        "x-time-start, x-seconds-per-pixel, x-first-frame, x-freq-min, x-freq-max, x-freq-scale, x-image-width, x-image-height".into(),
    );
    Ok((headers, png).into_response())
}

async fn audio(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let session = state.get(&id)?;
    let which = q.get("which").map_or("original", String::as_str);
    let mode = match q.get("mode") {
        None => SynthMode::Sine,
        Some(m) => SynthMode::from_name(m).ok_or_else(|| ApiError::unprocessable(format!("unknown mode `{m}`")))?,
    };
    let s = session.lock().await;
    let clip = match which {
        "original" => (*s.clip).clone(),
        "synth" => {
            let synth = synthesize_contour(&s.result.contour, s.clip.sample_rate(), mode, SYNTH_AMPLITUDE)
                .map_err(|e| ApiError::unprocessable(e.to_string()))?;
            // same length as the original so playheads line up
            let mut samples = synth.into_samples();
            samples.resize(s.clip.len(), 0.0);
            AudioClip::new(samples, s.clip.sample_rate()).map_err(|e| ApiError::internal(e.to_string()))?
        }
        other => return Err(ApiError::unprocessable(format!("`which` must be original or synth, got `{other}`"))),
    };
    drop(s);
    let bytes = encode_wav(&clip).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

const INDEX_HTML: &str = r#"<!doctype html>
<html><head><meta charset="utf-8"><title>melodex</title></head>
<body>
<h1>melodex</h1>
<p>The service is running. Start it with <code>--static-dir</code> pointing at a built UI to use the tuner.</p>
<ul>
<li><code>GET /api/config</code></li>
<li><code>POST /api/sessions</code> (WAV body)</li>
<li><code>GET /api/sessions/{id}</code></li>
<li><code>POST /api/sessions/{id}/analyze</code></li>
<li><code>GET /api/sessions/{id}/spectrogram?fmin&amp;fmax&amp;t0&amp;t1</code></li>
<li><code>GET /api/sessions/{id}/audio?which=original|synth&amp;mode=sine|harmonic</code></li>
</ul>
</body></html>
"#;

//! HTTP backend for the parameter tuner.
//!
//! Frames are addressed by post-warm-up index `k`. Each distinct parameter
//! set owns a sequential replay; asking for an earlier frame than the replay
//! has reached restarts it from the first window. Rendered PNGs are kept in
//! an LRU cache keyed by the parameters and `k`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use lads::config::{Dataset, Method, Preset, RepresentationConfig};
use lads::events::{window_events, Event, EventWindow, Frequency, SensorGeometry};
use lads::render;
use lads::surfaces::{Pipeline, StepOutput, WARM_UP_WINDOWS};
use lru::LruCache;
use serde_json::{json, Value};

use crate::args::ServeArgs;
use crate::commands::{grid_rects, open_stream};
use crate::Failure;

/// Parameter sets whose replay state is kept alive at once.
const REPLAY_SLOTS: usize = 16;

/// PNGs for one frame under one parameter set.
#[derive(Debug)]
pub struct Rendered {
    pub frame: Vec<u8>,
    pub heatmap: Vec<u8>,
    pub heatmap_grid: Vec<u8>,
}

struct Replay {
    pipeline: Pipeline,
    /// Index of the next window to feed.
    next: usize,
    last: Option<StepOutput>,
}

pub struct AppState {
    events: Arc<Vec<Event>>,
    geometry: SensorGeometry,
    dataset: Dataset,
    frequency: Frequency,
    t0: i64,
    windows: Mutex<HashMap<Frequency, Arc<Vec<EventWindow>>>>,
    frames: Mutex<LruCache<String, Arc<Rendered>>>,
    replays: Mutex<LruCache<String, Arc<Mutex<Replay>>>>,
}

impl AppState {
    /// `events` must already be validated against `geometry` and sorted.
    pub fn new(
        events: Vec<Event>,
        geometry: SensorGeometry,
        dataset: Dataset,
        frequency: Frequency,
        t0: i64,
        cache_frames: usize,
    ) -> Self {
        let cap = NonZeroUsize::new(cache_frames.max(1)).expect("nonzero");
        Self {
            events: Arc::new(events),
            geometry,
            dataset,
            frequency,
            t0,
            windows: Mutex::new(HashMap::new()),
            frames: Mutex::new(LruCache::new(cap)),
            replays: Mutex::new(LruCache::new(NonZeroUsize::new(REPLAY_SLOTS).expect("nonzero"))),
        }
    }

    fn windows(&self, f: Frequency) -> Result<Arc<Vec<EventWindow>>, ApiError> {
        let mut map = self.windows.lock().expect("window cache poisoned");
        if let Some(w) = map.get(&f) {
            return Ok(w.clone());
        }
        let w = Arc::new(
            window_events(&self.events, f, self.t0).map_err(|e| ApiError::bad(e.to_string()))?,
        );
        map.insert(f, w.clone());
        Ok(w)
    }

    fn frame_count(&self, f: Frequency) -> Result<usize, ApiError> {
        Ok(self.windows(f)?.len().saturating_sub(WARM_UP_WINDOWS))
    }

    fn render(&self, req: &FrameRequest) -> Result<Arc<Rendered>, ApiError> {
        let windows = self.windows(req.frequency)?;
        let frames = windows.len().saturating_sub(WARM_UP_WINDOWS);
        if req.k >= frames {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                format!("frame {} out of range ({frames} frames)", req.k),
            ));
        }
        let params = format!("hz={}&{}", req.frequency, req.config.canonical_query());
        let key = format!("{params}&k={}", req.k);
        if let Some(hit) = self.frames.lock().expect("frame cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let replay = {
            let mut replays = self.replays.lock().expect("replay cache poisoned");
            match replays.get(&params) {
                Some(r) => r.clone(),
                None => {
                    let r = Arc::new(Mutex::new(self.fresh_replay(&req.config)?));
                    replays.put(params.clone(), r.clone());
                    r
                }
            }
        };
        let mut replay = replay.lock().expect("replay poisoned");
        let target = req.k + WARM_UP_WINDOWS;
        if replay.next > target + 1 {
            *replay = self.fresh_replay(&req.config)?;
        }
        // Another request may have rendered it while we waited for the replay.
        if let Some(hit) = self.frames.lock().expect("frame cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        while replay.next <= target {
            let next = replay.next;
            let out = replay
                .pipeline
                .step(&windows[next])
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            replay.last = Some(out);
            replay.next += 1;
        }
        let out = replay.last.as_ref().expect("at least one window stepped");
        let rendered = Arc::new(encode(&replay.pipeline, out)?);
        self.frames
            .lock()
            .expect("frame cache poisoned")
            .put(key, rendered.clone());
        Ok(rendered)
    }

    fn fresh_replay(&self, cfg: &RepresentationConfig) -> Result<Replay, ApiError> {
        Ok(Replay {
            pipeline: Pipeline::new(cfg.clone(), self.geometry)
                .map_err(|e| ApiError::bad(e.to_string()))?,
            next: 0,
            last: None,
        })
    }
}

fn encode(pipeline: &Pipeline, out: &StepOutput) -> Result<Rendered, ApiError> {
    let internal = |e: render::RenderError| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    let frame = render::encode_gray_png(&render::surface_to_gray(&pipeline.frame())).map_err(internal)?;
    let mut img = render::decay_heatmap(&out.decay);
    let heatmap = render::encode_rgb_png(&img).map_err(internal)?;
    render::draw_grid(&mut img, grid_rects(out));
    let heatmap_grid = render::encode_rgb_png(&img).map_err(internal)?;
    Ok(Rendered {
        frame,
        heatmap,
        heatmap_grid,
    })
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type Params = Result<Query<Vec<(String, String)>>, QueryRejection>;

fn params(q: Params) -> Result<Vec<(String, String)>, ApiError> {
    q.map(|Query(v)| v).map_err(|e| ApiError::bad(e.body_text()))
}

fn lookup<'a>(q: &'a [(String, String)], key: &str) -> Option<&'a str> {
    q.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn dataset_and_hz(state: &AppState, q: &[(String, String)]) -> Result<(Dataset, Frequency), ApiError> {
    let dataset = match lookup(q, "dataset") {
        Some(d) => d.parse().map_err(|e: lads::config::ConfigError| ApiError::bad(e.to_string()))?,
        None => state.dataset,
    };
    let hz = match lookup(q, "hz") {
        Some(h) => h.parse().map_err(|e: lads::events::EventError| ApiError::bad(e.to_string()))?,
        None => state.frequency,
    };
    Ok((dataset, hz))
}

struct FrameRequest {
    k: usize,
    frequency: Frequency,
    config: RepresentationConfig,
    grid: bool,
}

/// `k` and `method` are required; `dataset` and `hz` pick the preset row;
/// any other key must be a representation parameter.
fn frame_request(state: &AppState, q: &[(String, String)]) -> Result<FrameRequest, ApiError> {
    let (dataset, frequency) = dataset_and_hz(state, q)?;
    let k = lookup(q, "k")
        .ok_or_else(|| ApiError::bad("missing `k`"))?
        .parse()
        .map_err(|_| ApiError::bad("`k` must be a non-negative integer"))?;
    let method: Method = lookup(q, "method")
        .ok_or_else(|| ApiError::bad("missing `method`"))?
        .parse()
        .map_err(|e: lads::config::ConfigError| ApiError::bad(e.to_string()))?;
    let mut config = RepresentationConfig::from_preset(method, dataset, frequency.as_f64());
    let mut grid = false;
    for (key, value) in q {
        match key.as_str() {
            "k" | "method" | "dataset" | "hz" => {}
            "grid" => {
                grid = match value.as_str() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(ApiError::bad(format!("bad value `{value}` for `grid`"))),
                }
            }
            _ => config
                .set(key, value)
                .map_err(|e| ApiError::bad(e.to_string()))?,
        }
    }
    config
        .validate_for(state.geometry)
        .map_err(|e| ApiError::bad(e.to_string()))?;
    Ok(FrameRequest {
        k,
        frequency,
        config,
        grid,
    })
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn render_png(
    state: Arc<AppState>,
    q: Params,
    pick: fn(&Rendered, bool) -> &[u8],
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let req = frame_request(&state, &q)?;
    let grid = req.grid;
    let rendered = tokio::task::spawn_blocking(move || state.render(&req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(png(pick(&rendered, grid).to_vec()))
}

async fn frame(State(state): State<Arc<AppState>>, q: Params) -> Result<Response, ApiError> {
    render_png(state, q, |r, _| &r.frame).await
}

async fn heatmap(State(state): State<Arc<AppState>>, q: Params) -> Result<Response, ApiError> {
    render_png(state, q, |r, grid| if grid { &r.heatmap_grid } else { &r.heatmap }).await
}

/// JSON number text, with integral values written without a fraction.
fn number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        format!("{}", v as i64)
    } else {
        serde_json::to_string(&v).expect("finite preset value")
    }
}

fn preset_json(p: &Preset) -> String {
    let mut s = String::from("{");
    for (i, (k, v)) in [
        ("tau", p.tau),
        ("lambda0", p.lambda0),
        ("log_tau", p.log_tau),
        ("a", p.a),
        ("r", p.r),
        ("T_d", p.t_d),
    ]
    .into_iter()
    .enumerate()
    {
        if i > 0 {
            s.push(',');
        }
        write!(s, "\"{k}\":{}", number(v)).expect("string write");
    }
    s.push('}');
    s
}

async fn defaults(State(state): State<Arc<AppState>>, q: Params) -> Result<Response, ApiError> {
    let q = params(q)?;
    if let Some((k, _)) = q.iter().find(|(k, _)| k != "dataset" && k != "hz") {
        return Err(ApiError::bad(format!("unknown parameter `{k}`")));
    }
    let (dataset, hz) = dataset_and_hz(&state, &q)?;
    let body = preset_json(&Preset::lookup(dataset, hz.as_f64()));
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

/// Slider ranges offered to clients. `tau` is seconds except for
/// `lads_log`, where it is a LoG score.
fn schema() -> Value {
    json!([
        {"name": "tau", "min": 0.001, "max": 50.0, "step": 0.001, "methods": ["global_li", "lads_er", "lads_log"]},
        {"name": "lambda0", "min": 0.01, "max": 1000.0, "step": 0.01, "methods": ["lads_er"]},
        {"name": "a", "min": 0.01, "max": 10.0, "step": 0.01, "methods": ["lads_log"]},
        {"name": "r", "min": 0.001, "max": 0.5, "step": 0.001, "methods": ["lads_fft"]},
        {"name": "t_d", "min": 0.0, "max": 1.0, "step": 0.01, "methods": ["lads_fft"]},
        {"name": "clip", "min": 0.1, "max": 100.0, "step": 0.1, "methods": ["histogram", "global_li", "lads_er", "lads_log", "lads_fft"]},
        {"name": "fft_invert", "type": "bool", "methods": ["lads_fft"]},
        {"name": "fft_recursive", "type": "bool", "methods": ["lads_fft"]}
    ])
}

async fn meta(State(state): State<Arc<AppState>>, q: Params) -> Result<Response, ApiError> {
    let q = params(q)?;
    let (dataset, hz) = dataset_and_hz(&state, &q)?;
    let st = state.clone();
    let windows = tokio::task::spawn_blocking(move || st.windows(hz).map(|w| w.len()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let defaults: serde_json::Map<String, Value> = Method::ALL
        .into_iter()
        .map(|m| {
            let c = RepresentationConfig::from_preset(m, dataset, hz.as_f64());
            (m.name().to_string(), serde_json::to_value(c).expect("config serialises"))
        })
        .collect();
    let presets: Value = [Dataset::Fes, Dataset::Blink]
        .into_iter()
        .map(|d| {
            let name = if d == Dataset::Fes { "fes" } else { "blink" };
            let rows: serde_json::Map<String, Value> = [30.0, 240.0]
                .into_iter()
                .map(|h| {
                    let text = preset_json(&Preset::lookup(d, h));
                    (format!("{h}"), serde_json::from_str(&text).expect("valid json"))
                })
                .collect();
            (name.to_string(), Value::Object(rows))
        })
        .collect::<serde_json::Map<_, _>>()
        .into();
    Ok(Json(json!({
        "geometry": {"width": state.geometry.width, "height": state.geometry.height},
        "frequency": hz.to_string(),
        "dataset": dataset,
        "events": state.events.len(),
        "window_count": windows,
        "warm_up": WARM_UP_WINDOWS,
        "frame_count": windows.saturating_sub(WARM_UP_WINDOWS),
        "methods": Method::ALL.map(|m| m.name()),
        "parameters": schema(),
        "defaults": defaults,
        "presets": presets,
    }))
    .into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/frame", get(frame))
        .route("/api/heatmap", get(heatmap))
        .route("/api/params/defaults", get(defaults))
        .with_state(state)
}

pub(crate) fn serve(a: ServeArgs) -> Result<(), Failure> {
    let (stream, _) = open_stream(&a.stream)?;
    let geometry = stream.geometry();
    let events = stream.collect::<Result<Vec<_>, _>>()?;
    let state = Arc::new(AppState::new(
        events,
        geometry,
        a.dataset,
        a.stream.hz,
        a.stream.t0,
        a.cache_frames,
    ));
    let frames = state.frame_count(a.stream.hz).map_err(|e| Failure::invalid(anyhow::anyhow!(e.message)))?;
    let rt = tokio::runtime::Runtime::new().map_err(Failure::io)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(Failure::io)?;
        let addr = listener.local_addr().map_err(Failure::io)?;
        eprintln!("serving {frames} frames on http://{addr}");
        axum::serve(listener, router(state)).await.map_err(Failure::io)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_values_drop_the_fraction() {
        assert_eq!(number(16.0), "16");
        assert_eq!(number(0.05), "0.05");
        assert_eq!(number(-3.0), "-3");
        assert_eq!(number(12.5), "12.5");
    }

    #[test]
    fn every_preset_row_is_valid_json() {
        for d in [Dataset::Fes, Dataset::Blink] {
            for hz in [30.0, 240.0] {
                let p = Preset::lookup(d, hz);
                let back: Preset = serde_json::from_str(&preset_json(&p)).unwrap();
                assert_eq!(back, p);
            }
        }
    }
}

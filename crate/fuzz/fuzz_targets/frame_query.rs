#![no_main]

use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use lads::config::Dataset;
use lads::events::{synthesize_stream, Frequency, SceneKind, SensorGeometry};
use lads_cli::server::{router, AppState};
use libfuzzer_sys::fuzz_target;
use tower::ServiceExt;

fn app() -> &'static Router {
    static APP: OnceLock<Router> = OnceLock::new();
    APP.get_or_init(|| {
        let g = SensorGeometry::new(32, 24).unwrap();
        let events = synthesize_stream(SceneKind::MovingEdge, g, 0.4, 1);
        router(Arc::new(AppState::new(events, g, Dataset::Fes, Frequency::hz(30), 0, 32)))
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(query) = std::str::from_utf8(data) else { return };
    let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
    for path in ["/api/frame", "/api/heatmap", "/api/meta", "/api/params/defaults"] {
        let Ok(req) = Request::get(format!("{path}?{query}")).body(Body::empty()) else {
            return;
        };
        let res = rt.block_on(app().clone().oneshot(req)).unwrap();
        assert!(!res.status().is_server_error(), "{path}?{query}: {}", res.status());
    }
});

//! What-if HTTP service.
//!
//! Given a possession in progress, returns the forecast next-action
//! distribution and location together with the location-based value of
//! each on-ball option at the forecast location. Routes live under `/v1`.

use std::fs;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::timeout::TimeoutLayer;

use sigposs::dataset::query_sample;
use sigposs::events::{ActionType, MatchEvent, PitchPartition};
use sigposs::predictor::{predict_all, Checkpoint};
use sigposs::value::{hypothetical_lav, lav, observed_lav, ValueModels};
use sigposs::DataError;

/// A loaded checkpoint with its value sub-models.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub checkpoint: Checkpoint,
    /// SHA-256 of the serialized checkpoint, hex encoded.
    pub checkpoint_sha256: String,
    pub models: ValueModels,
}

impl ModelBundle {
    pub fn new(checkpoint: Checkpoint, models: ValueModels) -> Result<Self, DataError> {
        let checkpoint_sha256 = sha256_hex(checkpoint.to_json()?.as_bytes());
        Ok(Self {
            checkpoint,
            checkpoint_sha256,
            models,
        })
    }

    /// Reads a checkpoint file and a value-model file.
    pub fn load(checkpoint: impl AsRef<Path>, value_models: impl AsRef<Path>) -> Result<Self, DataError> {
        let ck = Checkpoint::load(checkpoint)?;
        let path = value_models.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let models: ValueModels = serde_json::from_str(&text)?;
        Self::new(ck, models)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Origins allowed by CORS, e.g. `http://localhost:5173`.
    pub cors_origins: Vec<String>,
    pub timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            cors_origins: vec!["http://localhost:5173".into(), "http://127.0.0.1:5173".into()],
            timeout: Duration::from_secs(5),
        }
    }
}

/// Shared, immutable state of the service.
#[derive(Debug, Clone)]
pub struct AppState {
    pub model: Option<Arc<ModelBundle>>,
    /// Zone overlay for clients.
    pub partition: Arc<PitchPartition>,
}

impl AppState {
    pub fn new(model: Option<ModelBundle>) -> Self {
        Self {
            model: model.map(Arc::new),
            partition: Arc::new(PitchPartition::default_zones()),
        }
    }
}

/// One event of a possession in progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestEvent {
    pub action: ActionType,
    pub x: f64,
    pub y: f64,
    /// Match time scaled to `[0, 1]`.
    #[serde(alias = "T")]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub possession: Vec<RequestEvent>,
    #[serde(default)]
    pub scrad: i32,
    /// Must equal the loaded model's value when given.
    #[serde(default)]
    pub n_r: Option<usize>,
}

/// Probabilities keyed by action code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProbs {
    pub p: f64,
    pub d: f64,
    pub x: f64,
    pub s: f64,
    pub g: f64,
    #[serde(rename = "_")]
    pub loss: f64,
    #[serde(rename = "@")]
    pub end: f64,
}

impl From<[f64; 7]> for ActionProbs {
    fn from(v: [f64; 7]) -> Self {
        Self {
            p: v[0],
            d: v[1],
            x: v[2],
            s: v[3],
            g: v[4],
            loss: v[5],
            end: v[6],
        }
    }
}

/// Location-based value of choosing each on-ball action at the forecast location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypotheticalLav {
    pub p: f64,
    pub d: f64,
    pub x: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub action_probs: ActionProbs,
    /// Forecast location, clamped to the pitch.
    pub predicted_xy: [f64; 2],
    pub hypothetical_lav: HypotheticalLav,
    /// Sum of observed action values at the forecast positions so far.
    pub lpv_so_far: f64,
    /// Sum of forecast action values at the same positions plus the next one.
    pub lpv_predicted: f64,
    pub n_r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub checkpoint_sha256: String,
    pub n_r: usize,
    pub lambda: f64,
    pub sig_order: usize,
    pub hidden: usize,
    pub best_epoch: usize,
    pub partition: String,
    pub xg_gamma: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub reason: String,
    pub detail: String,
}

/// A request failure with its HTTP status.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub reason: &'static str,
    pub detail: String,
}

impl ApiError {
    fn new(status: StatusCode, reason: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status,
            reason,
            detail: detail.into(),
        }
    }

    fn no_model() -> Self {
        Self::new(StatusCode::CONFLICT, "model not loaded", "start the service with a checkpoint")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            reason: self.reason.into(),
            detail: self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Validates a request and computes the response. Pure in `(bundle, request)`.
pub fn what_if(bundle: &ModelBundle, req: &WhatIfRequest) -> Result<WhatIfResponse, ApiError> {
    let n_r = bundle.checkpoint.n_r;
    let order = bundle.checkpoint.params.config.sig_order;
    if let Some(asked) = req.n_r {
        if asked != n_r {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "n_r mismatch",
                format!("request n_r {asked}, loaded model uses {n_r}"),
            ));
        }
    }
    if req.possession.len() < n_r {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "insufficient actions",
            format!("possession has {} actions, model needs {n_r}", req.possession.len()),
        ));
    }
    if let Some(i) = req.possession.iter().position(|e| e.action == ActionType::MatchEnd) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "malformed request",
            format!("event {i} is a match end, which cannot be part of a possession"),
        ));
    }
    if let Some(i) = req
        .possession
        .iter()
        .position(|e| !(in_unit(e.x) && in_unit(e.y) && in_unit(e.t)))
    {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "coordinates out of range",
            format!("event {i}: x, y and t must lie in [0, 1]"),
        ));
    }
    let events: Vec<MatchEvent> = req
        .possession
        .iter()
        .map(|e| MatchEvent {
            match_id: "query".into(),
            team_id: "query".into(),
            action: e.action,
            x: e.x,
            y: e.y,
            t: e.t,
            scrad: req.scrad,
            competition: None,
        })
        .collect();
    let internal = |e: DataError| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error", e.to_string());
    // forecasts at every position from n_r to the end, the last being the query
    let samples = (n_r..=events.len())
        .map(|len| query_sample(&events[..len], n_r, order))
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;
    let preds = predict_all(&bundle.checkpoint.params, &samples);
    let models = &bundle.models;
    let next = preds.last().expect("at least the query sample");
    let xy = next.clamped_xy();
    let lpv_so_far: f64 = events[n_r..]
        .iter()
        .map(|e| observed_lav(e.action, [e.x, e.y], models))
        .sum();
    let lpv_predicted: f64 = preds.iter().map(|p| lav(&p.action_probs, p.clamped_xy(), models)).sum();
    let h = hypothetical_lav(xy, models);
    Ok(WhatIfResponse {
        action_probs: next.action_probs.into(),
        predicted_xy: xy,
        hypothetical_lav: HypotheticalLav {
            p: h[0].1,
            d: h[1].1,
            x: h[2].1,
            s: h[3].1,
        },
        lpv_so_far,
        lpv_predicted,
        n_r,
    })
}

async fn predict(State(state): State<AppState>, body: Bytes) -> Result<Json<WhatIfResponse>, ApiError> {
    let bundle = state.model.as_ref().ok_or_else(ApiError::no_model)?;
    let req: WhatIfRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed request", e.to_string()))?;
    what_if(bundle, &req).map(Json)
}

async fn model_info(State(state): State<AppState>) -> Result<Json<ModelInfo>, ApiError> {
    let bundle = state.model.as_ref().ok_or_else(ApiError::no_model)?;
    let cfg = &bundle.checkpoint.params.config;
    Ok(Json(ModelInfo {
        checkpoint_sha256: bundle.checkpoint_sha256.clone(),
        n_r: bundle.checkpoint.n_r,
        lambda: cfg.lambda,
        sig_order: cfg.sig_order,
        hidden: cfg.hidden,
        best_epoch: bundle.checkpoint.best_epoch,
        partition: state.partition.name().to_string(),
        xg_gamma: bundle.models.xg.gamma,
    }))
}

async fn partition(State(state): State<AppState>) -> Json<PitchPartition> {
    Json((*state.partition).clone())
}

/// The `/v1` router with CORS and a request timeout.
pub fn router(state: AppState, cfg: &ServiceConfig) -> Router {
    let origins: Vec<HeaderValue> = cfg
        .cors_origins
        .iter()
        .filter_map(|o| HeaderValue::from_str(o).ok())
        .collect();
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::list(origins))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/v1/predict", post(predict))
        .route("/v1/model/info", get(model_info))
        .route("/v1/partition", get(partition))
        .with_state(state)
        .layer(TimeoutLayer::with_status_code(StatusCode::REQUEST_TIMEOUT, cfg.timeout))
        .layer(cors)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState, cfg: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, &cfg)).await
}

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use phtel::daq::{DaqError, ExportFormat, SessionInfo};
use phtel::sim::SimError;
use phtel::{Annotation, Scenario};
use serde::{Deserialize, Serialize};

use crate::{device, stream, AppState};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(start).get(list))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/stop", post(stop))
        .route("/sessions/{id}/annotations", post(annotate))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/stream", get(stream::stream))
        .with_state(state)
}

/// Body of `POST /sessions`. Everything is optional; an empty object starts
/// the reference 7 → 10 → 4 → 7 bath sequence without pre-set annotations,
/// leaving phase marking to the operator.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StartRequest {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Overrides the scenario's device name.
    #[serde(default)]
    pub device: Option<String>,
    /// Virtual seconds per wall-clock second.
    #[serde(default)]
    pub speed: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    #[serde(flatten)]
    pub info: SessionInfo,
    pub stored: usize,
    pub missing: u64,
    pub annotations: usize,
    /// Device time of the newest sample.
    pub last_t_ms: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

pub(crate) struct ApiError(pub(crate) StatusCode, pub(crate) String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<DaqError> for ApiError {
    fn from(e: DaqError) -> Self {
        let code = match &e {
            DaqError::UnknownSession(_) => StatusCode::NOT_FOUND,
            DaqError::Busy(_) | DaqError::NotRecording(_) | DaqError::StillRecording(_) => {
                StatusCode::CONFLICT
            }
            DaqError::InvalidAnnotation(_) | DaqError::InvalidConfig(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            DaqError::Link(_) => StatusCode::BAD_GATEWAY,
            DaqError::UnknownFormat(_) | DaqError::Parse { .. } => StatusCode::BAD_REQUEST,
            DaqError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(code, e.to_string())
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Daq(d) => d.into(),
            SimError::Link(l) => DaqError::Link(l).into(),
            other => ApiError(StatusCode::UNPROCESSABLE_ENTITY, other.to_string()),
        }
    }
}

fn live_default() -> Scenario {
    let mut s = Scenario::fig2();
    s.name = "live".into();
    for seg in &mut s.segments {
        seg.label = None;
    }
    s
}

async fn start(
    State(state): State<AppState>,
    body: Option<Json<StartRequest>>,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let mut scenario = req.scenario.unwrap_or_else(live_default);
    if let Some(d) = req.device {
        scenario.device = d;
    }
    let speed = req.speed.unwrap_or(state.inner.default_speed);
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(ApiError(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("speed {speed} must be > 0"),
        ));
    }
    let id = device::launch(&state, scenario, speed)?;
    let info = state.host().session(&id)?.read().unwrap().info.clone();
    Ok((StatusCode::CREATED, Json(info)))
}

async fn list(State(state): State<AppState>) -> Json<Vec<SessionInfo>> {
    Json(state.host().list())
}

async fn summary(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionSummary>, ApiError> {
    let shared = state.host().session(&id)?;
    let s = shared.read().unwrap();
    Ok(Json(SessionSummary {
        info: s.info.clone(),
        stored: s.stored_count(),
        missing: s.missing_count(),
        annotations: s.annotations().count(),
        last_t_ms: s.samples().last().map(|r| r.t_ms),
    }))
}

async fn stop(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionInfo>, ApiError> {
    let shared = state.host().session(&id)?;
    if !shared.read().unwrap().is_recording() {
        return Err(DaqError::NotRecording(id).into());
    }
    match device::stop(&state, &id).await {
        Some(Err(e)) => tracing::warn!("session {id}: {e}"),
        Some(Ok(())) => {}
        // no device task: recorded by another producer or already gone
        None => state.host().mark_stopped(&id)?,
    }
    state.bump(&id);
    let info = shared.read().unwrap().info.clone();
    Ok(Json(info))
}

async fn annotate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(a): Json<Annotation>,
) -> Result<(StatusCode, Json<Annotation>), ApiError> {
    let stored = state.host().add_annotation(&id, a)?;
    state.bump(&id);
    Ok((StatusCode::CREATED, Json(stored)))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let format: ExportFormat = q.format.as_deref().unwrap_or("jsonl").parse()?;
    let bytes = state.host().export_session(&id, format)?;
    let (mime, ext) = match format {
        ExportFormat::Jsonl => ("application/x-ndjson", "jsonl"),
        ExportFormat::Csv => ("text/csv", "csv"),
    };
    Ok((
        [
            (header::CONTENT_TYPE, mime.to_owned()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{id}.{ext}\""),
            ),
        ],
        bytes,
    )
        .into_response())
}

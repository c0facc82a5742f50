//! HTTP+JSON routes over a [`SessionManager`]. Every response body, errors
//! included, carries `schema_version`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use uavirl_core::demo::{DemoError, PolicySummary, ScenarioView, SessionManager, SessionView, StepView, DEMO_SCHEMA_VERSION};
use uavirl_core::{CellCoord, Direction};

pub type AppState = Arc<SessionManager>;

/// Scenario used when `POST /sessions` names none.
pub const DEFAULT_SCENARIO: &str = "default";

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    schema_version: u32,
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema_version: DEMO_SCHEMA_VERSION,
            error: ErrorDetail { code: self.code, message: &self.message },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<DemoError> for ApiError {
    fn from(e: DemoError) -> Self {
        let (status, code) = match &e {
            DemoError::ScenarioNotFound(_) | DemoError::SessionNotFound(_) | DemoError::PolicyNotFound(_) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            DemoError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            DemoError::Validation(_) | DemoError::ScenarioMismatch { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            DemoError::Trajectory(_) | DemoError::World(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError { status, code, message: e.to_string() }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError { status: StatusCode::UNPROCESSABLE_ENTITY, code: "validation", message: e.body_text() }
    }
}

/// Adds `schema_version` to a body that lacks one.
#[derive(Serialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn versioned<T: Serialize>(body: T) -> Json<Versioned<T>> {
    Json(Versioned { schema_version: DEMO_SCHEMA_VERSION, body })
}

#[derive(Debug, Default, Deserialize)]
pub struct CreateSessionRequest {
    pub scenario: Option<String>,
}

#[derive(Serialize)]
struct CreatedSession {
    session: SessionView,
    scenario: ScenarioView,
}

#[derive(Debug, Deserialize)]
pub struct StepRequest {
    pub move_dir: Direction,
    pub power_idx: u8,
}

#[derive(Serialize)]
struct Finalized {
    trajectory_id: String,
}

#[derive(Serialize)]
struct PolicyList {
    policies: Vec<PolicySummary>,
}

#[derive(Serialize)]
struct StepBody {
    step: StepView,
}

#[derive(Debug, Default, Deserialize)]
pub struct RolloutQuery {
    #[serde(default)]
    pub seed: u64,
    pub scenario: Option<String>,
    pub start_q: Option<i32>,
    pub start_r: Option<i32>,
}

async fn create_session(
    State(mgr): State<AppState>,
    body: Option<Json<CreateSessionRequest>>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let reference = req.scenario.as_deref().unwrap_or(DEFAULT_SCENARIO);
    let scenario = mgr.scenario(reference)?;
    let session = mgr.create_session(reference)?;
    Ok((StatusCode::CREATED, versioned(CreatedSession { session, scenario: ScenarioView::new(&scenario) })))
}

async fn get_session(State(mgr): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(mgr.get_session(&id)?))
}

async fn step_session(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<StepRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(req) = body?;
    let step = mgr.step_session(&id, req.move_dir, req.power_idx)?;
    Ok(versioned(StepBody { step }))
}

async fn finalize_session(State(mgr): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let trajectory_id = mgr.finalize_session(&id)?;
    Ok(versioned(Finalized { trajectory_id }))
}

async fn get_scenario(State(mgr): State<AppState>, Path(id): Path<String>) -> Result<Json<ScenarioView>, ApiError> {
    let scenario = mgr.scenario(&id)?;
    Ok(Json(ScenarioView::new(&scenario)))
}

async fn list_policies(State(mgr): State<AppState>) -> impl IntoResponse {
    versioned(PolicyList { policies: mgr.policies() })
}

async fn rollout(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RolloutQuery>,
) -> Result<impl IntoResponse, ApiError> {
    let start = match (q.start_q, q.start_r) {
        (Some(sq), Some(sr)) => Some(CellCoord::new(sq, sr)),
        (None, None) => None,
        _ => {
            return Err(ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                code: "validation",
                message: "start_q and start_r must be given together".into(),
            })
        }
    };
    let view = match &q.scenario {
        Some(s) => mgr.rollout_on_scenario(&id, s, start, q.seed)?,
        None => mgr.rollout(&id, start, q.seed)?,
    };
    Ok(Json(view))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/finalize", post(finalize_session))
        .route("/scenarios/{id}", get(get_scenario))
        .route("/policies", get(list_policies))
        .route("/policies/{id}/rollout", get(rollout))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

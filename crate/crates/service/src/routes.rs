use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use harassment_core::active_learning::{AgreementReport, AnnotationTask};
use harassment_core::classifier::LabelSet;
use harassment_core::report::{flag_apps, AppHarassmentReport, FLAG_THRESHOLD};

use crate::error::ApiError;
use crate::state::{AdvanceOutcome, AppState};

type Shared = Arc<AppState>;

pub const DEFAULT_NEXT_TASKS: usize = 10;
pub const MAX_NEXT_TASKS: usize = 1000;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/tasks/next", get(next_tasks))
        .route("/tasks/conflicts", get(conflicts))
        .route("/tasks/{id}/label", post(label))
        .route("/tasks/{id}/resolve", post(resolve))
        .route("/agreement", get(agreement))
        .route("/rounds/advance", post(advance))
        .route("/reports/apps", get(report_apps))
        .route("/reports/distribution", get(report_distribution))
        .route("/reports/emotions", get(report_emotions))
        .route("/reports/gender", get(report_gender))
        .with_state(state)
}

/// The annotator behind the request's bearer token.
pub struct Annotator(pub String);

impl FromRequestParts<Shared> for Annotator {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .and_then(|token| state.annotator(token.trim()))
            .map(|id| Annotator(id.to_string()))
            .ok_or_else(ApiError::unauthorized)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoundStatus {
    /// Open round, if any.
    pub round: Option<usize>,
    pub rounds_completed: usize,
    pub rounds_total: usize,
}

fn round_status(state: &AppState) -> RoundStatus {
    let (done, total) = state.rounds();
    RoundStatus {
        round: state.queue.current_round(),
        rounds_completed: done,
        rounds_total: total,
    }
}

async fn health(State(state): State<Shared>) -> Json<Value> {
    Json(json!({ "status": "ok", "rounds": round_status(&state) }))
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    n: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TaskList {
    #[serde(flatten)]
    pub status: RoundStatus,
    pub tasks: Vec<AnnotationTask>,
}

async fn next_tasks(
    State(state): State<Shared>,
    Annotator(who): Annotator,
    query: Result<Query<NextQuery>, QueryRejection>,
) -> Result<Json<TaskList>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let n = q.n.unwrap_or(DEFAULT_NEXT_TASKS);
    if n == 0 || n > MAX_NEXT_TASKS {
        return Err(ApiError::bad_request(format!("n must be in 1..={MAX_NEXT_TASKS}")));
    }
    Ok(Json(TaskList {
        status: round_status(&state),
        tasks: state.queue.next_tasks(&who, n),
    }))
}

async fn conflicts(State(state): State<Shared>, _: Annotator) -> Json<TaskList> {
    Json(TaskList {
        status: round_status(&state),
        tasks: state.queue.conflicts(),
    })
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelBody {
    menacing: bool,
    profiling: bool,
}

fn body(payload: Result<Json<LabelBody>, JsonRejection>) -> Result<LabelSet, ApiError> {
    let Json(b) = payload.map_err(|e| ApiError::bad_request(e.body_text()))?;
    Ok(LabelSet::new(b.menacing, b.profiling))
}

async fn label(
    State(state): State<Shared>,
    Annotator(who): Annotator,
    Path(id): Path<String>,
    payload: Result<Json<LabelBody>, JsonRejection>,
) -> Result<Json<AnnotationTask>, ApiError> {
    let labels = body(payload)?;
    let task = state.queue.submit(&id, &who, labels)?;
    state.persist_queue()?;
    Ok(Json(task))
}

async fn resolve(
    State(state): State<Shared>,
    Annotator(who): Annotator,
    Path(id): Path<String>,
    payload: Result<Json<LabelBody>, JsonRejection>,
) -> Result<Json<AnnotationTask>, ApiError> {
    let labels = body(payload)?;
    let task = state.queue.resolve(&id, &who, labels)?;
    state.persist_queue()?;
    Ok(Json(task))
}

async fn agreement(State(state): State<Shared>, _: Annotator) -> Json<AgreementReport> {
    Json(state.queue.agreement())
}

async fn advance(State(state): State<Shared>, Annotator(who): Annotator) -> Result<Json<AdvanceOutcome>, ApiError> {
    tracing::info!(annotator = %who, "round advance requested");
    let outcome = tokio::task::spawn_blocking(move || state.advance())
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(outcome))
}

#[derive(Debug, Deserialize)]
struct AppsQuery {
    threshold: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AppsReport {
    /// "summary" or "table_fixture".
    pub source: String,
    pub threshold: usize,
    pub apps: Vec<AppHarassmentReport>,
}

async fn report_apps(
    State(state): State<Shared>,
    _: Annotator,
    query: Result<Query<AppsQuery>, QueryRejection>,
) -> Result<Json<AppsReport>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let threshold = q.threshold.unwrap_or(FLAG_THRESHOLD);
    let (source, reports) = match &state.summary {
        Some(s) => ("summary", &s.apps),
        None => ("table_fixture", &state.table),
    };
    Ok(Json(AppsReport {
        source: source.into(),
        threshold,
        apps: flag_apps(reports, threshold),
    }))
}

fn summary(state: &AppState) -> Result<&harassment_core::summary::CorpusSummary, ApiError> {
    state.summary.as_ref().ok_or_else(|| {
        ApiError::new(
            axum::http::StatusCode::NOT_FOUND,
            "no_summary",
            "no corpus summary configured; run `report` and set `summary`",
        )
    })
}

async fn report_distribution(State(state): State<Shared>, _: Annotator) -> Result<Json<Value>, ApiError> {
    let s = summary(&state)?;
    Ok(Json(json!({ "stores": s.stores, "polarity": s.polarity })))
}

async fn report_emotions(State(state): State<Shared>, _: Annotator) -> Result<Json<Value>, ApiError> {
    Ok(Json(json!(summary(&state)?.emotions)))
}

async fn report_gender(State(state): State<Shared>, _: Annotator) -> Result<Json<Value>, ApiError> {
    Ok(Json(json!(summary(&state)?.gender)))
}

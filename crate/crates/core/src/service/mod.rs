//! Session-oriented JSON API under `/v1`.
//!
//! A session holds an exact belief that advances as the caller reports each
//! committed action and the observation that followed. Recommendations are
//! read-only and may come from an expert rule or the planner.

mod store;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use store::{HistoryEntry, Session, SessionStore, Slot, SESSION_SCHEMA_VERSION};

use crate::belief::{update_or_predict, ExactBelief, Marginals, ParticleBelief};
use crate::config::ConfigFile;
use crate::despot::{ActionBounds, PlanDiagnostics, Planner, SolverConfig};
use crate::error::{ConfigError, LikelihoodDomainError};
use crate::model::{merge_json, Action, Observation};
use crate::policy::{expert_policy, random_policy, Branch, ExpertConfig, PolicyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    /// `not_found`, `validation` or `internal`.
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    detail: ErrorDetail,
}

impl ApiError {
    fn not_found(id: &str) -> ApiError {
        ApiError {
            status: StatusCode::NOT_FOUND,
            detail: ErrorDetail { code: "not_found".into(), message: format!("no session `{id}`"), path: None },
        }
    }

    fn validation(path: impl Into<String>, message: impl Into<String>) -> ApiError {
        let path = path.into();
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            detail: ErrorDetail {
                code: "validation".into(),
                message: message.into(),
                path: if path.is_empty() { None } else { Some(path) },
            },
        }
    }

    fn internal(message: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            detail: ErrorDetail { code: "internal".into(), message: message.into(), path: None },
        }
    }
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> ApiError {
        ApiError::validation(e.path(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.detail })).into_response()
    }
}

/// Deserialize a request body, reporting the offending field path. An empty
/// body reads as `{}`.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    let mut de = serde_json::Deserializer::from_slice(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::validation(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub config_overrides: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRequest {
    pub action: Action,
    pub observation: Observation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendRequest {
    #[serde(default = "default_policy")]
    pub policy: PolicyKind,
    /// Seeds the planner's scenario draws (and the random policy).
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver_overrides: serde_json::Value,
}

fn default_policy() -> PolicyKind {
    PolicyKind::Despot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub t: u32,
    pub belief: ExactBelief,
    pub marginals: Marginals,
    pub history: Vec<HistoryEntry>,
    pub discharged: bool,
    pub ended: bool,
    pub config_overrides: serde_json::Value,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub t: u32,
    pub belief: ExactBelief,
    pub marginals: Marginals,
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub ended: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub policy: PolicyKind,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    /// Per-action value bounds at the root of the search tree.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<ActionBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<PlanDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<SessionStore>,
    solver: SolverConfig,
}

impl AppState {
    pub fn new(store: Arc<SessionStore>, solver: SolverConfig) -> AppState {
        AppState { store, solver }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session).delete(delete_session))
        .route("/v1/sessions/{id}/step", post(step_session))
        .route("/v1/sessions/{id}/recommend", post(recommend))
        .with_state(state)
}

/// Bind `addr` and serve until interrupted. Expired sessions are swept once a minute.
pub async fn serve(addr: &str, cfg: ConfigFile, data_dir: PathBuf, ttl: Duration) -> std::io::Result<()> {
    let store = Arc::new(SessionStore::open(cfg.model, data_dir, ttl)?);
    let sweeper = store.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep().await;
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(store, cfg.solver)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn view(slot: &Slot) -> SessionView {
    let s = &slot.session;
    SessionView {
        id: s.id.clone(),
        t: s.belief.t,
        belief: s.belief,
        marginals: s.belief.marginals(),
        history: s.history.clone(),
        discharged: s.discharged,
        ended: ended(slot),
        config_overrides: s.config_overrides.clone(),
        created_at: s.created_at,
        updated_at: s.updated_at,
    }
}

fn ended(slot: &Slot) -> bool {
    slot.session.discharged || slot.session.belief.t >= slot.model.horizon()
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    if !req.config_overrides.is_null() && !req.config_overrides.is_object() {
        return Err(ApiError::validation("config_overrides", "must be an object"));
    }
    let (handle, _) = state.store.create(req.config_overrides).map_err(|e| {
        let path = if e.path().is_empty() { "config_overrides".to_string() } else { format!("config_overrides.{}", e.path()) };
        ApiError::validation(path, e.to_string())
    })?;
    let slot = handle.lock().await;
    Ok((StatusCode::CREATED, Json(view(&slot))))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let handle = state.store.get(&id).await.ok_or_else(|| ApiError::not_found(&id))?;
    let slot = handle.lock().await;
    if slot.session.replay(&slot.model) != slot.session.belief {
        return Err(ApiError::internal("stored belief does not match its history"));
    }
    Ok(Json(view(&slot)))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if state.store.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found(&id))
    }
}

async fn step_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StepResponse>, ApiError> {
    let handle = state.store.get(&id).await.ok_or_else(|| ApiError::not_found(&id))?;
    let req: StepRequest = parse_body(&body)?;
    let mut slot = handle.lock().await;
    if ended(&slot) {
        return Err(ApiError::validation("action", "session has ended"));
    }
    let (belief, degenerate) = update_or_predict(&slot.model, &slot.session.belief, req.action, &req.observation)
        .map_err(|e: LikelihoodDomainError| ApiError::validation("observation", e.to_string()))?;
    let mut next = slot.session.clone();
    next.belief = belief;
    next.history.push(HistoryEntry { action: req.action, observation: req.observation, degenerate });
    next.discharged |= req.action == Action::Disc;
    next.updated_at = store::now_secs();
    state.store.persist(&next).map_err(|e| ApiError::internal(format!("could not save session: {e}")))?;
    slot.session = next;
    Ok(Json(StepResponse {
        t: belief.t,
        belief,
        marginals: belief.marginals(),
        degenerate,
        warning: degenerate.then(|| "observation impossible under the current belief; kept the predicted prior".into()),
        ended: ended(&slot),
    }))
}

async fn recommend(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Recommendation>, ApiError> {
    let handle = state.store.get(&id).await.ok_or_else(|| ApiError::not_found(&id))?;
    let req: RecommendRequest = parse_body(&body)?;
    let (belief, model, is_over) = {
        let slot = handle.lock().await;
        (slot.session.belief, slot.model.clone(), ended(&slot))
    };
    if is_over {
        return Err(ApiError::validation("", "session has ended"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let marginals = belief.marginals();
    let expert = |default| -> Result<Recommendation, ApiError> {
        let cfg = ExpertConfig::new(default, model.params())?;
        let (action, branch) = expert_policy(&cfg, &marginals);
        Ok(bare(req.policy, action, Some(branch)))
    };
    let rec = match req.policy {
        PolicyKind::ExpertHosp => expert(Action::Hosp)?,
        PolicyKind::ExpertDsa => expert(Action::Dsa)?,
        PolicyKind::Random => bare(req.policy, random_policy(&mut rng), None),
        PolicyKind::Despot => {
            let solver = solver_with(&state.solver, &req.solver_overrides)?;
            let planner = Planner::new(model.clone(), solver).map_err(prefix_solver)?;
            let report = tokio::task::spawn_blocking(move || {
                let particles = ParticleBelief::sample_from_exact(&belief, model.params().n_particles, &mut rng);
                planner.plan(&particles, &mut rng)
            })
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(|e| ApiError::validation("", e.to_string()))?;
            Recommendation {
                policy: req.policy,
                action: report.action,
                branch: None,
                bounds: report.actions,
                root_lower: Some(report.root_lower),
                root_upper: Some(report.root_upper),
                elapsed_ms: Some(report.diagnostics.elapsed_ms),
                diagnostics: Some(report.diagnostics),
            }
        }
    };
    Ok(Json(rec))
}

fn bare(policy: PolicyKind, action: Action, branch: Option<Branch>) -> Recommendation {
    Recommendation {
        policy,
        action,
        branch,
        bounds: Vec::new(),
        root_lower: None,
        root_upper: None,
        diagnostics: None,
        elapsed_ms: None,
    }
}

fn solver_with(base: &SolverConfig, overrides: &serde_json::Value) -> Result<SolverConfig, ApiError> {
    if overrides.is_null() {
        return Ok(base.clone());
    }
    if !overrides.is_object() {
        return Err(ApiError::validation("solver_overrides", "must be an object"));
    }
    let mut merged = serde_json::to_value(base).expect("solver config serializes");
    merge_json(&mut merged, overrides);
    let cfg: SolverConfig = crate::config::deserialize_with_path(merged).map_err(prefix_solver)?;
    cfg.validate().map_err(prefix_solver)?;
    Ok(cfg)
}

fn prefix_solver(e: ConfigError) -> ApiError {
    let path = e.path().trim_start_matches("solver.").trim_start_matches("solver");
    ApiError::validation(
        if path.is_empty() { "solver_overrides".to_string() } else { format!("solver_overrides.{path}") },
        e.to_string(),
    )
}

//! HTTP API consumed by the review UI.
//!
//! The dataset and model are loaded once and never mutated. Every pool
//! embedding is computed at startup, so a ranking request only compares the
//! target against cached vectors. The ledger is the only writable state.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use slipforge_core::baselines::{CosineScorer, DtwScorer};
use slipforge_core::datastore::{
    model_fingerprint, DatasetManifest, Fragment, FragmentProvenance, Group, Ledger, MatchFilter, MatchRecord,
    NewMatch, Verdict,
};
use slipforge_core::evaluation::{rank_edges, Scorer};
use slipforge_core::features::EdgeVector;
use slipforge_core::matcher::{EmbeddingModel, MatcherScorer};
use slipforge_core::Error;

pub const DEFAULT_K: usize = 50;

/// Read-only ranking context plus the ledger.
pub struct AppState {
    dataset: DatasetManifest,
    edges: HashMap<String, EdgeVector>,
    upper: Vec<EdgeVector>,
    lower: Vec<EdgeVector>,
    matcher: MatcherScorer,
    model_id: String,
    ledger: Ledger,
}

impl AppState {
    pub fn new(dataset: DatasetManifest, model: EmbeddingModel, ledger: Ledger) -> slipforge_core::Result<Self> {
        dataset.validate()?;
        let model_id = model_fingerprint(&model)?;
        let mut edges = HashMap::new();
        let (mut upper, mut lower) = (Vec::new(), Vec::new());
        for f in &dataset.fragments {
            let v = EdgeVector::from_fragment(f)?;
            match f.group {
                Group::Upper => upper.push(v.clone()),
                Group::Lower => lower.push(v.clone()),
            }
            edges.insert(f.id.clone(), v);
        }
        let matcher = MatcherScorer::new(model)?.with_cache(edges.values())?;
        Ok(Self { dataset, edges, upper, lower, matcher, model_id, ledger })
    }

    fn pool(&self, group: Group) -> &[EdgeVector] {
        match group {
            Group::Upper => &self.upper,
            Group::Lower => &self.lower,
        }
    }

    fn fragment(&self, id: &str) -> Result<&Fragment, ApiError> {
        self.dataset.fragment(id).ok_or_else(|| ApiError::from(Error::NotFound(id.to_owned())))
    }
}

/// JSON error body: `{"error": "<stable code>", "message": "..."}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "invalid_input", message: message.into() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Input(_) | Error::ParamDomain(_) | Error::Parse { .. } => StatusCode::BAD_REQUEST,
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Protocol(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self { status, code: e.code(), message: e.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            log::error!("{}: {}", self.code, self.message);
        }
        (self.status, Json(ErrorBody { error: self.code.into(), message: self.message })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub dataset: String,
    pub fragments: usize,
    pub pairs: usize,
    pub model: String,
    pub layer_dims: Vec<usize>,
}

async fn health(State(app): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        dataset: app.dataset.name.clone(),
        fragments: app.dataset.fragments.len(),
        pairs: app.dataset.ground_truth.len(),
        model: app.model_id.clone(),
        layer_dims: app.matcher.model().layer_dims.clone(),
    })
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct FragmentSummary {
    pub id: String,
    pub group: Group,
    pub samples: usize,
    /// Raw heights, for thumbnails.
    pub edge: Vec<f64>,
}

#[derive(Deserialize)]
struct GroupQuery {
    group: Option<String>,
}

async fn list_fragments(State(app): State<Arc<AppState>>, Query(q): Query<GroupQuery>) -> ApiResult<Vec<FragmentSummary>> {
    let group: Option<Group> = q.group.as_deref().map(str::parse).transpose()?;
    let mut out: Vec<FragmentSummary> = app
        .dataset
        .fragments
        .iter()
        .filter(|f| group.is_none_or(|g| f.group == g))
        .map(|f| FragmentSummary { id: f.id.clone(), group: f.group, samples: f.edge.len(), edge: f.edge.clone() })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Json(out))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct FragmentDetail {
    pub id: String,
    pub group: Group,
    pub edge: Vec<f64>,
    pub provenance: Option<FragmentProvenance>,
}

async fn get_fragment(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<FragmentDetail> {
    let f = app.fragment(&id)?;
    Ok(Json(FragmentDetail { id: f.id.clone(), group: f.group, edge: f.edge.clone(), provenance: f.provenance.clone() }))
}

#[derive(Deserialize)]
struct CandidateQuery {
    k: Option<String>,
    method: Option<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Candidate {
    pub rank: usize,
    pub candidate_id: String,
    pub score: f64,
    pub confidence: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub target_id: String,
    pub method: String,
    pub k: usize,
    pub pool_size: usize,
    pub candidates: Vec<Candidate>,
}

fn ranked<S: Scorer + ?Sized>(target: &EdgeVector, pool: &[EdgeVector], scorer: &S, k: usize) -> Vec<Candidate> {
    rank_edges(target, pool, scorer, None)
        .entries
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, e)| Candidate {
            rank: i + 1,
            confidence: scorer.confidence(e.score),
            candidate_id: e.candidate_id,
            score: e.score,
        })
        .collect()
}

async fn candidates(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<CandidateQuery>,
) -> ApiResult<CandidateList> {
    let k = match q.k.as_deref() {
        None => DEFAULT_K,
        Some(raw) => match raw.parse::<usize>() {
            Ok(k) if k >= 1 => k,
            _ => return Err(ApiError::bad_request(format!("k must be a positive integer, got {raw:?}"))),
        },
    };
    let method = q.method.unwrap_or_else(|| "wisepanda".into());
    if !["wisepanda", "dtw", "cosine"].contains(&method.as_str()) {
        return Err(ApiError::bad_request(format!("unknown method {method:?}; expected wisepanda, dtw or cosine")));
    }
    let group = app.fragment(&id)?.group;
    let result = tokio::task::spawn_blocking(move || {
        let target = &app.edges[&id];
        let pool = app.pool(group.opposite());
        let candidates = match method.as_str() {
            "wisepanda" => ranked(target, pool, &app.matcher, k),
            "dtw" => ranked(target, pool, &DtwScorer, k),
            _ => ranked(target, pool, &CosineScorer, k),
        };
        CandidateList { target_id: id, method, k, pool_size: pool.len(), candidates }
    })
    .await
    .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal", message: e.to_string() })?;
    Ok(Json(result))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct MatchRequest {
    pub target_id: String,
    pub candidate_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub note: String,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub rank_shown: Option<usize>,
    #[serde(default)]
    pub confidence_shown: Option<f64>,
}

async fn post_match(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<MatchRecord> {
    let req: MatchRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed match body: {e}")))?;
    let target = app.fragment(&req.target_id)?;
    let candidate = app.fragment(&req.candidate_id)?;
    if target.group == candidate.group {
        return Err(Error::Protocol(format!(
            "{} and {} are both {} fragments",
            target.id,
            candidate.id,
            target.group.as_str()
        ))
        .into());
    }
    let new = NewMatch {
        target_id: req.target_id,
        candidate_id: req.candidate_id,
        verdict: req.verdict,
        method: req.method.unwrap_or_default(),
        rank_shown: req.rank_shown,
        confidence_shown: req.confidence_shown,
        note: req.note,
    };
    let record = tokio::task::spawn_blocking(move || app.ledger.append(new))
        .await
        .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal", message: e.to_string() })??;
    Ok(Json(record))
}

#[derive(Deserialize)]
struct MatchQuery {
    target_id: Option<String>,
    candidate_id: Option<String>,
}

async fn list_matches(State(app): State<Arc<AppState>>, Query(q): Query<MatchQuery>) -> ApiResult<Vec<MatchRecord>> {
    let filter = MatchFilter { target_id: q.target_id, candidate_id: q.candidate_id };
    let scan = tokio::task::spawn_blocking(move || app.ledger.list(&filter))
        .await
        .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal", message: e.to_string() })??;
    Ok(Json(scan.records))
}

async fn api_not_found() -> ApiError {
    ApiError { status: StatusCode::NOT_FOUND, code: "not_found", message: "no such endpoint".into() }
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/fragments", get(list_fragments))
        .route("/fragments/{id}", get(get_fragment))
        .route("/fragments/{id}/candidates", get(candidates))
        .route("/matches", get(list_matches).post(post_match))
        .fallback(api_not_found)
        .with_state(state);
    let app = Router::new().nest("/api", api);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Binds `addr` and serves until ctrl-c. `on_bound` receives the actual
/// address (useful with port 0).
pub async fn serve(
    state: AppState,
    addr: SocketAddr,
    static_dir: Option<PathBuf>,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state), static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

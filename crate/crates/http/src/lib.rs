//! HTTP front end for the broker.
//!
//! The configured [`Engine`] is immutable and shared behind an `Arc`; a
//! reindex builds a complete replacement off the request path and swaps
//! it in, so in-flight searches finish against the engine they started on.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fedsel_core::broker::{query_terms, QueryResponse};
use fedsel_core::directory::{ActivityLog, CoriParams, Routing};
use fedsel_core::{Engine, Error, QueryRequest, Session, UtilityConstraints};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    /// `host:port`.
    pub listen_address: String,
    pub index_path: PathBuf,
    pub default_constraints: UtilityConstraints,
}

impl ApiConfig {
    pub fn new(listen_address: impl Into<String>, index_path: impl Into<PathBuf>) -> Self {
        ApiConfig {
            listen_address: listen_address.into(),
            index_path: index_path.into(),
            default_constraints: UtilityConstraints::default(),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let port = self
            .listen_address
            .rsplit_once(':')
            .and_then(|(host, port)| (!host.is_empty()).then_some(port))
            .and_then(|p| p.parse::<u16>().ok());
        match port {
            Some(p) if p >= 1 => self.default_constraints.validate(),
            _ => Err(Error::InvalidArgument(format!(
                "listen address {:?} is not host:port with port in 1..=65535",
                self.listen_address
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        }
    }

    fn not_ready() -> Self {
        Self::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "service_not_ready",
            "no directory index is loaded",
        )
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::InvalidQuery(_) => StatusCode::BAD_REQUEST,
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// `/search` body: the broker response, plus an advisory when nothing
/// could be searched.
#[derive(Debug, Serialize)]
pub struct SearchBody {
    #[serde(flatten)]
    pub response: QueryResponse,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectionDescriptor {
    pub name: String,
    pub record_count: u64,
    pub df_max: u64,
    pub est_latency_ms: u64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectionCount {
    pub name: String,
    pub record_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReindexBody {
    pub terms: usize,
    pub collections: Vec<CollectionCount>,
}

pub struct AppState {
    config: ApiConfig,
    session: Session,
    params: CoriParams,
    log: Arc<ActivityLog>,
    engine: RwLock<Option<Arc<Engine>>>,
    reindexing: AtomicBool,
}

/// Held while a reindex runs; a second one is refused until it drops.
pub struct ReindexGuard<'a>(&'a AtomicBool);

impl Drop for ReindexGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

impl AppState {
    /// A server with nothing loaded; every read endpoint answers 503 until
    /// a reindex succeeds.
    pub fn new(config: ApiConfig, session: Session, params: CoriParams) -> Self {
        AppState {
            config,
            session,
            params,
            log: Arc::new(ActivityLog::new()),
            engine: RwLock::new(None),
            reindexing: AtomicBool::new(false),
        }
    }

    pub fn with_engine(config: ApiConfig, session: Session, engine: Engine) -> Self {
        let log = engine.log().clone();
        let state = Self::new(config, session, *engine.directory().params()).with_log(log);
        state.install(engine);
        state
    }

    /// Shares `log` with every engine installed from now on.
    pub fn with_log(mut self, log: Arc<ActivityLog>) -> Self {
        self.log = log;
        self
    }

    pub fn config(&self) -> &ApiConfig {
        &self.config
    }

    pub fn log(&self) -> &Arc<ActivityLog> {
        &self.log
    }

    /// The engine serving right now, if any.
    pub fn engine(&self) -> Option<Arc<Engine>> {
        self.engine.read().unwrap().clone()
    }

    /// Swaps in `engine`; searches already running keep the old one.
    pub fn install(&self, engine: Engine) {
        let engine = Arc::new(engine.with_log(self.log.clone()));
        *self.engine.write().unwrap() = Some(engine);
    }

    fn claim_reindex(&self) -> bool {
        self.reindexing
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .is_ok()
    }

    pub fn try_begin_reindex(&self) -> Option<ReindexGuard<'_>> {
        self.claim_reindex().then(|| ReindexGuard(&self.reindexing))
    }

    /// Rebuilds from the corpora, writes the index file, then swaps. On any
    /// error the previous engine and file are left in place.
    pub fn rebuild(&self, _guard: &ReindexGuard<'_>) -> Result<ReindexBody, Error> {
        let params = self
            .engine()
            .map(|e| *e.directory().params())
            .unwrap_or(self.params);
        let engine = self.session.build_engine(params)?;
        engine.directory().save(&self.config.index_path)?;
        let body = ReindexBody {
            terms: engine.directory().matrix().term_count(),
            collections: engine
                .directory()
                .matrix()
                .collections()
                .iter()
                .map(|c| CollectionCount {
                    name: c.id.to_string(),
                    record_count: c.record_count,
                })
                .collect(),
        };
        self.install(engine);
        Ok(body)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/collections", get(collections))
        .route("/admin/reindex", post(reindex))
        .with_state(state)
}

/// Binds `config.listen_address` and serves until the process exits.
pub async fn serve(state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&state.config.listen_address).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}

fn parse_param<T: std::str::FromStr>(
    params: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, ApiError> {
    match params.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|_| {
            ApiError::new(
                StatusCode::BAD_REQUEST,
                "invalid_parameter",
                format!("{key}={raw:?} is not a valid value"),
            )
        }),
    }
}

/// Translates `/search` query parameters into a broker request.
pub fn search_request(
    params: &HashMap<String, String>,
    defaults: &UtilityConstraints,
) -> Result<QueryRequest, ApiError> {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    if q.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "missing_query",
            "parameter q is required",
        ));
    }
    let mut constraints = *defaults;
    if let Some(n) = parse_param(params, "n")? {
        constraints.max_results = n;
    }
    if let Some(k) = parse_param(params, "k")? {
        constraints.num_databases = k;
    }
    if let Some(ttl) = parse_param(params, "ttl_ms")? {
        constraints.ttl_ms = ttl;
    }
    if let Some(p) = parse_param::<f64>(params, "max_price")? {
        constraints.max_price = Some(p);
    }
    let mut request = QueryRequest::new(q).with_constraints(constraints);
    if let Some(db) = params.get("db").filter(|d| !d.is_empty()) {
        request = request.with_target(db.clone());
    }
    Ok(request)
}

async fn search(
    State(state): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<SearchBody>, ApiError> {
    let request = search_request(&params, &state.config.default_constraints)?;
    let engine = state.engine().ok_or_else(ApiError::not_ready)?;
    let result = tokio::task::spawn_blocking(move || {
        let started = std::time::Instant::now();
        match engine.handle_query(&request) {
            Ok(response) => Ok(SearchBody {
                response,
                advisory: None,
            }),
            Err(Error::NoEligibleDatabase) => {
                let terms = query_terms(&request.text);
                Ok(SearchBody {
                    response: QueryResponse {
                        query: request.text.clone(),
                        per_collection_frequency: engine.directory().frequency_report(&terms),
                        terms: terms.into_iter().collect(),
                        routing: Routing::Directory,
                        selected: Vec::new(),
                        hits: Vec::new(),
                        timing_ms: started.elapsed().as_secs_f64() * 1000.0,
                    },
                    advisory: Some("no collection satisfies the latency and price limits".into()),
                })
            }
            Err(e) => Err(ApiError::from(e)),
        }
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    result.map(Json)
}

async fn collections(
    State(state): State<Arc<AppState>>,
) -> Result<Json<Vec<CollectionDescriptor>>, ApiError> {
    let engine = state.engine().ok_or_else(ApiError::not_ready)?;
    let directory = engine.directory();
    let list = directory
        .matrix()
        .collections()
        .iter()
        .map(|c| {
            let profile = directory.profile(c.id.as_str());
            CollectionDescriptor {
                name: c.id.to_string(),
                record_count: c.record_count,
                df_max: c.df_max,
                est_latency_ms: profile.est_latency_ms,
                price: profile.price,
            }
        })
        .collect();
    Ok(Json(list))
}

async fn reindex(State(state): State<Arc<AppState>>) -> Result<Json<ReindexBody>, ApiError> {
    // The flag is claimed here and released by the guard on the worker.
    if !state.claim_reindex() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "reindex_in_progress",
            "a reindex is already running",
        ));
    }
    let worker = state.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let guard = ReindexGuard(&worker.reindexing);
        worker.rebuild(&guard)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    outcome.map(Json).map_err(|e| {
        tracing::warn!(error = %e, "reindex failed; keeping the previous index");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.code(), e.to_string())
    })
}

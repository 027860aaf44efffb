//! JSON-over-HTTP routes.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tracing::info;

use crate::error::ServiceError;
use crate::store::{CatalogInfo, SessionStore, SessionView, SolutionsView, TraceView, DEFAULT_SOLUTION_LIMIT};

type Shared = State<Arc<SessionStore>>;

#[derive(Debug, Default, Deserialize)]
pub struct LimitQuery {
    limit: Option<usize>,
}

fn limit(query: Result<Query<LimitQuery>, QueryRejection>) -> Result<usize, ServiceError> {
    let Query(q) = query.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    match q.limit {
        Some(0) => Err(ServiceError::BadRequest("limit must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(DEFAULT_SOLUTION_LIMIT),
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

async fn register_catalog(State(store): Shared, body: Bytes) -> Result<(StatusCode, Json<CatalogInfo>), ServiceError> {
    let info = store.register_catalog(parse(&body)?)?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn create_session(State(store): Shared, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let view = store.create_session(parse(&body)?)?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(store): Shared,
    Path(id): Path<String>,
    query: Result<Query<LimitQuery>, QueryRejection>,
) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(store.get_state(&id, limit(query)?)?))
}

async fn post_constraint(
    State(store): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(store.post_constraint(&id, parse(&body)?)?))
}

async fn apply(State(store): Shared, Path(id): Path<String>, body: Bytes) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(store.apply_suggestion(&id, parse(&body)?)?))
}

async fn solutions(
    State(store): Shared,
    Path(id): Path<String>,
    query: Result<Query<LimitQuery>, QueryRejection>,
) -> Result<Json<SolutionsView>, ServiceError> {
    Ok(Json(store.solutions(&id, limit(query)?)?))
}

async fn trace(State(store): Shared, Path(id): Path<String>) -> Result<Json<TraceView>, ServiceError> {
    Ok(Json(store.trace(&id)?))
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/catalogs", post(register_catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/constraints", post(post_constraint))
        .route("/sessions/{id}/apply", post(apply))
        .route("/sessions/{id}/solutions", get(solutions))
        .route("/sessions/{id}/trace", get(trace))
        .with_state(store)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(store)).await
}

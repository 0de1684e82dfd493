//! HTTP interface.
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | POST | `/surveys` | `SurveySpec` → 201 `{"id": ...}` |
//! | GET | `/surveys/{id}/next?participant=P` | `NextQuestion` |
//! | POST | `/surveys/{id}/votes` | `VoteRequest` → `VoteAck`, 409 on a repeat |
//! | GET | `/surveys/{id}/groups/{gid}/results` | `GroupResults` |
//! | GET | `/surveys/{id}/export` | tar archive |
//!
//! Errors are `{"error": kind, "message": text}` with status 400, 404, 409 or
//! 500.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};
use crate::model::{SurveySpec, VoteRequest};
use crate::store::{Durability, SurveyStore};

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ServiceError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ServiceError::Validation(_) | ServiceError::Json(_) => (StatusCode::BAD_REQUEST, "validation"),
            ServiceError::Core(_) | ServiceError::Corrupt(_) | ServiceError::Io(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        (status, Json(ErrorBody { error: kind, message: self.to_string() })).into_response()
    }
}

type AppState = Arc<SurveyStore>;

/// Store calls may block on file IO.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ServiceResult<T> + Send + 'static,
) -> ServiceResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::Io(std::io::Error::other(e)))?
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ServiceResult<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Validation(format!("malformed JSON body: {e}")))
}

#[derive(Serialize, Deserialize)]
struct Created {
    id: String,
}

async fn create(State(store): State<AppState>, body: Bytes) -> ServiceResult<(StatusCode, Json<Created>)> {
    let spec: SurveySpec = parse_json(&body)?;
    let id = blocking(move || store.create_survey(spec)).await?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

#[derive(Deserialize)]
struct NextParams {
    participant: Option<String>,
}

async fn next(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<NextParams>,
) -> ServiceResult<Response> {
    let participant = params
        .participant
        .ok_or_else(|| ServiceError::Validation("missing participant query parameter".into()))?;
    let q = blocking(move || store.next_question(&id, &participant)).await?;
    Ok(Json(q).into_response())
}

async fn vote(State(store): State<AppState>, Path(id): Path<String>, body: Bytes) -> ServiceResult<Response> {
    let req: VoteRequest = parse_json(&body)?;
    let ack = blocking(move || store.record_vote(&id, req)).await?;
    Ok(Json(ack).into_response())
}

async fn results(
    State(store): State<AppState>,
    Path((id, gid)): Path<(String, String)>,
) -> ServiceResult<Response> {
    let r = blocking(move || store.group_results(&id, &gid)).await?;
    Ok(Json(r).into_response())
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> ServiceResult<Response> {
    let name = format!("attachment; filename=\"{id}.tar\"");
    let bytes = blocking(move || store.export_survey(&id)).await?;
    Ok((
        [(header::CONTENT_TYPE, "application/x-tar".to_string()), (header::CONTENT_DISPOSITION, name)],
        bytes,
    )
        .into_response())
}

pub fn router(store: Arc<SurveyStore>) -> Router {
    Router::new()
        .route("/surveys", post(create))
        .route("/surveys/{id}/next", get(next))
        .route("/surveys/{id}/votes", post(vote))
        .route("/surveys/{id}/groups/{gid}/results", get(results))
        .route("/surveys/{id}/export", get(export))
        .with_state(store)
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    /// Schedule seed for surveys whose spec does not set one.
    pub seed: u64,
    pub durability: Durability,
}

/// Opens the store and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> ServiceResult<()> {
    let data_dir = config.data_dir.clone();
    let store = blocking(move || SurveyStore::open(data_dir, config.seed, config.durability)).await?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    eprintln!(
        "serving {} survey(s) from {} on http://{}",
        store.survey_ids().len(),
        config.data_dir.display(),
        listener.local_addr()?
    );
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

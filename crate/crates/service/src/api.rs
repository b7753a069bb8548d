//! HTTP JSON API.

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use soundstage_core::model::{Fades, ProjectId, SceneId, TrackFilter, TrackId};
use soundstage_engine::ExpansionConfig;

use crate::app::{App, NewProject, VideoUpload};
use crate::error::ServiceError;

/// JSON extractor whose rejections use the service error body.
pub struct Json<T>(pub T);

impl<S, T> FromRequest<S> for Json<T>
where
    axum::Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Json(v)),
            Err(e) => Err(ServiceError::BadRequest(e.body_text())),
        }
    }
}

/// Path parameters; bad values answer with the service error body.
pub struct Path<T>(pub T);

impl<S, T> FromRequestParts<S> for Path<T>
where
    axum::extract::Path<T>: FromRequestParts<S, Rejection = PathRejection>,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        match axum::extract::Path::<T>::from_request_parts(parts, state).await {
            Ok(axum::extract::Path(v)) => Ok(Path(v)),
            Err(e) => Err(ServiceError::BadRequest(e.body_text())),
        }
    }
}

pub struct Query<T>(pub T);

impl<S, T> FromRequestParts<S> for Query<T>
where
    axum::extract::Query<T>: FromRequestParts<S, Rejection = QueryRejection>,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        match axum::extract::Query::<T>::from_request_parts(parts, state).await {
            Ok(axum::extract::Query(v)) => Ok(Query(v)),
            Err(e) => Err(ServiceError::BadRequest(e.body_text())),
        }
    }
}

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, axum::Json(self.body())).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

pub fn router(app: App) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/video", post(set_video))
        .route("/projects/{id}/scenes/{sid}/generate", post(generate))
        .route("/projects/{id}/scenes/{sid}/keywords", get(keywords))
        .route("/projects/{id}/scenes/{sid}/alternatives", get(alternatives))
        .route("/projects/{id}/scenes/{sid}/placements", post(attach))
        .route("/projects/{id}/scenes/{sid}/placements/{idx}", delete(remove_placement))
        .route("/projects/{id}/scenes/{sid}/placements/{idx}/activate", post(activate))
        .route("/projects/{id}/tracks", get(list_tracks))
        .route("/projects/{id}/blend", post(blend))
        .route("/projects/{id}/map", get(get_map).post(map_job))
        .route("/jobs", get(list_jobs))
        .route("/jobs/{id}", get(get_job))
        .route("/tracks/{id}/edit", post(edit))
        .route("/tracks/{id}/vary", post(vary))
        .route("/tracks/{id}/analyze", post(analyze))
        .route("/tracks/{id}/thumbnail", post(thumbnail))
        .route("/tracks/{id}/thumbnail/animate", post(animate))
        .route("/assets/{hash}", get(asset))
        .fallback(|| async { ServiceError::not_found("route", "unknown path") })
        .with_state(app)
}

fn accepted<T: Serialize>(body: T) -> Response {
    (StatusCode::ACCEPTED, axum::Json(body)).into_response()
}

async fn create_project(State(app): State<App>, Json(body): Json<NewProject>) -> ApiResult<Response> {
    let p = app.create_project(body).await?;
    Ok((StatusCode::CREATED, axum::Json(p)).into_response())
}

async fn list_projects(State(app): State<App>) -> ApiResult<Json<Vec<ProjectId>>> {
    Ok(Json(app.storage.project_ids()?))
}

async fn get_project(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(axum::Json(app.project(&ProjectId::new(id))?).into_response())
}

async fn set_video(State(app): State<App>, Path(id): Path<String>, Json(body): Json<VideoUpload>) -> ApiResult<Response> {
    Ok(accepted(app.set_video(&ProjectId::new(id), body).await?))
}

#[derive(Deserialize)]
struct GenerateBody {
    prompt: String,
    #[serde(default)]
    config: Option<ExpansionConfig>,
}

async fn generate(
    State(app): State<App>,
    Path((id, sid)): Path<(String, SceneId)>,
    Json(body): Json<GenerateBody>,
) -> ApiResult<Response> {
    Ok(accepted(app.generate(&ProjectId::new(id), sid, &body.prompt, body.config).await?))
}

#[derive(Deserialize)]
struct SeedQuery {
    #[serde(default)]
    seed: Option<u64>,
}

async fn keywords(
    State(app): State<App>,
    Path((id, sid)): Path<(String, SceneId)>,
    Query(q): Query<SeedQuery>,
) -> ApiResult<Response> {
    let seed = q.seed.unwrap_or_else(rand_seed);
    Ok(axum::Json(app.suggestions(&ProjectId::new(id), sid, seed)?).into_response())
}

fn rand_seed() -> u64 {
    let u = uuid::Uuid::new_v4();
    u64::from_le_bytes(u.as_bytes()[..8].try_into().expect("8 bytes"))
}

async fn alternatives(State(app): State<App>, Path((id, sid)): Path<(String, SceneId)>) -> ApiResult<Response> {
    let p = app.project(&ProjectId::new(id))?;
    let views: Vec<_> =
        p.list_alternatives(sid)?.into_iter().map(|t| crate::app::TrackView::new(&p, t)).collect();
    Ok(axum::Json(views).into_response())
}

#[derive(Deserialize)]
struct AttachBody {
    track_id: TrackId,
    #[serde(default)]
    fades: Option<Fades>,
}

async fn attach(
    State(app): State<App>,
    Path((id, sid)): Path<(String, SceneId)>,
    Json(body): Json<AttachBody>,
) -> ApiResult<Response> {
    let placement = app.attach(&ProjectId::new(id), sid, &body.track_id, body.fades).await?;
    Ok((StatusCode::CREATED, axum::Json(placement)).into_response())
}

async fn remove_placement(
    State(app): State<App>,
    Path((id, sid, idx)): Path<(String, SceneId, usize)>,
) -> ApiResult<Response> {
    Ok(axum::Json(app.remove_placement(&ProjectId::new(id), sid, idx).await?).into_response())
}

async fn activate(
    State(app): State<App>,
    Path((id, sid, idx)): Path<(String, SceneId, usize)>,
) -> ApiResult<Response> {
    let pid = ProjectId::new(id);
    app.set_active(&pid, sid, idx).await?;
    Ok(axum::Json(app.project(&pid)?.placements).into_response())
}

#[derive(Deserialize)]
struct TrackQuery {
    #[serde(default)]
    filter: Option<String>,
    #[serde(default)]
    q: Option<String>,
}

async fn list_tracks(State(app): State<App>, Path(id): Path<String>, Query(q): Query<TrackQuery>) -> ApiResult<Response> {
    let filter: TrackFilter = q
        .filter
        .as_deref()
        .unwrap_or("")
        .parse()
        .map_err(ServiceError::BadRequest)?;
    Ok(axum::Json(app.list_tracks(&ProjectId::new(id), filter, q.q.as_deref())?).into_response())
}

#[derive(Deserialize)]
struct BlendBody {
    track_ids: Vec<TrackId>,
}

async fn blend(State(app): State<App>, Path(id): Path<String>, Json(body): Json<BlendBody>) -> ApiResult<Response> {
    Ok(accepted(app.blend(&ProjectId::new(id), &body.track_ids)?))
}

async fn get_map(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(axum::Json(app.map(&ProjectId::new(id)).await?).into_response())
}

async fn map_job(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(accepted(app.map_job(&ProjectId::new(id))?))
}

async fn list_jobs(State(app): State<App>) -> Response {
    axum::Json(app.jobs.list()).into_response()
}

async fn get_job(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(axum::Json(app.jobs.get(&id)?).into_response())
}

#[derive(Deserialize)]
struct EditBody {
    request: String,
}

async fn edit(State(app): State<App>, Path(id): Path<String>, Json(body): Json<EditBody>) -> ApiResult<Response> {
    Ok(accepted(app.edit(&TrackId::new(id), &body.request)?))
}

async fn vary(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(accepted(app.vary(&TrackId::new(id))?))
}

async fn analyze(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(accepted(app.analyze(&TrackId::new(id))?))
}

async fn thumbnail(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(accepted(app.thumbnail(&TrackId::new(id), false)?))
}

async fn animate(State(app): State<App>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(accepted(app.thumbnail(&TrackId::new(id), true)?))
}

fn content_type(ext: &str) -> &'static str {
    match ext {
        "wav" => "audio/wav",
        "png" => "image/png",
        "mp4" => "video/mp4",
        "webm" => "video/webm",
        "gif" => "image/gif",
        "json" => "application/json",
        _ => "application/octet-stream",
    }
}

async fn asset(State(app): State<App>, Path(hash): Path<String>) -> ApiResult<Response> {
    let hash = hash.split('.').next().unwrap_or_default().to_string();
    let (r, bytes) = app.asset(&hash)?;
    Ok((
        [
            (header::CONTENT_TYPE, content_type(r.ext())),
            (header::CACHE_CONTROL, "public, max-age=31536000, immutable"),
        ],
        bytes,
    )
        .into_response())
}

/// Serves until ctrl-c.
pub async fn serve(app: App) -> std::io::Result<()> {
    let addr = app.config.server.bind;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

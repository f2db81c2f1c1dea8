//! HTTP routes. Bodies are JSON; errors come back as [`ApiError`].

use std::convert::Infallible;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, BoxStream, StreamExt};
use lecturelens_core::geometry::Rect;
use lecturelens_core::media::SpeechJob;
use lecturelens_core::net;
use lecturelens_core::session::{
    InteractionRecord, Mode, QuizPrompt, Session, SessionError, SessionEvent,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;
use tower_http::cors::CorsLayer;

use crate::state::{AppState, SessionHandle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApiError {
    pub code: String,
    pub http_status: u16,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.into(),
            http_status: status.as_u16(),
            message: message.into(),
            detail: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalidArgument", message)
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, "notFound", format!("unknown {what}"))
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::IllegalTransition { .. } | SessionError::NoSection => {
                StatusCode::CONFLICT
            }
            SessionError::InvalidArgument(_) => StatusCode::BAD_REQUEST,
            SessionError::NotFound(_) | SessionError::EmptyBank(_) => StatusCode::NOT_FOUND,
            SessionError::Provider(_) | SessionError::Media(_) => StatusCode::BAD_GATEWAY,
            SessionError::Orphan(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let SessionError::IllegalTransition { mode, op } = &e {
            err.detail = Some(json!({ "mode": mode, "op": op }));
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses a JSON body; an empty body reads as `{}`.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    let text: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        bytes
    };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/lectures", get(list_lectures))
        .route("/lectures/{id}/manifest", get(manifest))
        .route("/lectures/{id}/sections/{n}/slide.png", get(slide))
        .route("/lectures/{id}/examples/{file}", get(example_file))
        .route("/lectures/{id}/video", get(video))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/clarify", post(clarify))
        .route("/sessions/{id}/visual", post(visual))
        .route("/sessions/{id}/visual/dismiss", post(dismiss_visual))
        .route("/sessions/{id}/quiz/next", post(quiz_next))
        .route("/sessions/{id}/quiz/answer", post(quiz_answer))
        .route("/sessions/{id}/difficulty", post(difficulty))
        .route("/sessions/{id}/break", post(start_break))
        .route("/sessions/{id}/highlight", post(highlight))
        .route("/sessions/{id}/position", post(position))
        .route("/sessions/{id}/examples/{n}/open", post(open_example))
        .route("/sessions/{id}/example/close", post(close_example))
        .route("/sessions/{id}/notes", post(add_note))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/summary/open", post(open_summary))
        .route("/sessions/{id}/summary/close", post(close_summary))
        .route("/sessions/{id}/replay", post(replay))
        .route("/sessions/{id}/clarify-replay", post(replay))
        .route("/sessions/{id}/events", get(events))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

// ---- lectures ---------------------------------------------------------------

async fn health(State(st): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "provider": st.services.gateway.provider_name(),
        "outboundRequests": net::outbound_requests(),
        "lectures": st.lectures.read().map(|l| l.len()).unwrap_or(0),
        "sessions": st.sessions.read().map(|s| s.len()).unwrap_or(0),
    }))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LectureInfo {
    id: String,
    title: String,
    duration_sec: f64,
    section_count: usize,
    example_count: usize,
}

async fn list_lectures(State(st): State<Arc<AppState>>) -> Json<Vec<LectureInfo>> {
    let lectures = st.lectures.read().unwrap_or_else(|p| p.into_inner());
    Json(
        lectures
            .values()
            .map(|l| LectureInfo {
                id: l.bundle.id.clone(),
                title: l.bundle.title.clone(),
                duration_sec: l.bundle.duration_sec,
                section_count: l.bundle.sections.len(),
                example_count: l.bundle.examples.len(),
            })
            .collect(),
    )
}

fn lecture(st: &AppState, id: &str) -> ApiResult<Arc<lecturelens_core::session::Lecture>> {
    st.lecture(id)
        .ok_or_else(|| ApiError::not_found(format_args!("lecture {id}")))
}

async fn manifest(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let l = lecture(&st, &id)?;
    Ok(Json(&l.bundle).into_response())
}

async fn read_file(path: PathBuf, content_type: &'static str) -> ApiResult<Response> {
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|_| ApiError::not_found(format_args!("file {}", path.display())))?;
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

/// `n` is a zero-based section index or a section id.
async fn slide(
    State(st): State<Arc<AppState>>,
    Path((id, n)): Path<(String, String)>,
) -> ApiResult<Response> {
    let l = lecture(&st, &id)?;
    let idx = n
        .parse::<usize>()
        .ok()
        .or_else(|| l.bundle.section_index(&n));
    let section = idx
        .and_then(|i| l.bundle.sections.get(i))
        .ok_or_else(|| ApiError::not_found(format_args!("section {n}")))?;
    read_file(l.dir.join(&section.slide_image_ref), "image/png").await
}

async fn example_file(
    State(st): State<Arc<AppState>>,
    Path((id, file)): Path<(String, String)>,
) -> ApiResult<Response> {
    let l = lecture(&st, &id)?;
    let wanted = format!("examples/{file}");
    if !l.bundle.examples.iter().any(|e| e.html_ref == wanted) {
        return Err(ApiError::not_found(format_args!("example {file}")));
    }
    read_file(l.dir.join(wanted), "text/html; charset=utf-8").await
}

fn content_type_for(path: &FsPath) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("gif") => "image/gif",
        Some("mp4") => "video/mp4",
        Some("webm") => "video/webm",
        Some("mov") => "video/quicktime",
        _ => "application/octet-stream",
    }
}

async fn video(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let l = lecture(&st, &id)?;
    let r = PathBuf::from(&l.bundle.video_ref);
    let path = if r.is_absolute() || !l.dir.join(&r).is_file() {
        r
    } else {
        l.dir.join(&r)
    };
    let ct = content_type_for(&path);
    read_file(path, ct).await
}

// ---- sessions ---------------------------------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    session_id: String,
    bundle_id: String,
    position_sec: f64,
    mode: Mode,
    difficulty: u8,
    interests: Vec<String>,
    highlight_enabled: bool,
    log: Vec<InteractionRecord>,
    last_seq: u64,
    active_quiz: Option<QuizPrompt>,
    speech: Option<SpeechJob>,
}

fn view(s: &Session) -> SessionView {
    let st = s.state();
    SessionView {
        session_id: st.session_id.clone(),
        bundle_id: st.bundle_id.clone(),
        position_sec: st.position_sec,
        mode: st.mode,
        difficulty: st.difficulty,
        interests: st.interests.clone(),
        highlight_enabled: st.highlight_enabled,
        log: st.log.clone(),
        last_seq: s.last_seq(),
        active_quiz: s.active_quiz().cloned(),
        speech: s.current_speech().cloned(),
    }
}

fn handle(st: &AppState, id: &str) -> ApiResult<Arc<SessionHandle>> {
    st.session(id)
        .ok_or_else(|| ApiError::not_found(format_args!("session {id}")))
}

/// Runs a session operation off the async workers (providers may block).
async fn run<T, F>(st: Arc<AppState>, id: String, op: F) -> ApiResult<Json<T>>
where
    T: Serialize + Send + 'static,
    F: FnOnce(&mut Session, f64) -> Result<T, SessionError> + Send + 'static,
{
    let h = handle(&st, &id)?;
    let out = tokio::task::spawn_blocking(move || {
        let now = st.now();
        h.with(|s| op(s, now))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(out))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateSession {
    bundle_id: String,
    #[serde(default)]
    interests: Vec<String>,
    /// Where the UI shows the avatar; kept free of overlays.
    avatar_rect: Option<Rect>,
}

async fn create_session(State(st): State<Arc<AppState>>, raw: Bytes) -> ApiResult<Response> {
    let req: CreateSession = body(&raw)?;
    let l = lecture(&st, &req.bundle_id)?;
    if let Some(r) = req.avatar_rect {
        if !r.is_proper() || !r.within_unit() {
            return Err(ApiError::bad_request(
                "avatarRect must be a proper rectangle inside [0,1]^2",
            ));
        }
    }
    let h = st
        .create_session(l, req.interests, req.avatar_rect)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let v = h.peek(view);
    Ok((StatusCode::CREATED, Json(v)).into_response())
}

async fn get_session(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionView>> {
    let h = handle(&st, &id)?;
    Ok(Json(h.peek(view)))
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct AreaBody {
    area_rect: Option<Rect>,
    question: Option<String>,
}

async fn clarify(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Response> {
    let b: AreaBody = body(&raw)?;
    Ok(run(st, id, move |s, now| {
        s.ask_clarification(now, b.area_rect, b.question.as_deref())
    })
    .await?
    .into_response())
}

async fn visual(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Response> {
    let b: AreaBody = body(&raw)?;
    Ok(
        run(st, id, move |s, now| s.request_visual(now, b.area_rect))
            .await?
            .into_response(),
    )
}

fn ack(s: &Session) -> Value {
    json!({ "mode": s.state().mode, "lastSeq": s.last_seq() })
}

async fn dismiss_visual(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    run(st, id, |s, now| s.dismiss_visual(now).map(|_| ack(s))).await
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct QuizNext {
    section_id: Option<String>,
}

async fn quiz_next(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Response> {
    let b: QuizNext = body(&raw)?;
    Ok(run(st, id, move |s, now| {
        s.serve_quiz(now, b.section_id.as_deref())
    })
    .await?
    .into_response())
}

#[derive(Deserialize)]
struct Answer {
    answer: String,
}

async fn quiz_answer(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Response> {
    let b: Answer = body(&raw)?;
    Ok(run(st, id, move |s, now| s.answer_quiz(now, &b.answer))
        .await?
        .into_response())
}

#[derive(Deserialize)]
struct Level {
    level: i64,
}

async fn difficulty(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Json<Value>> {
    let b: Level = body(&raw)?;
    let level = u8::try_from(b.level).map_err(|_| ApiError::bad_request("level must be 1-5"))?;
    run(st, id, move |s, now| {
        s.set_difficulty(now, level)
            .map(|_| json!({ "difficulty": level, "mode": s.state().mode }))
    })
    .await
}

#[derive(Deserialize)]
struct Minutes {
    minutes: i64,
}

async fn start_break(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Response> {
    let b: Minutes = body(&raw)?;
    let minutes =
        u32::try_from(b.minutes).map_err(|_| ApiError::bad_request("minutes must be 1, 3 or 5"))?;
    Ok(run(st, id, move |s, now| s.start_break(now, minutes))
        .await?
        .into_response())
}

#[derive(Deserialize)]
struct Enabled {
    enabled: bool,
}

async fn highlight(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Json<Value>> {
    let b: Enabled = body(&raw)?;
    run(st, id, move |s, now| {
        s.set_highlight(now, b.enabled)?;
        let active = s.active_highlights(s.state().position_sec);
        Ok(json!({ "enabled": b.enabled, "highlights": active }))
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Position {
    t_sec: f64,
}

async fn position(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Response> {
    let b: Position = body(&raw)?;
    Ok(run(st, id, move |s, now| s.set_position(now, b.t_sec))
        .await?
        .into_response())
}

async fn open_example(
    State(st): State<Arc<AppState>>,
    Path((id, n)): Path<(String, usize)>,
) -> ApiResult<Response> {
    Ok(run(st, id, move |s, now| s.open_example(now, n))
        .await?
        .into_response())
}

async fn close_example(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    run(st, id, |s, now| s.close_example(now).map(|_| ack(s))).await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Note {
    text: String,
    area_rect: Option<Rect>,
}

async fn add_note(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Json<Value>> {
    let b: Note = body(&raw)?;
    run(st, id, move |s, now| {
        s.add_note(now, &b.text, b.area_rect)
            .map(|_| json!({ "records": s.state().log.len() }))
    })
    .await
}

async fn summary(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let h = handle(&st, &id)?;
    let doc = h.peek(|s| s.summary())?;
    Ok(Json(doc).into_response())
}

async fn open_summary(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    Ok(run(st, id, |s, now| s.open_summary(now))
        .await?
        .into_response())
}

async fn close_summary(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    run(st, id, |s, now| s.close_summary(now).map(|_| ack(s))).await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Replay {
    record_index: usize,
}

async fn replay(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    raw: Bytes,
) -> ApiResult<Response> {
    let b: Replay = body(&raw)?;
    Ok(run(st, id, move |s, now| s.replay(now, b.record_index))
        .await?
        .into_response())
}

// ---- event stream -----------------------------------------------------------

#[derive(Deserialize, Default)]
struct EventsQuery {
    since: Option<u64>,
    /// Send the history so far and close instead of following.
    once: Option<bool>,
}

fn sse_event(e: &SessionEvent) -> Result<Event, Infallible> {
    let data = serde_json::to_string(e).expect("event json");
    Ok(Event::default()
        .id(e.seq.to_string())
        .event(e.kind.as_str())
        .data(data))
}

/// Replays events after `since` (or the `Last-Event-ID` header), then
/// follows live ones. A subscriber that falls too far behind is
/// disconnected and resumes by reconnecting with its last id.
async fn events(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let h = handle(&st, &id)?;
    let since = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse().ok())
        .or(q.since)
        .unwrap_or(0);
    // Subscribe before taking the snapshot so nothing falls in between.
    let rx = h.events.subscribe();
    let history: Vec<SessionEvent> = h.peek(|s| s.events_since(since).to_vec());
    let last = history.last().map_or(since, |e| e.seq);
    let replay = stream::iter(history.iter().map(sse_event).collect::<Vec<_>>());
    let stream: BoxStream<'static, Result<Event, Infallible>> = if q.once.unwrap_or(false) {
        replay.boxed()
    } else {
        let live = stream::unfold((rx, last), |(mut rx, last)| async move {
            loop {
                match rx.recv().await {
                    Ok(e) if e.seq > last => {
                        let ev = sse_event(&e);
                        return Some((ev, (rx, e.seq)));
                    }
                    Ok(_) => continue,
                    Err(RecvError::Lagged(_)) | Err(RecvError::Closed) => return None,
                }
            }
        });
        replay.chain(live).boxed()
    };
    Ok(Sse::new(stream)
        .keep_alive(KeepAlive::default())
        .into_response())
}

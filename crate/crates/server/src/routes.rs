use std::convert::Infallible;
use std::time::Duration;

use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Multipart, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use hypocanvas_core::canvas::{CanvasDocument, EdgeKind, NodeId, NodeKind, Point, Size, Source};
use hypocanvas_core::chart::{compile_spec, ChartSpec};
use hypocanvas_core::data::{ingest_csv, summarize_dataset, Dataset};
use hypocanvas_core::generation::{suggest_prompts, GenerationRequest};
use hypocanvas_core::{DatasetId, DocumentId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

use crate::error::ApiError;
use crate::jobs::{GenerationJob, JobState, Placement};
use crate::state::AppState;

pub const MAX_SUGGESTIONS: usize = 20;
pub const DEFAULT_SUGGESTIONS: usize = 5;

/// Every route of the service.
pub fn router(state: AppState) -> Router {
    let limit = state.config().max_upload_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/datasets", post(upload_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/suggestions", get(suggestions))
        .route("/documents", post(create_document))
        .route("/documents/{id}", get(get_document))
        .route("/documents/{id}/nodes", post(create_node))
        .route("/documents/{id}/nodes/{nid}", put(update_node).delete(delete_node))
        .route("/documents/{id}/nodes/{nid}/duplicate", post(duplicate_node))
        .route("/documents/{id}/nodes/{nid}/lineage", get(lineage))
        .route("/documents/{id}/nodes/{nid}/spec", get(node_spec))
        .route("/documents/{id}/nodes/{nid}/payload", get(node_payload))
        .route("/documents/{id}/nodes/{nid}/revise", post(revise))
        .route("/generate", post(generate))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/events", get(job_events))
        .fallback(|| async { ApiError::not_found("NotFound", "route") })
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// JSON body whose rejections use the error envelope.
struct Body<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => {
                let code = match &e {
                    JsonRejection::JsonSyntaxError(_) => "MalformedJson",
                    JsonRejection::MissingJsonContentType(_) => "UnsupportedMediaType",
                    _ if e.status() == StatusCode::PAYLOAD_TOO_LARGE => "PayloadTooLarge",
                    _ => "InvalidPayload",
                };
                Err(ApiError::new(e.status(), code, e.body_text()))
            }
        }
    }
}

/// Path parameters; an unparseable id names nothing, so it is a 404.
struct Ids<T>(T);

impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for Ids<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        axum::extract::Path::<T>::from_request_parts(parts, state)
            .await
            .map(|p| Ids(p.0))
            .map_err(|e: PathRejection| ApiError::new(StatusCode::NOT_FOUND, "NotFound", e.body_text()))
    }
}

struct Params<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| Params(q.0))
            .map_err(|e: QueryRejection| ApiError::unprocessable("InvalidQuery", e.body_text()))
    }
}

fn created<T: Serialize>(body: T) -> Response {
    (StatusCode::CREATED, Json(body)).into_response()
}

async fn health(State(app): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "providers": app.generator.registry().names(),
        "default_provider": app.default_provider,
        "max_jobs": app.config().max_jobs,
        "unfinished_jobs": app.jobs.unfinished(),
    }))
}

fn dataset_body(ds: &Dataset) -> Value {
    json!({ "dataset_id": ds.id(), "name": ds.name(), "summary": summarize_dataset(ds) })
}

async fn upload_dataset(
    State(app): State<AppState>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<Response, ApiError> {
    let mut multipart = multipart.map_err(|e| ApiError::new(e.status(), "MalformedMultipart", e.body_text()))?;
    let bad = |e: axum::extract::multipart::MultipartError| {
        let code = if e.status() == StatusCode::PAYLOAD_TOO_LARGE { "PayloadTooLarge" } else { "MalformedMultipart" };
        ApiError::new(e.status(), code, e.body_text())
    };
    let (mut bytes, mut name, mut file_name) = (None, None, None);
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        match field.name() {
            Some("file") => {
                file_name = field.file_name().map(str::to_string);
                bytes = Some(field.bytes().await.map_err(bad)?);
            }
            Some("name") => name = Some(field.text().await.map_err(bad)?),
            _ => {}
        }
    }
    let bytes =
        bytes.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "MissingFile", "multipart field \"file\" is required"))?;
    let name = name
        .filter(|n| !n.trim().is_empty())
        .or_else(|| file_name.map(|f| f.trim_end_matches(".csv").to_string()))
        .unwrap_or_else(|| "dataset".into());
    let ds = ingest_csv(&bytes[..], name.trim())?;
    let ds = app.add_dataset(ds)?;
    Ok(created(dataset_body(&ds)))
}

async fn get_dataset(State(app): State<AppState>, Ids(id): Ids<DatasetId>) -> Result<Json<Value>, ApiError> {
    let ds = app.dataset(id)?;
    Ok(Json(dataset_body(&ds)))
}

#[derive(Deserialize)]
struct SuggestionQuery {
    k: Option<usize>,
}

async fn suggestions(
    State(app): State<AppState>,
    Ids(id): Ids<DatasetId>,
    Params(q): Params<SuggestionQuery>,
) -> Result<Json<Value>, ApiError> {
    let ds = app.dataset(id)?;
    let k = q.k.unwrap_or(DEFAULT_SUGGESTIONS);
    if k == 0 || k > MAX_SUGGESTIONS {
        return Err(ApiError::unprocessable("InvalidK", format!("k must be between 1 and {MAX_SUGGESTIONS}, got {k}")));
    }
    Ok(Json(json!({ "suggestions": suggest_prompts(&ds, k) })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewDocument {
    dataset_id: DatasetId,
}

async fn create_document(State(app): State<AppState>, Body(req): Body<NewDocument>) -> Result<Response, ApiError> {
    app.dataset(req.dataset_id)?;
    let doc = CanvasDocument::new(req.dataset_id);
    app.add_document(doc.clone())?;
    Ok(created(doc))
}

async fn get_document(State(app): State<AppState>, Ids(id): Ids<DocumentId>) -> Result<Json<CanvasDocument>, ApiError> {
    let shared = app.document(id)?;
    let doc = shared.read().await;
    Ok(Json(doc.clone()))
}

/// Reads a node, tombstoned or live.
async fn read_node<T>(
    app: &AppState,
    id: DocumentId,
    nid: NodeId,
    f: impl FnOnce(&CanvasDocument) -> Result<T, ApiError>,
) -> Result<T, ApiError> {
    let shared = app.document(id)?;
    let doc = shared.read().await;
    if doc.node(nid).is_none() {
        return Err(ApiError::not_found("UnknownNode", format!("node {nid}")));
    }
    f(&doc)
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct SourceBody {
    node: NodeId,
    kind: EdgeKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewNode {
    doc_version: u64,
    kind: NodeKind,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    spec: Option<ChartSpec>,
    #[serde(default)]
    position: Option<Point>,
    #[serde(default)]
    source: Option<SourceBody>,
}

fn node_body(doc: &CanvasDocument, nid: NodeId) -> Value {
    json!({
        "doc_version": doc.doc_version(),
        "node": doc.node(nid),
        "edges": doc.edges().iter().filter(|e| e.to == nid).collect::<Vec<_>>(),
    })
}

async fn create_node(
    State(app): State<AppState>,
    Ids(id): Ids<DocumentId>,
    Body(req): Body<NewNode>,
) -> Result<Response, ApiError> {
    let dataset = {
        let shared = app.document(id)?;
        let ds_id = shared.read().await.dataset_id();
        app.dataset(ds_id)?
    };
    let (nid, doc) = app
        .mutate(id, req.doc_version, |doc| match req.kind {
            NodeKind::Note => {
                if req.spec.is_some() || req.source.is_some() {
                    return Err(ApiError::unprocessable("InvalidPayload", "notes take text and position only"));
                }
                let text = req.text.ok_or_else(|| ApiError::unprocessable("InvalidPayload", "a note needs text"))?;
                let position = req.position.ok_or_else(|| ApiError::unprocessable("InvalidPayload", "a note needs a position"))?;
                Ok(doc.create_note(position, &text)?)
            }
            NodeKind::Visualization => {
                if req.text.is_some() {
                    return Err(ApiError::unprocessable("InvalidPayload", "visualizations take no text"));
                }
                let spec = req.spec.ok_or_else(|| ApiError::unprocessable("InvalidPayload", "a visualization needs a spec"))?;
                let source = req.source.map(|s| Source { node: s.node, kind: s.kind });
                Ok(doc.create_visualization(req.position, spec, source, &dataset)?)
            }
        })
        .await?;
    Ok(created(node_body(&doc, nid)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeUpdate {
    doc_version: u64,
    #[serde(default)]
    position: Option<Point>,
    #[serde(default)]
    size: Option<Size>,
    #[serde(default)]
    text: Option<String>,
}

async fn update_node(
    State(app): State<AppState>,
    Ids((id, nid)): Ids<(DocumentId, NodeId)>,
    Body(req): Body<NodeUpdate>,
) -> Result<Json<Value>, ApiError> {
    if req.position.is_none() && req.size.is_none() && req.text.is_none() {
        return Err(ApiError::unprocessable("InvalidPayload", "nothing to update: give position, size or text"));
    }
    let (_, doc) = app
        .mutate(id, req.doc_version, |doc| {
            if let Some(text) = &req.text {
                doc.edit_note(nid, text)?;
            }
            if let Some(size) = req.size {
                doc.resize_node(nid, size)?;
            }
            if let Some(position) = req.position {
                doc.move_node(nid, position)?;
            }
            Ok(())
        })
        .await?;
    Ok(Json(node_body(&doc, nid)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VersionOnly {
    doc_version: u64,
}

async fn delete_node(
    State(app): State<AppState>,
    Ids((id, nid)): Ids<(DocumentId, NodeId)>,
    Params(q): Params<VersionOnly>,
) -> Result<Json<Value>, ApiError> {
    let (_, doc) = app.mutate(id, q.doc_version, |doc| Ok(doc.delete_node(nid)?)).await?;
    Ok(Json(node_body(&doc, nid)))
}

async fn duplicate_node(
    State(app): State<AppState>,
    Ids((id, nid)): Ids<(DocumentId, NodeId)>,
    Body(req): Body<VersionOnly>,
) -> Result<Response, ApiError> {
    let (copy, doc) = app.mutate(id, req.doc_version, |doc| Ok(doc.duplicate_node(nid)?)).await?;
    Ok(created(node_body(&doc, copy)))
}

async fn lineage(
    State(app): State<AppState>,
    Ids((id, nid)): Ids<(DocumentId, NodeId)>,
) -> Result<Json<Value>, ApiError> {
    let ancestors = read_node(&app, id, nid, |doc| Ok(doc.lineage(nid)?)).await?;
    Ok(Json(json!({ "node": nid, "ancestors": ancestors })))
}

fn spec_of(doc: &CanvasDocument, nid: NodeId) -> Result<ChartSpec, ApiError> {
    doc.node(nid)
        .and_then(|n| n.spec())
        .cloned()
        .ok_or_else(|| ApiError::not_found("NotAVisualization", format!("visualization {nid}")))
}

/// The stored spec, tombstoned nodes included.
async fn node_spec(
    State(app): State<AppState>,
    Ids((id, nid)): Ids<(DocumentId, NodeId)>,
) -> Result<Json<ChartSpec>, ApiError> {
    Ok(Json(read_node(&app, id, nid, |doc| spec_of(doc, nid)).await?))
}

async fn node_payload(
    State(app): State<AppState>,
    Ids((id, nid)): Ids<(DocumentId, NodeId)>,
) -> Result<Response, ApiError> {
    let (spec, ds_id) = read_node(&app, id, nid, |doc| Ok((spec_of(doc, nid)?, doc.dataset_id()))).await?;
    let ds = app.dataset(ds_id)?;
    let payload = compile_spec(&spec, &ds).map_err(|e| ApiError::unprocessable("CompileFailed", e.to_string()))?;
    Ok(Json(payload).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateBody {
    dataset_id: DatasetId,
    document_id: DocumentId,
    #[serde(default)]
    source_node: Option<NodeId>,
    goal_text: String,
    #[serde(default)]
    parent_node: Option<NodeId>,
    #[serde(default)]
    provider: Option<String>,
    #[serde(default)]
    max_repair_attempts: Option<usize>,
}

fn accepted(job: &GenerationJob) -> Response {
    (StatusCode::ACCEPTED, Json(json!({ "job_id": job.job_id, "state": job.state }))).into_response()
}

fn job_request(
    app: &AppState,
    dataset_id: DatasetId,
    goal: &str,
    parent: Option<ChartSpec>,
    provider: Option<String>,
    max_repairs: Option<usize>,
) -> Result<GenerationRequest, ApiError> {
    if goal.trim().is_empty() {
        return Err(ApiError::unprocessable("InvalidRequest", "goal text is empty"));
    }
    let provider = provider.unwrap_or_else(|| app.default_provider.clone());
    if app.generator.registry().get(&provider).is_none() {
        return Err(ApiError::unprocessable("UnknownProvider", format!("no provider named {provider:?}"))
            .with_detail(json!({ "available": app.generator.registry().names() })));
    }
    let mut request = GenerationRequest::fresh(dataset_id, goal.trim()).with_provider(provider);
    request.parent_spec = parent;
    request.allow_fallback = app.config().allow_fallback;
    if let Some(n) = max_repairs {
        request.max_repair_attempts = n;
    }
    Ok(request)
}

fn live_node(doc: &CanvasDocument, nid: NodeId) -> Result<NodeKind, ApiError> {
    doc.node(nid)
        .filter(|n| n.is_live())
        .map(|n| n.kind())
        .ok_or_else(|| ApiError::not_found("UnknownNode", format!("node {nid}")))
}

/// A revision when `parent_node` is given (derived-from edge from the
/// parent); otherwise a fresh chart from `source_node` (generated-from-note
/// for a note, derived-from for a chart).
async fn generate(State(app): State<AppState>, Body(req): Body<GenerateBody>) -> Result<Response, ApiError> {
    let shared = app.document(req.document_id)?;
    app.dataset(req.dataset_id)?;
    let (placement, parent) = {
        let doc = shared.read().await;
        if doc.dataset_id() != req.dataset_id {
            return Err(ApiError::unprocessable("DatasetMismatch", "the document belongs to another dataset")
                .with_detail(json!({ "expected": doc.dataset_id(), "found": req.dataset_id })));
        }
        if let Some(s) = req.source_node {
            live_node(&doc, s)?;
        }
        match (req.parent_node, req.source_node) {
            (Some(p), _) => {
                if live_node(&doc, p)? != NodeKind::Visualization {
                    return Err(ApiError::unprocessable("NotAVisualization", format!("parent node {p} is not a visualization")));
                }
                let placement = Placement { document_id: req.document_id, source_node: p, edge_kind: EdgeKind::DerivedFrom };
                (placement, Some(spec_of(&doc, p)?))
            }
            (None, Some(s)) => {
                let edge_kind = match live_node(&doc, s)? {
                    NodeKind::Note => EdgeKind::GeneratedFromNote,
                    NodeKind::Visualization => EdgeKind::DerivedFrom,
                };
                (Placement { document_id: req.document_id, source_node: s, edge_kind }, None)
            }
            (None, None) => {
                return Err(ApiError::unprocessable("InvalidPayload", "give source_node, parent_node or both"));
            }
        }
    };
    let request = job_request(&app, req.dataset_id, &req.goal_text, parent, req.provider, req.max_repair_attempts)?;
    let job = app.enqueue(request, placement)?;
    Ok(accepted(&job))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviseBody {
    instruction: String,
    #[serde(default)]
    provider: Option<String>,
}

async fn revise(
    State(app): State<AppState>,
    Ids((id, nid)): Ids<(DocumentId, NodeId)>,
    Body(req): Body<ReviseBody>,
) -> Result<Response, ApiError> {
    let shared = app.document(id)?;
    let (dataset_id, parent) = {
        let doc = shared.read().await;
        if live_node(&doc, nid)? != NodeKind::Visualization {
            return Err(ApiError::unprocessable("NotAVisualization", format!("node {nid} is not a visualization")));
        }
        (doc.dataset_id(), spec_of(&doc, nid)?)
    };
    let request = job_request(&app, dataset_id, &req.instruction, Some(parent), req.provider, None)?;
    let placement = Placement { document_id: id, source_node: nid, edge_kind: EdgeKind::DerivedFrom };
    let job = app.enqueue(request, placement)?;
    Ok(accepted(&job))
}

async fn get_job(State(app): State<AppState>, Ids(id): Ids<Uuid>) -> Result<Json<GenerationJob>, ApiError> {
    app.jobs.get(id).map(Json).ok_or_else(|| ApiError::not_found("UnknownJob", format!("job {id}")))
}

fn transition_event(job: &GenerationJob, seq: usize) -> Event {
    let t = &job.transitions[seq];
    let mut data = json!({ "job_id": job.job_id, "seq": seq, "state": t.state, "at": t.at });
    if t.state == JobState::Done {
        data["node_id"] = json!(job.node_id);
    }
    if t.state == JobState::Failed {
        data["error"] = json!(job.error);
    }
    Event::default().event(t.state.as_str()).id(seq.to_string()).data(data.to_string())
}

/// Replays the job's transition log, then follows it until a terminal state.
async fn job_events(
    State(app): State<AppState>,
    Ids(id): Ids<Uuid>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = app.jobs.subscribe(id).ok_or_else(|| ApiError::not_found("UnknownJob", format!("job {id}")))?;
    let events = stream::unfold((rx, 0usize, false), |(mut rx, sent, finished)| async move {
        if finished {
            return None;
        }
        loop {
            let job = rx.borrow_and_update().clone();
            if sent < job.transitions.len() {
                let event = transition_event(&job, sent);
                let finished = sent + 1 == job.transitions.len() && job.state.is_terminal();
                return Some((stream::iter(vec![Ok(event)]), (rx, sent + 1, finished)));
            }
            if job.state.is_terminal() || rx.changed().await.is_err() {
                return None;
            }
        }
    });
    use futures::StreamExt;
    Ok(Sse::new(events.flatten()).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use sustext_core::corpus::{build_passages, Document};

use crate::analysis::{
    distribution, query_results, AnalysisResult, Origin, SearchQuery, DEFAULT_PAGE_SIZE,
    MAX_PAGE_SIZE,
};
use crate::error::ApiError;
use crate::session::{unix_now, Session, Status, UploadRecord};
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    let body_limit = state.config().max_upload_bytes + 64 * 1024;
    Router::new()
        .route("/api/health", get(health))
        .route("/api/schema", get(schema))
        .route("/api/session", post(create_session))
        .route("/api/session/{id}", axum::routing::delete(end_session))
        .route("/api/session/{id}/status", get(status))
        .route(
            "/api/session/{id}/upload",
            post(upload).layer(DefaultBodyLimit::max(body_limit)),
        )
        .route("/api/session/{id}/analyze", post(analyze))
        .route("/api/session/{id}/results", get(results))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn schema(State(state): State<AppState>) -> Json<Value> {
    Json(json!({
        "classes": state.schema().classes,
        "classifier": state.classifier().mode(),
    }))
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    state.sessions().get(id).ok_or_else(|| ApiError::unknown_session(id))
}

async fn create_session(State(state): State<AppState>) -> ApiResult<impl IntoResponse> {
    let s = state.sessions().create().await.map_err(|e| {
        log::error!("cannot create session storage: {e}");
        ApiError::internal("session storage is unavailable")
    })?;
    log::info!("session {} created", s.id);
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session_id": s.id, "created_at": s.created_at })),
    ))
}

async fn end_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    session(&state, &id)?;
    state
        .sessions()
        .remove(&id)
        .await
        .ok_or_else(|| ApiError::unknown_session(&id))?;
    log::info!("session {id} ended");
    Ok(Json(json!({ "session_id": id, "deleted": true })))
}

async fn status(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = session(&state, &id)?;
    let (status, error) = s.status();
    // Avoid waiting behind a running analysis for the upload count.
    let uploads = s.data.try_lock().ok().map(|d| d.uploads.len());
    Ok(Json(json!({
        "session_id": id,
        "status": status,
        "error": error,
        "uploads": uploads,
        "created_at": s.created_at,
    })))
}

const CANNOT_PROCESS: &str = "The uploaded file cannot be processed";

/// Checks the payload and turns it into documents.
fn parse_upload(filename: &str, upload_id: usize, bytes: &[u8]) -> ApiResult<Vec<Document>> {
    let lower = filename.to_ascii_lowercase();
    let ext = std::path::Path::new(&lower)
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("");
    if ext == "pdf" || bytes.starts_with(b"%PDF") {
        return Err(ApiError::bad_request(format!(
            "{CANNOT_PROCESS}: PDF files are not supported; upload the extracted text as a .txt file"
        )));
    }
    if !matches!(ext, "txt" | "jsonl" | "") {
        return Err(ApiError::bad_request(format!(
            "{CANNOT_PROCESS}: only .txt and .jsonl files are supported"
        )));
    }
    let text = std::str::from_utf8(bytes)
        .ok()
        .filter(|t| !t.contains('\0'))
        .ok_or_else(|| ApiError::bad_request(format!("{CANNOT_PROCESS}: it is not UTF-8 text")))?;
    if text.trim().is_empty() {
        return Err(ApiError::bad_request(format!("{CANNOT_PROCESS}: the file is empty")));
    }
    let prefix = |id: &str| format!("u{upload_id}-{id}");
    if ext == "jsonl" {
        let mut docs = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |m: String| ApiError::bad_request(format!("{CANNOT_PROCESS}: line {}: {m}", i + 1));
            let mut doc: Document = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            doc.validate().map_err(|e| bad(e.to_string()))?;
            doc.id = prefix(&doc.id);
            docs.push(doc);
        }
        Ok(docs)
    } else {
        let mut doc = Document::upload(filename, text.to_owned());
        doc.id = prefix(&doc.id);
        Ok(vec![doc])
    }
}

fn sanitize(filename: &str) -> String {
    let base = filename.rsplit(['/', '\\']).next().unwrap_or("");
    let clean: String = base
        .chars()
        .map(|c| if c.is_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect();
    let clean = clean.trim_start_matches('.');
    if clean.is_empty() {
        "upload".into()
    } else {
        clean.to_owned()
    }
}

async fn upload(
    State(state): State<AppState>,
    Path(id): Path<String>,
    multipart: Result<Multipart, axum::extract::multipart::MultipartRejection>,
) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &id)?;
    let mut multipart =
        multipart.map_err(|e| ApiError::bad_request(format!("expected a multipart upload: {e}")))?;
    let max = state.config().max_upload_bytes;
    let too_large = || {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("files larger than {max} bytes cannot be uploaded"),
        )
    };
    let read_err = |e: axum::extract::multipart::MultipartError| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            too_large()
        } else {
            ApiError::bad_request(format!("malformed multipart body: {e}"))
        }
    };
    let mut file = None;
    while let Some(field) = multipart.next_field().await.map_err(read_err)? {
        if field.name() == Some("file") || field.file_name().is_some() {
            let name = field.file_name().unwrap_or("upload.txt").to_owned();
            let bytes = field.bytes().await.map_err(read_err)?;
            file = Some((name, bytes));
            break;
        }
    }
    let (filename, bytes) =
        file.ok_or_else(|| ApiError::bad_request("the multipart body has no `file` field"))?;
    if bytes.len() > max {
        return Err(too_large());
    }

    let mut data = s.data.lock().await;
    if data.closed {
        return Err(ApiError::unknown_session(&id));
    }
    let upload_id = data.uploads.len() + 1;
    let docs = parse_upload(&filename, upload_id, &bytes)?;
    let stored_as = format!("{upload_id:04}-{}", sanitize(&filename));
    tokio::fs::write(s.upload_dir().join(&stored_as), &bytes)
        .await
        .map_err(|e| {
            log::error!("session {id}: cannot store upload: {e}");
            ApiError::internal("cannot store the uploaded file")
        })?;
    let record = UploadRecord {
        upload_id,
        filename,
        stored_as,
        bytes: bytes.len(),
        documents: docs.len(),
        uploaded_at: unix_now(),
    };
    data.uploads.push(record.clone());
    // A new upload invalidates earlier results.
    data.result = None;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "upload": record, "message": "File uploaded successfully" })),
    ))
}

#[derive(Debug, Deserialize)]
struct AnalyzeRequest {
    #[serde(default)]
    use_uploads: bool,
    #[serde(default)]
    use_backend: bool,
}

/// Reads the stored uploads back and runs them through the corpus pipeline
/// and the active classifier.
fn classify_uploads(state: &AppState, session: &Session, uploads: &[UploadRecord]) -> ApiResult<Vec<crate::ResultPassage>> {
    let mut docs = Vec::new();
    for u in uploads {
        let bytes = std::fs::read(session.upload_dir().join(&u.stored_as))
            .map_err(|e| ApiError::internal(format!("cannot read upload {}: {e}", u.filename)))?;
        docs.extend(parse_upload(&u.filename, u.upload_id, &bytes)?);
    }
    let (passages, report) = build_passages(&docs, state.lexicon());
    if !report.non_english_documents.is_empty() {
        log::info!(
            "session {}: skipped non-English uploads {:?}",
            session.id,
            report.non_english_documents
        );
    }
    let links = crate::analysis::source_links(&docs);
    Ok(state.classifier().classify_passages(&passages, &links, Origin::Upload))
}

async fn analyze(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AnalyzeRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let s = session(&state, &id)?;
    let Json(req) = body.map_err(|e| ApiError::bad_request(format!("invalid analyze request: {e}")))?;
    if !req.use_uploads && !req.use_backend {
        return Err(ApiError::bad_request("select at least one data source (use_uploads or use_backend)"));
    }
    let mut data = s.data.lock().await;
    if data.closed {
        return Err(ApiError::unknown_session(&id));
    }
    s.set_status(Status::Processing, None);
    let uploads = data.uploads.clone();
    let outcome = if req.use_uploads {
        let (st, sess) = (state.clone(), s.clone());
        tokio::task::spawn_blocking(move || classify_uploads(&st, &sess, &uploads))
            .await
            .unwrap_or_else(|e| Err(ApiError::internal(format!("analysis task failed: {e}"))))
    } else {
        Ok(Vec::new())
    };
    let upload_passages = match outcome {
        Ok(p) => p,
        Err(e) => {
            s.set_status(Status::Failed, Some(e.message.clone()));
            return Err(e);
        }
    };

    let mut message = None;
    if req.use_uploads && upload_passages.is_empty() {
        let what = if data.uploads.is_empty() {
            "No files have been uploaded to this session"
        } else {
            "None of the uploaded texts contains a passage that could be classified"
        };
        message = Some(if req.use_backend {
            format!("{what}; showing the existing backend data instead.")
        } else {
            format!("{what}.")
        });
    }
    let n_uploads = upload_passages.len();
    let mut passages = if req.use_backend {
        state.backend().to_vec()
    } else {
        Vec::new()
    };
    let n_backend = passages.len();
    passages.extend(upload_passages);
    let result = AnalysisResult {
        distribution: distribution(state.schema().len(), &passages),
        total: passages.len(),
        passages,
        message,
    };
    let summary = json!({
        "status": Status::Done,
        "total": result.total,
        "backend_passages": n_backend,
        "upload_passages": n_uploads,
        "distribution": result.distribution,
        "message": result.message,
    });
    data.result = Some(result);
    s.set_status(Status::Done, None);
    Ok(Json(summary))
}

async fn results(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    let s = session(&state, &id)?;
    let q = parse_query(&state, &params)?;
    let data = s.data.lock().await;
    let result = data.result.as_ref().ok_or_else(|| {
        ApiError::new(StatusCode::CONFLICT, "no analysis has been run for this session yet")
    })?;
    let page = query_results(result, &q, state.schema().len());
    Ok(Json(serde_json::to_value(page).expect("page serializes")))
}

fn parse_query(state: &AppState, params: &HashMap<String, String>) -> ApiResult<SearchQuery> {
    let mut q = SearchQuery::default();
    if let Some(c) = params.get("class").filter(|c| !c.is_empty()) {
        q.class_filter = Some(
            state
                .schema()
                .resolve(c)
                .ok_or_else(|| ApiError::bad_request(format!("unknown class {c:?}")))?,
        );
    }
    q.text_query = params.get("q").filter(|s| !s.is_empty()).cloned();
    let number = |key: &str, default: usize| -> ApiResult<usize> {
        match params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ApiError::bad_request(format!("{key} must be a positive integer"))),
        }
    };
    q.page = number("page", 1)?;
    q.page_size = number("page_size", DEFAULT_PAGE_SIZE)?;
    if q.page == 0 {
        return Err(ApiError::bad_request("page must be at least 1"));
    }
    if !(1..=MAX_PAGE_SIZE).contains(&q.page_size) {
        return Err(ApiError::bad_request(format!("page_size must be in [1, {MAX_PAGE_SIZE}]")));
    }
    Ok(q)
}

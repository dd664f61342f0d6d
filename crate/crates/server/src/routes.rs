use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};
use wildvis_core::search::SearchError;
use wildvis_core::viz::VizError;
use wildvis_core::ConversationRecord;

use crate::params::{decode_query_string, parse_query_params, BadParam, ParsedQuery};
use crate::state::AppState;

#[derive(Debug)]
pub enum ApiError {
    BadParam(BadParam),
    PageOutOfRange { page: u32, last_page: u32 },
    NotFound(String),
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    param: Option<&'a str>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match &self {
            ApiError::BadParam(b) => (
                StatusCode::BAD_REQUEST,
                ErrorBody {
                    error: "bad_param",
                    message: b.to_string(),
                    param: Some(&b.key),
                },
            ),
            ApiError::PageOutOfRange { page, last_page } => (
                StatusCode::BAD_REQUEST,
                ErrorBody {
                    error: "page_out_of_range",
                    message: format!("page {page} is beyond the last page ({last_page})"),
                    param: Some("page"),
                },
            ),
            ApiError::NotFound(what) => (
                StatusCode::NOT_FOUND,
                ErrorBody {
                    error: "not_found",
                    message: what.clone(),
                    param: None,
                },
            ),
            ApiError::Internal(msg) => {
                tracing::error!("{msg}");
                (
                    StatusCode::INTERNAL_SERVER_ERROR,
                    ErrorBody {
                        error: "internal",
                        message: msg.clone(),
                        param: None,
                    },
                )
            }
        };
        (status, Json(body)).into_response()
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::PageOutOfRange { page, last_page } => ApiError::PageOutOfRange { page, last_page },
            SearchError::InvalidQuery(msg) => ApiError::BadParam(BadParam {
                key: "query".into(),
                reason: msg,
            }),
            e @ SearchError::NotFound { .. } => ApiError::NotFound(e.to_string()),
            e => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<VizError> for ApiError {
    fn from(e: VizError) -> Self {
        match e {
            VizError::Search(s) => s.into(),
            e => ApiError::Internal(e.to_string()),
        }
    }
}

type Shared = State<Arc<AppState>>;

fn parse(state: &AppState, raw: Option<String>, extra: &[&str]) -> Result<ParsedQuery, ApiError> {
    let pairs = decode_query_string(raw.as_deref().unwrap_or(""));
    let mut parsed =
        parse_query_params(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())), extra).map_err(ApiError::BadParam)?;
    parsed.query.page_size = state.config.default_page_size;
    if !pairs.iter().any(|(k, _)| k == "threshold") {
        parsed.query.threshold = state.config.default_threshold;
    }
    Ok(parsed)
}

/// Adds a `Warning` header naming ignored query keys.
fn with_warning(mut resp: Response, unknown: &[String]) -> Response {
    if !unknown.is_empty() {
        let text = format!("199 wildvis \"ignored unknown parameters: {}\"", unknown.join(", "));
        if let Ok(v) = HeaderValue::from_str(&text) {
            resp.headers_mut().insert(header::WARNING, v);
        }
    }
    resp
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn search(State(state): Shared, RawQuery(raw): RawQuery) -> Result<Response, ApiError> {
    let ParsedQuery { query, unknown } = parse(&state, raw, &[])?;
    let page = blocking(move || Ok(state.index.execute_search(&query)?)).await?;
    Ok(with_warning(Json(page).into_response(), &unknown))
}

async fn bundle(State(state): Shared, RawQuery(raw): RawQuery, headers: HeaderMap) -> Result<Response, ApiError> {
    let ParsedQuery { query, unknown } = parse(&state, raw, &[])?;
    let language = query.language.ok_or_else(|| {
        ApiError::BadParam(BadParam {
            key: "language".into(),
            reason: "required".into(),
        })
    })?;
    let map = state
        .map(&language)
        .ok_or_else(|| ApiError::NotFound(format!("no embedding map for language {language:?}")))?;
    let fresh = headers
        .get_all(header::IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .any(|tag| {
            let tag = tag.trim();
            tag == "*" || tag == map.etag
        });
    let builder = Response::builder()
        .header(header::ETAG, &map.etag)
        .header(header::CACHE_CONTROL, "no-cache");
    let resp = if fresh {
        builder.status(StatusCode::NOT_MODIFIED).body(Body::empty())
    } else {
        builder
            .status(StatusCode::OK)
            .header(header::CONTENT_TYPE, "application/octet-stream")
            .header(header::CONTENT_ENCODING, "gzip")
            .body(Body::from(map.bundle.clone()))
    }
    .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(with_warning(resp, &unknown))
}

async fn highlight(State(state): Shared, RawQuery(raw): RawQuery) -> Result<Response, ApiError> {
    let ParsedQuery { query, unknown } = parse(&state, raw, &[])?;
    let language = query.language.clone().ok_or_else(|| {
        ApiError::BadParam(BadParam {
            key: "language".into(),
            reason: "required to pick the embedding map".into(),
        })
    })?;
    let map = state
        .map(&language)
        .cloned()
        .ok_or_else(|| ApiError::NotFound(format!("no embedding map for language {language:?}")))?;
    let result = blocking(move || Ok(map.viz.highlight(&query)?)).await?;
    Ok(with_warning(Json(result).into_response(), &unknown))
}

#[derive(Serialize)]
struct ConversationEnvelope<'a> {
    conversation: &'a ConversationRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lang: Option<String>,
}

async fn conversation(
    State(state): Shared,
    Path((dataset, id)): Path<(String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<Response, ApiError> {
    let pairs = decode_query_string(raw.as_deref().unwrap_or(""));
    let (mut from, mut lang, mut unknown) = (None, None, Vec::new());
    for (k, v) in pairs {
        match k.as_str() {
            "from" => from = Some(v),
            "lang" => lang = Some(v),
            _ => unknown.push(k),
        }
    }
    let record = state.index.get_conversation(&dataset, &id)?;
    let body = Json(ConversationEnvelope {
        conversation: record,
        from,
        lang,
    });
    Ok(with_warning(body.into_response(), &unknown))
}

pub fn router(state: Arc<AppState>) -> Router {
    let origin = match &state.config.cors_origin {
        Some(o) => HeaderValue::from_str(o).map(AllowOrigin::exact).unwrap_or_else(|_| AllowOrigin::any()),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET])
        .allow_headers([header::IF_NONE_MATCH])
        .expose_headers([header::ETAG, header::WARNING]);
    Router::new()
        .route("/api/search", get(search))
        .route("/api/embeddings/bundle", get(bundle))
        .route("/api/embeddings/highlight", get(highlight))
        .route("/api/conversation/{dataset}/{id}", get(conversation))
        .layer(cors)
        .with_state(state)
}

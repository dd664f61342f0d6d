//! Read-only HTTP API: filter search, per-language coordinate bundles,
//! subset-first highlighting, and conversation details.
//!
//! ```text
//! GET /api/search?contains=homework&toxic=false&language=English
//! GET /api/embeddings/bundle?language=English
//! GET /api/embeddings/highlight?language=English&contains=python
//! GET /api/conversation/wildchat/2041625?from=embedding&lang=english
//! ```

mod params;
mod routes;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

pub use params::{decode_query_string, parse_query_params, BadParam, ParsedQuery, FILTER_KEYS};
pub use routes::{router, ApiError};
pub use state::{model_paths, ApiConfig, AppState, LanguageMap, LoadError, ModelPaths};

/// Serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

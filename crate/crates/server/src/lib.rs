//! HTTP service over `hypocanvas-core`: dataset upload, canvas documents
//! with optimistic concurrency, asynchronous generation jobs with a
//! progress event stream, and file-backed persistence.
//!
//! Every mutation of a document carries the client's `doc_version`; a
//! stale one is answered with 409 and changes nothing. Errors are
//! `{code, message, detail}` JSON.

pub mod config;
pub mod error;
pub mod jobs;
mod routes;
mod state;
pub mod store;

use std::net::SocketAddr;

pub use config::{ProviderMode, ServerConfig};
pub use error::{ApiError, ErrorBody};
pub use jobs::{GenerationJob, JobState, Placement, Transition, RESTART_CODE};
pub use routes::{router, DEFAULT_SUGGESTIONS, MAX_SUGGESTIONS};
pub use state::{AppState, StartError};

/// Loads state from `config.data_dir`, binds `config.listen` and serves
/// until `shutdown` resolves. `on_bound` receives the bound address, which
/// differs from the configured one when port 0 was asked for.
pub async fn serve(
    config: ServerConfig,
    on_bound: impl FnOnce(SocketAddr),
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), StartError> {
    let listen = config.listen;
    let state = AppState::open(config)?;
    let listener = tokio::net::TcpListener::bind(listen).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

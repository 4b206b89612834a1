//! HTTP ingestion endpoint: accepts JSONL batches of session events, appends
//! them to the event log and serves per-session analysis documents.

mod routes;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;
use tmfix_core::extract::ThresholdPolicy;
use tmfix_core::stats::DEFAULT_ALPHA;
use tmfix_core::textnorm::NormalizationConfig;

pub use routes::{router, ErrorBody, IngestAck, LineError, TOKEN_HEADER};
pub use store::{Store, StoreError};

pub const DEFAULT_MAX_BATCH_BYTES: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub log_path: PathBuf,
    pub max_batch_bytes: usize,
    /// Allowed CORS origins; empty means any origin.
    pub cors_allowlist: Vec<String>,
    /// When set, requests must carry it in the `x-ingest-token` header.
    pub token: Option<String>,
    pub norm: NormalizationConfig,
    pub policy: ThresholdPolicy,
    pub alpha: f64,
}

impl ServiceConfig {
    pub fn new(listen: SocketAddr, log_path: PathBuf) -> Self {
        ServiceConfig {
            listen,
            log_path,
            max_batch_bytes: DEFAULT_MAX_BATCH_BYTES,
            cors_allowlist: Vec::new(),
            token: None,
            norm: NormalizationConfig::default(),
            policy: ThresholdPolicy::default(),
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid CORS origin {0:?}")]
    InvalidOrigin(String),
    #[error("cannot bind {addr}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error")]
    Serve(#[source] std::io::Error),
}

/// Shared request state.
#[derive(Debug)]
pub struct AppState {
    pub config: ServiceConfig,
    pub store: Store,
}

impl AppState {
    /// Opens (or creates) the log and indexes the events already in it.
    pub fn open(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let store = Store::open(&config.log_path)?;
        Ok(Arc::new(AppState { config, store }))
    }
}

/// Binds the listener and serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let addr = config.listen;
    let state = AppState::open(config)?;
    let app = router(state)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    let local = listener.local_addr().map_err(ServiceError::Serve)?;
    tracing::info!(%local, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}

//! HTTP API over the annotation queue, agreement statistics, round control
//! and report retrieval.
//!
//! All endpoints except `/health` require `Authorization: Bearer <token>`;
//! errors are JSON `{code, message}`.

mod config;
mod error;
mod routes;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use config::{AnnotatorToken, ServiceConfig};
pub use error::{ApiError, ErrorBody, ServiceError};
pub use routes::{router, Annotator, AppsReport, RoundStatus, TaskList, DEFAULT_NEXT_TASKS, MAX_NEXT_TASKS};
pub use state::{AdvanceOutcome, AppState};

/// A running server. Dropping it without [`ServiceHandle::shutdown`] leaves
/// the server running until the runtime stops.
#[derive(Debug)]
pub struct ServiceHandle {
    addr: SocketAddr,
    stop: oneshot::Sender<()>,
    task: JoinHandle<Result<(), ServiceError>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections, drains in-flight requests, then flushes
    /// the audit log and queue snapshot.
    pub async fn shutdown(self) -> Result<(), ServiceError> {
        let _ = self.stop.send(());
        self.task
            .await
            .map_err(|e| ServiceError::Io("server task".into(), std::io::Error::other(e)))?
    }
}

/// Loads state and binds. Startup fails on missing tokens, unreadable or
/// corrupt state files, or a bind error.
pub async fn serve(cfg: &ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    let state = Arc::new(AppState::load(cfg)?);
    let listener = TcpListener::bind(cfg.bind)
        .await
        .map_err(|e| ServiceError::Io(format!("bind {}", cfg.bind), e))?;
    let addr = listener.local_addr().map_err(|e| ServiceError::Io("local address".into(), e))?;
    let (stop, stopped) = oneshot::channel::<()>();
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = stopped.await;
            })
            .await
            .map_err(|e| ServiceError::Io("server".into(), e))?;
        state.shutdown()?;
        tracing::info!("audit log flushed, queue saved");
        Ok(())
    });
    tracing::info!(%addr, "listening");
    Ok(ServiceHandle { addr, stop, task })
}

/// Serves until Ctrl-C or SIGTERM, then shuts down gracefully.
pub async fn run(cfg: &ServiceConfig) -> Result<(), ServiceError> {
    let handle = serve(cfg).await?;
    shutdown_signal().await;
    tracing::info!("shutting down");
    handle.shutdown().await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

//! HTTP service exposing the toolkit's operations over JSON.
//!
//! All endpoints are stateless POSTs under `/v1/`; a request carries
//! everything needed to serve it, including the backend selection for
//! generation runs. Input problems come back as 400 with an [`ErrorBody`],
//! backend faults as 502.

pub mod routes;

use axum::Router;
use std::net::SocketAddr;
use tokio::net::TcpListener;

/// Build the service router.
pub fn app() -> Router {
    routes::router()
}

/// Bind and serve until the task is aborted. Returns the bound address,
/// which matters when binding port 0.
pub async fn serve(addr: SocketAddr) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        if let Err(error) = axum::serve(listener, app()).await {
            tracing::error!(%error, "server exited");
        }
    });
    Ok((bound, handle))
}

//! HTTP service and command line for lecture bundles: preprocessing,
//! serving sessions over JSON + SSE, and layout inspection.

pub mod api;
pub mod cli;
pub mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use lecturelens_core::gateway::{Gateway, GatewayError};
use lecturelens_core::media::{image_search_from_env, speech_from_env};
use lecturelens_core::par::Execution;
use lecturelens_core::session::{ScaledClock, Services};
use tokio::net::TcpListener;

pub use api::{router, ApiError};
pub use state::AppState;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub bundle_dir: PathBuf,
    pub sessions_dir: PathBuf,
    /// Mock text provider and stub media, no network access at all.
    pub mock: bool,
    pub clock_scale: f64,
    pub execution: Execution,
}

impl ServeOptions {
    pub fn new(bundle_dir: impl Into<PathBuf>) -> Self {
        let bundle_dir = bundle_dir.into();
        ServeOptions {
            sessions_dir: bundle_dir.join(".sessions"),
            bundle_dir,
            mock: false,
            clock_scale: 1.0,
            execution: Execution::default(),
        }
    }
}

/// Providers per the options and environment.
pub fn services(mock: bool) -> Result<Services, GatewayError> {
    if mock {
        return Ok(Services::offline());
    }
    Ok(Services {
        gateway: Arc::new(Gateway::from_env()?),
        speech: Arc::from(speech_from_env()),
        images: Arc::from(image_search_from_env()),
    })
}

/// Loads bundles and recovers persisted sessions. Must run inside a tokio
/// runtime since every session gets a timer task.
pub fn build_state(opts: &ServeOptions) -> Result<Arc<AppState>, GatewayError> {
    let state = Arc::new(AppState::new(
        opts.bundle_dir.clone(),
        opts.sessions_dir.clone(),
        services(opts.mock)?,
        Arc::new(ScaledClock::new(opts.clock_scale)),
        opts.clock_scale,
        opts.execution,
    ));
    let n = state.recover_sessions();
    if n > 0 {
        log::info!("recovered {n} sessions");
    }
    Ok(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

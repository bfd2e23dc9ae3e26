//! Networked session service for the gesture chat engine: configuration,
//! the session manager, HTTP and WebSocket routes, and the CLI.

pub mod cli;
pub mod config;
pub mod http;
pub mod manager;

use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;

use crate::config::ServerConfig;
use crate::manager::SessionManager;

/// Build the engine and session manager for `config`. Fails if any data file
/// is invalid.
pub fn build_manager(config: &ServerConfig) -> Result<Arc<SessionManager>, config::ConfigError> {
    let engine = Arc::new(config.build_engine()?);
    Ok(Arc::new(SessionManager::new(
        engine,
        config.max_sessions,
        config.session_idle_timeout,
        config.transcript_dir.clone(),
        config.seed,
    )))
}

/// Periodically reap idle sessions until the manager is dropped elsewhere.
pub fn spawn_reaper(manager: &Arc<SessionManager>) -> tokio::task::JoinHandle<()> {
    let weak = Arc::downgrade(manager);
    let period = (manager.idle_timeout() / 4).clamp(Duration::from_millis(50), Duration::from_secs(30));
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        loop {
            ticker.tick().await;
            let Some(manager) = weak.upgrade() else { return };
            manager.reap_idle();
        }
    })
}

/// Bind and serve until interrupted.
pub async fn serve(config: ServerConfig) -> anyhow::Result<()> {
    let manager = build_manager(&config)?;
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .with_context(|| format!("cannot bind {}", config.bind))?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    let reaper = spawn_reaper(&manager);
    let app = http::router(manager, config.static_dir.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    reaper.abort();
    Ok(())
}

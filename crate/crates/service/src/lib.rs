//! The lab target: an HTTP service exposing each vulnerable
//! request-processing stack next to a hardened twin under `/safe/`, a
//! REST insert API in open or json-only mode, an RBAC-filtered read
//! endpoint, and a gated state-inspection endpoint for oracles.
//!
//! This service is vulnerable on purpose. Run it on loopback, in a lab.

pub mod fixtures;
pub mod handlers;

use axum::extract::{DefaultBodyLimit, Request};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use nosqlab_core::Store;
use parking_lot::RwLock;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;
use tokio::net::TcpListener;

pub use fixtures::{seed_fixtures, SeedError};

pub const MAX_BODY_BYTES: usize = 1024 * 1024;
pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RestMode {
    #[default]
    Open,
    JsonOnly,
}

impl RestMode {
    pub fn parse(s: &str) -> Option<RestMode> {
        match s {
            "open" => Some(RestMode::Open),
            "json-only" => Some(RestMode::JsonOnly),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RestMode::Open => "open",
            RestMode::JsonOnly => "json-only",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub rest_mode: RestMode,
    pub enable_state_endpoint: bool,
    /// Test hook: skips the scalar cast on the hardened array-injection
    /// twin so mutation checks can watch the mitigation fail.
    pub disable_cast_mitigation: bool,
}

/// Shared state: the store behind a readers/exclusive-writer lock plus
/// the startup configuration.
pub struct AppState {
    store: RwLock<Store>,
    config: ServiceConfig,
}

impl AppState {
    pub fn store(&self) -> &RwLock<Store> {
        &self.store
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }
}

/// A configured service, ready to produce routers or spawn listeners.
#[derive(Clone)]
pub struct Service {
    state: Arc<AppState>,
}

impl Service {
    /// Service over an empty store.
    pub fn new(config: ServiceConfig) -> Service {
        Service {
            state: Arc::new(AppState { store: RwLock::new(Store::new()), config }),
        }
    }

    /// Service over the deterministic lab fixtures.
    pub fn seeded(config: ServiceConfig) -> Service {
        let service = Service::new(config);
        seed_fixtures(&mut service.state.store.write()).expect("fresh store seeds cleanly");
        service
    }

    pub fn state(&self) -> Arc<AppState> {
        Arc::clone(&self.state)
    }

    pub fn router(&self) -> Router {
        router(Arc::clone(&self.state))
    }

    /// Bind an ephemeral loopback port and serve until the handle drops.
    pub async fn spawn_ephemeral(&self) -> std::io::Result<ServiceHandle> {
        let listener = TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let task = tokio::spawn(serve(listener, self.router()));
        Ok(ServiceHandle { addr, task, state: Arc::clone(&self.state) })
    }
}

/// A running service on an ephemeral port; aborts the task on drop.
pub struct ServiceHandle {
    addr: SocketAddr,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
    state: Arc<AppState>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn state(&self) -> Arc<AppState> {
        Arc::clone(&self.state)
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/vuln/login-array", post(handlers::login_array_vuln))
        .route("/safe/login-array", post(handlers::login_array_safe))
        .route("/vuln/login-concat", post(handlers::login_concat_vuln))
        .route("/safe/login-concat", post(handlers::login_concat_safe))
        .route("/vuln/mapreduce", post(handlers::mapreduce_vuln))
        .route("/safe/mapreduce", post(handlers::mapreduce_safe))
        .route("/rest/{collection}", post(handlers::rest_insert))
        .route("/safe/data", get(handlers::find_rbac))
        .route("/__state/{collection}", get(handlers::state_dump))
        .layer(middleware::from_fn(timeout_middleware))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

pub async fn serve(listener: TcpListener, router: Router) -> std::io::Result<()> {
    axum::serve(listener, router).await
}

async fn timeout_middleware(req: Request, next: Next) -> Response {
    match tokio::time::timeout(REQUEST_TIMEOUT, next.run(req)).await {
        Ok(response) => response,
        Err(_) => (
            StatusCode::REQUEST_TIMEOUT,
            [(header::CONTENT_TYPE, "application/json")],
            r#"{"status":"timeout"}"#,
        )
            .into_response(),
    }
}

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::de::DeserializeOwned;
use serde_json::json;
use tokio::sync::oneshot;

use super::{ErrorResponse, Policy, PolicyError, ResetRequest, StepRequest, StepResponse};
use crate::render::Frame;

/// Builds a fresh policy for each session.
pub type PolicyFactory = Arc<dyn Fn() -> Box<dyn Policy> + Send + Sync>;

type Session = Arc<Mutex<Box<dyn Policy>>>;

struct AppState {
    factory: PolicyFactory,
    sessions: Mutex<HashMap<String, Session>>,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorResponse { error: self.1 })).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("malformed request: {e}")))
}

fn decode_frame(b64: &str, what: &str) -> Result<Frame, ApiError> {
    let png = base64::engine::general_purpose::STANDARD
        .decode(b64)
        .map_err(|e| bad_request(format!("{what}: invalid base64: {e}")))?;
    Frame::from_png(&png).map_err(|e| bad_request(format!("{what}: invalid PNG: {e}")))
}

fn policy_error(e: PolicyError) -> ApiError {
    let status = match e {
        PolicyError::UnknownEpisode(_) => StatusCode::NOT_FOUND,
        PolicyError::NotReset => StatusCode::CONFLICT,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    ApiError(status, e.to_string())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn reset(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let req: ResetRequest = parse(&body)?;
    let goal = decode_frame(&req.goal, "goal")?;
    let episode_id: u64 = req
        .episode_id
        .parse()
        .map_err(|_| bad_request(format!("episode_id must be a non-negative integer, got `{}`", req.episode_id)))?;
    let factory = app.factory.clone();
    let policy = tokio::task::spawn_blocking(move || {
        let mut p = factory();
        p.reset(&goal, episode_id).map(|_| p)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(policy_error)?;
    app.sessions
        .lock()
        .expect("session table lock")
        .insert(req.session, Arc::new(Mutex::new(policy)));
    Ok(Json(json!({"ok": true})))
}

async fn step(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Json<StepResponse>, ApiError> {
    let req: StepRequest = parse(&body)?;
    let session = app
        .sessions
        .lock()
        .expect("session table lock")
        .get(&req.session)
        .cloned()
        .ok_or_else(|| ApiError(StatusCode::CONFLICT, "session not initialized".into()))?;
    let rgb = decode_frame(&req.rgb, "rgb")?;
    let collided = req.collided;
    let action = tokio::task::spawn_blocking(move || {
        let mut policy = session.lock().expect("session lock");
        let obs = super::Observation {
            rgb: Some(&rgb),
            collided,
        };
        policy.act(&obs)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(policy_error)?;
    Ok(Json(StepResponse {
        action: action.to_string(),
    }))
}

fn router(factory: PolicyFactory) -> Router {
    let state = Arc::new(AppState {
        factory,
        sessions: Mutex::new(HashMap::new()),
    });
    Router::new()
        .route("/health", get(health))
        .route("/reset", post(reset))
        .route("/step", post(step))
        .with_state(state)
}

fn runtime() -> std::io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()
}

async fn serve(listener: std::net::TcpListener, factory: PolicyFactory, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::from_std(listener)?;
    axum::serve(listener, router(factory)).with_graceful_shutdown(shutdown).await
}

fn bind(addr: &str) -> std::io::Result<std::net::TcpListener> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    Ok(listener)
}

/// A policy server running on a background thread. Dropping it shuts the
/// server down gracefully.
pub struct PolicyServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl PolicyServer {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub fn start(factory: PolicyFactory, addr: &str) -> std::io::Result<Self> {
        let listener = bind(addr)?;
        let local = listener.local_addr()?;
        let rt = runtime()?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::Builder::new().name("policy-server".into()).spawn(move || {
            rt.block_on(serve(listener, factory, async {
                let _ = rx.await;
            }))
        })?;
        log::info!("policy server listening on {local}");
        Ok(Self {
            addr: local,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }

    /// Blocks until Ctrl-C (or SIGTERM on Unix), then shuts down.
    pub fn wait_for_signal(self) -> std::io::Result<()> {
        tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()?
            .block_on(shutdown_signal());
        self.shutdown()
    }

    /// Serves on the current thread until Ctrl-C (or SIGTERM on Unix), then
    /// drains in-flight requests.
    pub fn run_until_signal(factory: PolicyFactory, addr: &str) -> std::io::Result<()> {
        let listener = bind(addr)?;
        log::info!("policy server listening on {}", listener.local_addr()?);
        runtime()?.block_on(serve(listener, factory, shutdown_signal()))
    }
}

impl Drop for PolicyServer {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    {
        let term = async {
            match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
                Ok(mut s) => {
                    s.recv().await;
                }
                Err(_) => std::future::pending::<()>().await,
            }
        };
        tokio::select! {
            _ = ctrl_c => {},
            _ = term => {},
        }
    }
    #[cfg(not(unix))]
    ctrl_c.await;
    log::info!("shutting down policy server");
}

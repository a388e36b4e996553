//! Live bridge between a running engine and browser clients.
//!
//! `GET /ws` upgrades to a websocket that receives one `state` message per
//! tick and accepts `command`, `load` and `seek` messages (see
//! [`protocol`]). Every other path serves the static playground bundle when
//! one is configured.

pub mod protocol;
mod worker;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{mpsc as std_mpsc, Arc};

use anyhow::Context;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use tokio::sync::{broadcast, mpsc};
use tower_http::services::ServeDir;

use morphkit_core::Engine;

pub use protocol::ClientMessage;
pub use worker::Recorder;

#[derive(Clone, Debug)]
pub struct ServeOptions {
    pub host: String,
    /// 0 picks a free port.
    pub port: u16,
    pub hz: f64,
    pub static_dir: Option<PathBuf>,
    /// Directory receiving `trace.jsonl` and `events.jsonl`.
    pub record: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            host: "127.0.0.1".into(),
            port: 8080,
            hz: 60.0,
            static_dir: None,
            record: None,
        }
    }
}

#[derive(Clone)]
struct AppState {
    inputs: std_mpsc::Sender<worker::Input>,
    states: broadcast::Sender<Arc<str>>,
}

const INDEX: &str = "<!doctype html><title>morphkit</title>\
<p>morphkit service. Connect a websocket client to <code>/ws</code>.</p>";

/// A bound, running server.
pub struct Server {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Server {
    /// Binds the listener and starts the engine worker. Fails when the port
    /// is taken.
    pub async fn start(engine: Engine, opts: ServeOptions) -> anyhow::Result<Server> {
        anyhow::ensure!(opts.hz > 0.0 && opts.hz.is_finite(), "hz must be positive");
        let listener = tokio::net::TcpListener::bind((opts.host.as_str(), opts.port))
            .await
            .with_context(|| format!("cannot listen on {}:{}", opts.host, opts.port))?;
        let addr = listener.local_addr()?;
        let recorder = match &opts.record {
            Some(dir) => Some(Recorder::create(dir).with_context(|| format!("cannot record to {}", dir.display()))?),
            None => None,
        };

        let (input_tx, input_rx) = std_mpsc::channel();
        let (state_tx, _) = broadcast::channel(256);
        let worker_tx = state_tx.clone();
        let hz = opts.hz;
        std::thread::Builder::new()
            .name("engine".into())
            .spawn(move || worker::run(engine, hz, input_rx, worker_tx, recorder))?;

        let app_state = AppState {
            inputs: input_tx,
            states: state_tx,
        };
        let mut app = Router::new().route("/ws", get(ws_handler));
        app = match &opts.static_dir {
            Some(dir) => app.fallback_service(ServeDir::new(dir)),
            None => app.route("/", get(|| async { Html(INDEX) })),
        };
        let app = app.with_state(app_state);

        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        });
        Ok(Server {
            addr,
            shutdown: Some(tx),
            task,
        })
    }

    /// Runs until the listener fails.
    pub async fn wait(self) -> anyhow::Result<()> {
        self.task.await??;
        Ok(())
    }

    pub async fn stop(self) -> anyhow::Result<()> {
        if let Some(tx) = self.shutdown {
            let _ = tx.send(());
        }
        self.task.await??;
        Ok(())
    }
}

/// Serves until interrupted.
pub async fn serve(engine: Engine, opts: ServeOptions) -> anyhow::Result<()> {
    let server = Server::start(engine, opts).await?;
    eprintln!("listening on http://{}", server.addr);
    tokio::select! {
        r = server.task => r??,
        _ = tokio::signal::ctrl_c() => {}
    }
    Ok(())
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(mut socket: WebSocket, state: AppState) {
    let mut states = state.states.subscribe();
    let (reply_tx, mut replies) = mpsc::unbounded_channel::<Arc<str>>();
    loop {
        tokio::select! {
            msg = states.recv() => match msg {
                Ok(text) => {
                    if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                        return;
                    }
                }
                // A slow client skips ticks rather than stalling the others.
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => return,
            },
            Some(text) = replies.recv() => {
                if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                    return;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => match ClientMessage::parse(text.as_str()) {
                    Ok(message) => {
                        let input = worker::Input { message, reply: reply_tx.clone() };
                        if state.inputs.send(input).is_err() {
                            return;
                        }
                    }
                    Err(e) => {
                        let _ = reply_tx.send(protocol::error_message(&e).into());
                    }
                },
                Some(Ok(Message::Binary(_))) => {
                    let _ = reply_tx.send(protocol::error_message("binary frames are not supported").into());
                }
                Some(Ok(_)) => {}
                Some(Err(_)) | None => return,
            },
        }
    }
}

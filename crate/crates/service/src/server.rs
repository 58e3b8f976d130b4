//! HTTP front: `/ws` carries the protocol, everything else is served from
//! the static directory.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};
use tower_http::services::ServeDir;

use crate::session::Session;

const PLACEHOLDER: &str = "<!doctype html><title>vorg</title>\
<p>No UI bundle found. Connect a client to <code>/ws</code>.</p>";

/// Queues shared by every connection: inbound frames go to the single
/// engine task, events fan out to all observers.
#[derive(Clone)]
pub struct Hub {
    inbound: mpsc::UnboundedSender<String>,
    events: broadcast::Sender<String>,
}

impl Hub {
    pub fn subscribe(&self) -> broadcast::Receiver<String> {
        self.events.subscribe()
    }

    pub fn send(&self, frame: String) -> bool {
        self.inbound.send(frame).is_ok()
    }
}

/// Starts the engine task owning `session` and returns the hub feeding it.
pub fn spawn_engine(mut session: Session) -> Hub {
    let (in_tx, mut in_rx) = mpsc::unbounded_channel::<String>();
    let (ev_tx, _) = broadcast::channel::<String>(4096);
    let events = ev_tx.clone();
    tokio::spawn(async move {
        loop {
            let running = session.is_running();
            let delay = Duration::from_secs_f64(1.0 / session.ticks_per_second());
            let out = tokio::select! {
                frame = in_rx.recv() => match frame {
                    Some(text) => session.handle_text(&text),
                    None => break,
                },
                _ = tokio::time::sleep(delay), if running => session.advance(),
            };
            for e in out {
                // No subscribers is fine: events are also in the session log.
                let _ = ev_tx.send(serde_json::to_string(&e).expect("events serialize"));
            }
        }
    });
    Hub {
        inbound: in_tx,
        events,
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(hub): State<Hub>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, hub))
}

async fn client(socket: WebSocket, hub: Hub) {
    let mut events = hub.subscribe();
    let (mut tx, mut rx) = socket.split();
    let forward = tokio::spawn(async move {
        loop {
            match events.recv().await {
                Ok(text) => {
                    if tx.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });
    while let Some(Ok(msg)) = rx.next().await {
        match msg {
            Message::Text(t) => {
                if !hub.send(t.to_string()) {
                    break;
                }
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    forward.abort();
}

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER)
}

pub fn router(hub: Hub, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(ws_upgrade)).with_state(hub);
    match static_dir {
        Some(dir) if dir.is_dir() => app.fallback_service(ServeDir::new(dir)),
        _ => app.route("/", get(placeholder)),
    }
}

/// Serves `session` on `listener` until the process ends.
pub async fn serve(
    listener: TcpListener,
    session: Session,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let hub = spawn_engine(session);
    axum::serve(listener, router(hub, static_dir)).await
}

/// Binds `addr` and serves.
pub async fn bind_and_serve(
    addr: SocketAddr,
    session: Session,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    serve(TcpListener::bind(addr).await?, session, static_dir).await
}

//! Interactive simulation service: a JSON command/event protocol over a
//! WebSocket, one engine-owned session, and a replayable session log.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{CommandEnvelope, Event, EventKind, Request, TickState};
pub use server::{bind_and_serve, router, serve, spawn_engine, Hub};
pub use session::{replay, LogEntry, Session, SessionError};

/// Environment variable consulted for the listening port.
pub const PORT_ENV: &str = "VORG_PORT";
pub const DEFAULT_PORT: u16 = 8080;

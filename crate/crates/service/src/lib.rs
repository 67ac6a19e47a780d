//! Live assessment sessions: the per-connection state machine, input
//! normalization, the JSON wire protocol, and a WebSocket server.

pub mod gamepad;
pub mod protocol;
pub mod server;
pub mod session;

pub use gamepad::{normalize_gamepad, GamepadDrop};
pub use protocol::{
    parse_client, ClientBody, ClientMessage, ErrorCode, InputCounts, InputReport, ServerBody, ServerMessage,
};
pub use server::{serve, ServiceConfig};
pub use session::{Effect, Event, Phase, Session, SessionOptions, Step};

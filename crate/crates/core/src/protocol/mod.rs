//! Client/server training protocol.
//!
//! The server holds the item factors and nothing else. Each round it
//! broadcasts `V`, every client answers with a batch of [`GradientMessage`]s
//! followed by one [`FinishMessage`], and once every client has finished the
//! server applies the averaged deltas.

mod client;
mod codec;
mod server;
mod training;
mod transport;

pub use client::{client_init, ClientState, PrivacyConfig, RoundOutput, RrConfig};
pub use codec::{
    decode_frame, decode_handshake, decode_message, encode_handshake, encode_message, read_message,
    Handshake, FINISH_TAG, GRADIENT_TAG, HANDSHAKE_TAG,
};
pub use server::ServerState;
pub use training::{run_training, RoundMetrics, Task, TrainingConfig, TrainingOutput};
pub use transport::{SimulatedTransport, TcpTransport, Transport, DEFAULT_ROUND_TIMEOUT};

/// One item delta sent by a client.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMessage {
    pub item: u32,
    pub delta: Vec<f64>,
}

/// End of a client's traffic for the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinishMessage {
    pub client: u32,
}

/// Everything a client may send to the server.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Gradient(GradientMessage),
    Finish(FinishMessage),
}

impl Message {
    pub fn is_gradient(&self) -> bool {
        matches!(self, Message::Gradient(_))
    }
}

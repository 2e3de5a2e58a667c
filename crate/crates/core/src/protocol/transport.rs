use std::io::{BufReader, ErrorKind, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use log::debug;

use super::codec::{decode_handshake, encode_handshake, encode_message, read_message, Handshake};
use super::Message;
use crate::error::{Error, Result};

pub const DEFAULT_ROUND_TIMEOUT: Duration = Duration::from_secs(30);

/// Carries one round of client traffic to the server.
///
/// `outboxes[i]` is everything client `i` emitted this round, in emission
/// order. The returned sequence is what the server receives.
pub trait Transport {
    fn deliver(&mut self, round: usize, outboxes: Vec<Vec<Message>>) -> Result<Vec<Message>>;
}

/// In-memory delivery in client order, each client's messages in emission order.
#[derive(Debug, Default, Clone)]
pub struct SimulatedTransport {
    delivered: u64,
}

impl SimulatedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total messages carried so far.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }
}

impl Transport for SimulatedTransport {
    fn deliver(&mut self, _round: usize, outboxes: Vec<Vec<Message>>) -> Result<Vec<Message>> {
        let out: Vec<Message> = outboxes.into_iter().flatten().collect();
        self.delivered += out.len() as u64;
        Ok(out)
    }
}

/// Loopback TCP: every client opens a connection per round, sends the
/// handshake and its frames, and waits for the server to hang up.
#[derive(Debug)]
pub struct TcpTransport {
    listener: TcpListener,
    session: Handshake,
    timeout: Duration,
}

impl TcpTransport {
    pub fn bind(k: u32, n_items: u32, timeout: Duration) -> Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        listener.set_nonblocking(true)?;
        Ok(Self {
            listener,
            session: Handshake { k, n_items },
            timeout,
        })
    }

    fn accept_before(&self, deadline: Instant) -> Option<TcpStream> {
        loop {
            match self.listener.accept() {
                Ok((stream, _)) => return Some(stream),
                Err(e) if e.kind() == ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return None;
                    }
                    thread::sleep(Duration::from_millis(1));
                }
                Err(e) => {
                    debug!("accept failed: {e}");
                    return None;
                }
            }
        }
    }

    /// Reads one connection up to and including its finish frame.
    fn read_client(&self, stream: &TcpStream, deadline: Instant) -> Result<Vec<Message>> {
        stream.set_nonblocking(false)?;
        let mut reader = BufReader::new(stream);
        let remaining = |d: Instant| d.saturating_duration_since(Instant::now()).max(Duration::from_millis(1));
        stream.set_read_timeout(Some(remaining(deadline)))?;
        let mut head = [0u8; 9];
        reader.read_exact(&mut head)?;
        let hs = decode_handshake(&head)?;
        if hs != self.session {
            return Err(Error::SessionMismatch {
                expected: self.session.k as usize,
                actual: hs.k as usize,
            });
        }
        let mut out = Vec::new();
        loop {
            stream.set_read_timeout(Some(remaining(deadline)))?;
            let msg = read_message(&mut reader, self.session.k as usize)?;
            let done = !msg.is_gradient();
            out.push(msg);
            if done {
                return Ok(out);
            }
        }
    }
}

fn client_finish(messages: &[Message]) -> Option<u32> {
    messages.iter().rev().find_map(|m| match m {
        Message::Finish(f) => Some(f.client),
        _ => None,
    })
}

impl Transport for TcpTransport {
    fn deliver(&mut self, round: usize, outboxes: Vec<Vec<Message>>) -> Result<Vec<Message>> {
        let addr = self.listener.local_addr()?;
        let deadline = Instant::now() + self.timeout;
        let handshake = encode_handshake(&self.session);
        let n = outboxes.len();
        thread::scope(|scope| {
            for outbox in &outboxes {
                let handshake = &handshake;
                scope.spawn(move || -> Result<()> {
                    let mut stream = TcpStream::connect(addr)?;
                    let mut bytes = handshake.clone();
                    for m in outbox {
                        bytes.extend(encode_message(m));
                    }
                    stream.write_all(&bytes)?;
                    stream.flush()?;
                    // Hold the connection until the server closes it.
                    let mut sink = [0u8; 1];
                    let _ = stream.read(&mut sink);
                    Ok(())
                });
            }

            let abort = |reason: String| Error::RoundAborted { round, reason };
            let mut streams = Vec::with_capacity(n);
            let mut received = Vec::with_capacity(n);
            let mut failure = None;
            for _ in 0..n {
                let Some(stream) = self.accept_before(deadline) else {
                    failure = Some(abort(format!("only {} of {n} clients connected", streams.len())));
                    break;
                };
                let got = self.read_client(&stream, deadline);
                streams.push(stream);
                match got {
                    Ok(msgs) => received.push(msgs),
                    Err(e) => {
                        failure = Some(abort(format!("client stream failed: {e}")));
                        break;
                    }
                }
            }
            for s in &streams {
                let _ = s.shutdown(Shutdown::Both);
            }
            if let Some(err) = failure {
                // Unblock writers that never got accepted.
                while let Some(s) = self.accept_before(Instant::now()) {
                    let _ = s.shutdown(Shutdown::Both);
                }
                return Err(err);
            }
            received.sort_by_key(|m| client_finish(m));
            Ok(received.into_iter().flatten().collect())
        })
    }
}

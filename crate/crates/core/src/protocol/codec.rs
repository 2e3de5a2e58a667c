//! Little-endian binary framing.
//!
//! ```text
//! handshake: 0x00 | u32 K | u32 n_items
//! gradient:  0x01 | u32 item | u32 K | K x f64
//! finish:    0x02 | u32 client
//! ```

use std::io::Read;

use super::{FinishMessage, GradientMessage, Message};
use crate::error::{Error, Result};

pub const HANDSHAKE_TAG: u8 = 0x00;
pub const GRADIENT_TAG: u8 = 0x01;
pub const FINISH_TAG: u8 = 0x02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handshake {
    pub k: u32,
    pub n_items: u32,
}

pub fn encode_handshake(h: &Handshake) -> Vec<u8> {
    let mut out = Vec::with_capacity(9);
    out.push(HANDSHAKE_TAG);
    out.extend_from_slice(&h.k.to_le_bytes());
    out.extend_from_slice(&h.n_items.to_le_bytes());
    out
}

pub fn decode_handshake(bytes: &[u8]) -> Result<Handshake> {
    need(bytes, 9)?;
    if bytes[0] != HANDSHAKE_TAG {
        return Err(Error::UnknownFrameType(bytes[0]));
    }
    Ok(Handshake {
        k: u32_at(bytes, 1),
        n_items: u32_at(bytes, 5),
    })
}

pub fn encode_message(msg: &Message) -> Vec<u8> {
    match msg {
        Message::Gradient(g) => {
            let mut out = Vec::with_capacity(9 + 8 * g.delta.len());
            out.push(GRADIENT_TAG);
            out.extend_from_slice(&g.item.to_le_bytes());
            out.extend_from_slice(&(g.delta.len() as u32).to_le_bytes());
            for x in &g.delta {
                out.extend_from_slice(&x.to_le_bytes());
            }
            out
        }
        Message::Finish(f) => {
            let mut out = Vec::with_capacity(5);
            out.push(FINISH_TAG);
            out.extend_from_slice(&f.client.to_le_bytes());
            out
        }
    }
}

/// Decodes one frame from the front of `bytes`, returning it and the number of
/// bytes consumed.
pub fn decode_frame(bytes: &[u8], k: usize) -> Result<(Message, usize)> {
    need(bytes, 1)?;
    match bytes[0] {
        GRADIENT_TAG => {
            need(bytes, 9)?;
            let item = u32_at(bytes, 1);
            let frame_k = u32_at(bytes, 5) as usize;
            if frame_k != k {
                return Err(Error::SessionMismatch {
                    expected: k,
                    actual: frame_k,
                });
            }
            let len = 9 + 8 * k;
            need(bytes, len)?;
            let delta = bytes[9..len]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok((Message::Gradient(GradientMessage { item, delta }), len))
        }
        FINISH_TAG => {
            need(bytes, 5)?;
            Ok((
                Message::Finish(FinishMessage {
                    client: u32_at(bytes, 1),
                }),
                5,
            ))
        }
        other => Err(Error::UnknownFrameType(other)),
    }
}

/// Decodes a buffer holding exactly one frame.
pub fn decode_message(bytes: &[u8], k: usize) -> Result<Message> {
    let (msg, used) = decode_frame(bytes, k)?;
    if used != bytes.len() {
        return Err(Error::Protocol(format!(
            "{} trailing bytes after frame",
            bytes.len() - used
        )));
    }
    Ok(msg)
}

/// Reads one frame from a byte stream.
pub fn read_message<R: Read>(reader: &mut R, k: usize) -> Result<Message> {
    let mut tag = [0u8; 1];
    reader.read_exact(&mut tag)?;
    let mut header = [0u8; 8];
    match tag[0] {
        GRADIENT_TAG => {
            reader.read_exact(&mut header)?;
            let frame_k = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
            if frame_k != k {
                return Err(Error::SessionMismatch {
                    expected: k,
                    actual: frame_k,
                });
            }
            let mut body = vec![0u8; 8 * k];
            reader.read_exact(&mut body)?;
            let delta = body
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(Message::Gradient(GradientMessage {
                item: u32::from_le_bytes(header[..4].try_into().unwrap()),
                delta,
            }))
        }
        FINISH_TAG => {
            reader.read_exact(&mut header[..4])?;
            Ok(Message::Finish(FinishMessage {
                client: u32::from_le_bytes(header[..4].try_into().unwrap()),
            }))
        }
        other => Err(Error::UnknownFrameType(other)),
    }
}

fn need(bytes: &[u8], needed: usize) -> Result<()> {
    if bytes.len() < needed {
        return Err(Error::TruncatedFrame {
            needed,
            available: bytes.len(),
        });
    }
    Ok(())
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

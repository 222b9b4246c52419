//! `[u64 round][u8 kind][u32 len][payload]`, all little-endian.

use std::io::{self, Read, Write};

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochVector, Outcome};
use crate::error::{Error, Result};
use crate::protocols::{Message, ProtocolId, SharedRandomness};

pub const HEADER_LEN: usize = 13;
/// Larger payloads are rejected before allocation.
pub const MAX_PAYLOAD: u32 = 1024;
pub const VECTOR_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FrameKind {
    Setting = 1,
    SharedRandomness = 2,
    Message = 3,
    Output = 4,
}

impl FrameKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            1 => FrameKind::Setting,
            2 => FrameKind::SharedRandomness,
            3 => FrameKind::Message,
            4 => FrameKind::Output,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub round: u64,
    pub kind: FrameKind,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(round: u64, kind: FrameKind, payload: Vec<u8>) -> Self {
        Frame {
            round,
            kind,
            payload,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    /// Reads one frame; `Ok(None)` on end of stream at a frame boundary.
    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> Result<Option<Frame>> {
        let mut header = [0u8; HEADER_LEN];
        let mut filled = 0;
        while filled < HEADER_LEN {
            match r.read(&mut header[filled..]) {
                Ok(0) if filled == 0 => return Ok(None),
                Ok(0) => {
                    return Err(Error::Transport(io::Error::new(
                        io::ErrorKind::UnexpectedEof,
                        "stream ended inside a frame header",
                    )))
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let round = u64::from_le_bytes(header[0..8].try_into().unwrap());
        let kind = FrameKind::from_byte(header[8])
            .ok_or_else(|| Error::Malformed(format!("unknown frame kind {}", header[8])))?;
        let len = u32::from_le_bytes(header[9..13].try_into().unwrap());
        if len > MAX_PAYLOAD {
            return Err(Error::Malformed(format!(
                "payload of {len} bytes exceeds {MAX_PAYLOAD}"
            )));
        }
        let mut payload = vec![0u8; len as usize];
        r.read_exact(&mut payload)?;
        Ok(Some(Frame {
            round,
            kind,
            payload,
        }))
    }

    /// Reads a frame that must exist and must be of `kind` for `round`.
    pub fn expect<R: Read + ?Sized>(
        r: &mut R,
        kind: FrameKind,
        round: Option<u64>,
    ) -> Result<Frame> {
        let f = Frame::read_from(r)?.ok_or_else(|| {
            Error::Transport(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                format!("peer closed while a {kind:?} frame was due"),
            ))
        })?;
        if f.kind != kind {
            return Err(Error::ProtocolViolation {
                round: f.round,
                detail: format!("expected a {kind:?} frame, got {:?}", f.kind),
            });
        }
        if let Some(r) = round {
            if f.round != r {
                return Err(Error::ProtocolViolation {
                    round: r,
                    detail: format!("{kind:?} frame carries round {}", f.round),
                });
            }
        }
        Ok(f)
    }
}

pub fn encode_vector(v: BlochVector, out: &mut Vec<u8>) {
    for c in v.to_array() {
        out.extend_from_slice(&c.to_le_bytes());
    }
}

pub fn decode_vector(bytes: &[u8]) -> Result<BlochVector> {
    if bytes.len() != VECTOR_LEN {
        return Err(Error::Malformed(format!("vector of {} bytes", bytes.len())));
    }
    let c = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    Ok(BlochVector::new(c(0), c(1), c(2)))
}

pub fn encode_shared(s: &SharedRandomness) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 + VECTOR_LEN * s.lambdas.len());
    out.push(s.lambdas.len() as u8);
    for &l in &s.lambdas {
        encode_vector(l, &mut out);
    }
    out.push(match s.flag {
        Some(false) => 0,
        Some(true) => 1,
        None => 2,
    });
    out
}

pub fn decode_shared(bytes: &[u8]) -> Result<SharedRandomness> {
    let n = *bytes
        .first()
        .ok_or_else(|| Error::Malformed("empty shared randomness".into()))? as usize;
    if n > 3 || bytes.len() != 2 + VECTOR_LEN * n {
        return Err(Error::Malformed(format!(
            "shared randomness of {} bytes for {n} vectors",
            bytes.len()
        )));
    }
    let mut lambdas = ArrayVec::new();
    for i in 0..n {
        lambdas.push(decode_vector(
            &bytes[1 + VECTOR_LEN * i..1 + VECTOR_LEN * (i + 1)],
        )?);
    }
    let flag = match bytes[bytes.len() - 1] {
        0 => Some(false),
        1 => Some(true),
        2 => None,
        b => return Err(Error::Malformed(format!("shared bit byte {b}"))),
    };
    Ok(SharedRandomness { lambdas, flag })
}

/// Payload width of a MESSAGE frame for `protocol`.
pub fn message_width(protocol: ProtocolId) -> usize {
    if protocol.alphabet().is_some() {
        1
    } else {
        VECTOR_LEN
    }
}

/// Payload of a non-silent message; empty for a silent round.
pub fn encode_message(m: &Message) -> Vec<u8> {
    match m {
        Message::Silent => Vec::new(),
        Message::Symbol(s) => vec![*s],
        Message::Vector(v) => {
            let mut out = Vec::with_capacity(VECTOR_LEN);
            encode_vector(*v, &mut out);
            out
        }
    }
}

/// Decodes a MESSAGE payload, enforcing the width and alphabet of `protocol`.
pub fn decode_message(protocol: ProtocolId, round: u64, payload: &[u8]) -> Result<Message> {
    let width = message_width(protocol);
    if payload.len() != width {
        return Err(Error::ProtocolViolation {
            round,
            detail: format!(
                "MESSAGE payload of {} bytes, '{protocol}' allows exactly {width}",
                payload.len()
            ),
        });
    }
    match protocol.alphabet() {
        Some(d) if payload[0] < d => Ok(Message::Symbol(payload[0])),
        Some(d) => Err(Error::ProtocolViolation {
            round,
            detail: format!("symbol {} outside the alphabet of size {d}", payload[0]),
        }),
        None => Ok(Message::Vector(decode_vector(payload)?)),
    }
}

pub fn encode_outcome(o: Outcome) -> u8 {
    o.value() as u8
}

pub fn decode_outcome(b: u8) -> Result<Outcome> {
    Outcome::from_value(b as i8).ok_or_else(|| Error::Malformed(format!("outcome byte {b:#04x}")))
}

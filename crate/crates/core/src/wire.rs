//! Binary framing for the three-pass protocol.
//!
//! ```text
//! +-------+---------+------+-------------+---------+
//! | "P3PP"| version | type | length (BE) | payload |
//! |  4 B  |   1 B   | 1 B  |     4 B     |  len B  |
//! +-------+---------+------+-------------+---------+
//! ```
//!
//! Integer payloads are canonical big-endian (no leading zero byte, zero is
//! empty). The key-announce payload is two length-prefixed integers `n, g`.
//! Error payloads are UTF-8 text. The key-announce frame is not
//! authenticated.

use std::io::{ErrorKind, Read};

use num_bigint::BigUint;

use crate::error::{Error, ProtocolFault, Result};
use crate::numtheory::to_canonical_bytes;
use crate::paillier::PublicKey;

pub const MAGIC: [u8; 4] = *b"P3PP";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
/// Largest payload accepted from a peer.
pub const MAX_PAYLOAD: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    KeyAnnounce = 0,
    M1 = 1,
    M2 = 2,
    M3 = 3,
    Error = 4,
}

impl MsgType {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => MsgType::KeyAnnounce,
            1 => MsgType::M1,
            2 => MsgType::M2,
            3 => MsgType::M3,
            4 => MsgType::Error,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    KeyAnnounce { n: BigUint, g: BigUint },
    M1(BigUint),
    M2(BigUint),
    M3(BigUint),
    Error(String),
}

impl Frame {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Frame::KeyAnnounce { .. } => MsgType::KeyAnnounce,
            Frame::M1(_) => MsgType::M1,
            Frame::M2(_) => MsgType::M2,
            Frame::M3(_) => MsgType::M3,
            Frame::Error(_) => MsgType::Error,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Frame::KeyAnnounce { .. } => "KEY",
            Frame::M1(_) => "M1",
            Frame::M2(_) => "M2",
            Frame::M3(_) => "M3",
            Frame::Error(_) => "ERROR",
        }
    }

    /// Range checks against the session key: `M1, M2 < n^2` and `M3 < n`.
    pub fn check_bounds(&self, pk: &PublicKey) -> Result<()> {
        match self {
            Frame::M1(v) | Frame::M2(v) if v >= pk.n_squared() => {
                Err(Error::Range(format!("{} payload must be below n^2", self.kind())))
            }
            Frame::M3(v) if v >= pk.n() => Err(Error::Range("M3 payload must be below n".into())),
            _ => Ok(()),
        }
    }

    fn payload(&self) -> Vec<u8> {
        match self {
            Frame::KeyAnnounce { n, g } => {
                let mut out = Vec::new();
                for v in [n, g] {
                    let bytes = to_canonical_bytes(v);
                    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
                    out.extend_from_slice(&bytes);
                }
                out
            }
            Frame::M1(v) | Frame::M2(v) | Frame::M3(v) => to_canonical_bytes(v),
            Frame::Error(msg) => msg.as_bytes().to_vec(),
        }
    }
}

pub fn encode_msg(frame: &Frame) -> Result<Vec<u8>> {
    let payload = frame.payload();
    if payload.len() > MAX_PAYLOAD {
        return Err(Error::Range(format!(
            "payload of {} bytes exceeds {MAX_PAYLOAD}",
            payload.len()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(frame.msg_type() as u8);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Encodes after checking the payload against the session key.
pub fn encode_msg_for(frame: &Frame, pk: &PublicKey) -> Result<Vec<u8>> {
    frame.check_bounds(pk)?;
    encode_msg(frame)
}

/// Validates a header and returns the message type and payload length.
pub fn decode_header(header: &[u8; HEADER_LEN]) -> Result<(MsgType, usize)> {
    if header[..4] != MAGIC {
        return Err(Error::parse(0, "bad magic"));
    }
    if header[4] != VERSION {
        return Err(Error::parse(4, format!("unknown version {}", header[4])));
    }
    let ty = MsgType::from_byte(header[5])
        .ok_or_else(|| Error::parse(5, format!("unknown message type {}", header[5])))?;
    let len = u32::from_be_bytes(header[6..10].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::parse(6, format!("payload length {len} exceeds {MAX_PAYLOAD}")));
    }
    Ok((ty, len))
}

fn canonical_int(bytes: &[u8], offset: usize) -> Result<BigUint> {
    if bytes.first() == Some(&0) {
        return Err(Error::parse(offset, "non-canonical integer (leading zero)"));
    }
    Ok(BigUint::from_bytes_be(bytes))
}

/// Parses a payload; `base` is its offset within the frame for diagnostics.
pub fn decode_payload(ty: MsgType, payload: &[u8], base: usize) -> Result<Frame> {
    Ok(match ty {
        MsgType::M1 => Frame::M1(canonical_int(payload, base)?),
        MsgType::M2 => Frame::M2(canonical_int(payload, base)?),
        MsgType::M3 => Frame::M3(canonical_int(payload, base)?),
        MsgType::Error => Frame::Error(
            String::from_utf8(payload.to_vec())
                .map_err(|e| Error::parse(base + e.utf8_error().valid_up_to(), "invalid UTF-8"))?,
        ),
        MsgType::KeyAnnounce => {
            let mut pos = 0;
            let mut field = || -> Result<BigUint> {
                let len_bytes = payload
                    .get(pos..pos + 4)
                    .ok_or_else(|| Error::parse(base + pos, "truncated field length"))?;
                let len = u32::from_be_bytes(len_bytes.try_into().unwrap()) as usize;
                let start = pos + 4;
                let body = payload
                    .get(start..start.saturating_add(len))
                    .ok_or_else(|| Error::parse(base + start, "truncated field"))?;
                pos = start + len;
                canonical_int(body, base + start)
            };
            let n = field()?;
            let g = field()?;
            if pos != payload.len() {
                return Err(Error::parse(base + pos, "trailing bytes in key frame"));
            }
            Frame::KeyAnnounce { n, g }
        }
    })
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode_msg(bytes: &[u8]) -> Result<Frame> {
    let header: &[u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| Error::parse(bytes.len(), "truncated header"))?;
    let (ty, len) = decode_header(header)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < len {
        return Err(Error::parse(bytes.len(), "truncated payload"));
    }
    if body.len() > len {
        return Err(Error::parse(HEADER_LEN + len, "trailing bytes after frame"));
    }
    decode_payload(ty, body, HEADER_LEN)
}

/// Decodes and range-checks against the session key.
pub fn decode_msg_for(bytes: &[u8], pk: &PublicKey) -> Result<Frame> {
    let frame = decode_msg(bytes)?;
    frame.check_bounds(pk)?;
    Ok(frame)
}

fn map_read_err(e: std::io::Error) -> Error {
    match e.kind() {
        ErrorKind::WouldBlock | ErrorKind::TimedOut => Error::ProtocolTimeout,
        ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted | ErrorKind::BrokenPipe => {
            Error::Protocol(ProtocolFault::Disconnected)
        }
        _ => Error::Io(e),
    }
}

/// Fills `buf`, returning how many bytes arrived before EOF.
fn read_full<R: Read + ?Sized>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => return Err(map_read_err(e)),
        }
    }
    Ok(got)
}

/// Reads one frame from a stream.
///
/// EOF before the first byte is a disconnect; EOF inside a frame is a
/// truncation and reported as a parse error.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<(Frame, Vec<u8>)> {
    let mut header = [0u8; HEADER_LEN];
    let got = read_full(r, &mut header)?;
    if got == 0 {
        return Err(Error::Protocol(ProtocolFault::Disconnected));
    }
    if got < HEADER_LEN {
        return Err(Error::parse(got, "truncated header"));
    }
    let (ty, len) = decode_header(&header)?;
    let mut payload = vec![0u8; len];
    let got = read_full(r, &mut payload)?;
    if got < len {
        return Err(Error::parse(HEADER_LEN + got, "truncated payload"));
    }
    let frame = decode_payload(ty, &payload, HEADER_LEN)?;
    let mut raw = header.to_vec();
    raw.extend_from_slice(&payload);
    Ok((frame, raw))
}

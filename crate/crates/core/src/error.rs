use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a wide message falls outside the trapdoor permutation's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inadmissibility {
    /// `m div n == 0`, i.e. the message is smaller than `n`.
    HighPartZero,
    /// `gcd(m div n, n) != 1`.
    HighPartNotUnit,
}

impl fmt::Display for Inadmissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inadmissibility::HighPartZero => f.write_str("m div n is zero"),
            Inadmissibility::HighPartNotUnit => f.write_str("m div n shares a factor with n"),
        }
    }
}

/// Failures seen while driving a protocol over a channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolFault {
    /// The peer closed the connection before the exchange finished.
    Disconnected,
    /// A well-formed frame arrived out of sequence.
    UnexpectedFrame { expected: &'static str, got: &'static str },
    /// The peer reported an error with an ERROR frame.
    PeerError(String),
    /// A frame could not be decoded or failed validation.
    BadFrame(String),
}

impl fmt::Display for ProtocolFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolFault::Disconnected => f.write_str("peer disconnected"),
            ProtocolFault::UnexpectedFrame { expected, got } => {
                write!(f, "expected {expected} frame, got {got}")
            }
            ProtocolFault::PeerError(msg) => write!(f, "peer reported error: {msg}"),
            ProtocolFault::BadFrame(msg) => write!(f, "bad frame: {msg}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("value is not invertible modulo the given modulus")]
    NotInvertible,
    #[error("plaintext out of range (must be < n)")]
    PlaintextOutOfRange,
    #[error("ciphertext was produced under a different key")]
    KeyMismatch,
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("inadmissible message for trapdoor permutation: {0}")]
    InadmissibleMessage(Inadmissibility),
    #[error("message is not a unit modulo n^2 and cannot be signed")]
    NotSignable,
    #[error("protocol order violation: {step} called in state {state}")]
    ProtocolOrderViolation { step: &'static str, state: &'static str },
    #[error("malformed protocol message: {0}")]
    MalformedMessage(String),
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("value out of range: {0}")]
    Range(String),
    #[error("protocol timed out")]
    ProtocolTimeout,
    #[error("protocol error: {0}")]
    Protocol(ProtocolFault),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(offset: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(reason: impl Into<String>) -> Self {
        Error::Domain(reason.into())
    }
}

//! Runs the Paillier three-pass protocol over a byte stream.
//!
//! The initiator sends a key-announce frame `(n, g)` followed by `M1`, reads
//! `M2`, and answers with `M3`. The responder mirrors this and ends holding
//! `m1`. Any stream works: [`TcpStream`] for real peers, [`MemoryPipe`] for
//! in-process runs. Both produce identical bytes under identical randomness.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use num_bigint::BigUint;
use rand::RngCore;

use crate::error::{Error, ProtocolFault, Result};
use crate::paillier::{Plaintext, PrivateKey, PublicKey};
use crate::threepass::{PaillierInitiatorSession, PaillierResponderSession, ResponderMode};
use crate::wire::{encode_msg, read_frame, Frame};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Frames plus a log of every byte written and read.
#[derive(Debug)]
pub struct FrameChannel<S> {
    stream: S,
    sent: Vec<u8>,
    received: Vec<u8>,
}

impl<S: Read + Write> FrameChannel<S> {
    pub fn new(stream: S) -> Self {
        FrameChannel {
            stream,
            sent: Vec::new(),
            received: Vec::new(),
        }
    }

    pub fn send(&mut self, frame: &Frame) -> Result<()> {
        let bytes = encode_msg(frame)?;
        self.stream.write_all(&bytes).map_err(map_write_err)?;
        self.stream.flush().map_err(map_write_err)?;
        self.sent.extend_from_slice(&bytes);
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Frame> {
        let (frame, raw) = read_frame(&mut self.stream)?;
        self.received.extend_from_slice(&raw);
        Ok(frame)
    }

    pub fn sent_bytes(&self) -> &[u8] {
        &self.sent
    }

    pub fn received_bytes(&self) -> &[u8] {
        &self.received
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

fn map_write_err(e: io::Error) -> Error {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::ProtocolTimeout,
        io::ErrorKind::BrokenPipe
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted => Error::Protocol(ProtocolFault::Disconnected),
        _ => Error::Io(e),
    }
}

/// One end of an in-process duplex byte pipe.
///
/// Reads block up to the configured timeout and then fail with
/// `TimedOut`. Dropping one end makes the other read EOF.
#[derive(Debug)]
pub struct MemoryPipe {
    tx: Option<Sender<Vec<u8>>>,
    rx: Receiver<Vec<u8>>,
    pending: VecDeque<u8>,
    timeout: Duration,
}

impl MemoryPipe {
    pub fn pair(timeout: Duration) -> (MemoryPipe, MemoryPipe) {
        let (atx, brx) = mpsc::channel();
        let (btx, arx) = mpsc::channel();
        let end = |tx, rx| MemoryPipe {
            tx: Some(tx),
            rx,
            pending: VecDeque::new(),
            timeout,
        };
        (end(atx, arx), end(btx, brx))
    }

    /// Closes the write half; the peer sees EOF after draining.
    pub fn close_write(&mut self) {
        self.tx = None;
    }
}

impl Read for MemoryPipe {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        if self.pending.is_empty() {
            match self.rx.recv_timeout(self.timeout) {
                Ok(chunk) => self.pending.extend(chunk),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(io::Error::new(io::ErrorKind::TimedOut, "pipe read timed out"))
                }
                Err(RecvTimeoutError::Disconnected) => return Ok(0),
            }
        }
        let k = buf.len().min(self.pending.len());
        for (dst, src) in buf.iter_mut().zip(self.pending.drain(..k)) {
            *dst = src;
        }
        Ok(k)
    }
}

impl Write for MemoryPipe {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let tx = self
            .tx
            .as_ref()
            .ok_or_else(|| io::Error::new(io::ErrorKind::BrokenPipe, "write half closed"))?;
        tx.send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer dropped"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Values exchanged in one run plus the raw bytes this side wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub m1: BigUint,
    pub m2: BigUint,
    pub m3: BigUint,
    pub sent: Vec<u8>,
    pub received: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponderOutcome {
    pub recovered: BigUint,
    pub transcript: Transcript,
}

/// Best-effort ERROR frame before giving up on the peer.
fn abort<S: Read + Write>(chan: &mut FrameChannel<S>, err: Error) -> Error {
    if !matches!(
        err,
        Error::ProtocolTimeout | Error::Protocol(ProtocolFault::Disconnected) | Error::Io(_)
    ) {
        let _ = chan.send(&Frame::Error(err.to_string()));
    }
    match err {
        Error::Parse { .. } | Error::Range(_) => Error::Protocol(ProtocolFault::BadFrame(err.to_string())),
        other => other,
    }
}

fn unexpected(expected: &'static str, got: Frame) -> Error {
    match got {
        Frame::Error(msg) => Error::Protocol(ProtocolFault::PeerError(msg)),
        other => Error::Protocol(ProtocolFault::UnexpectedFrame {
            expected,
            got: other.kind(),
        }),
    }
}

/// Initiator side. `nonce` pins the encryption randomness of `M1`.
pub fn run_initiator<S: Read + Write, R: RngCore + ?Sized>(
    chan: &mut FrameChannel<S>,
    sk: PrivateKey,
    m1: Plaintext,
    nonce: Option<&BigUint>,
    rng: &mut R,
) -> Result<Transcript> {
    let pk = sk.public().clone();
    let mut session = PaillierInitiatorSession::new(sk, m1)?;
    chan.send(&Frame::KeyAnnounce {
        n: pk.n().clone(),
        g: pk.g().clone(),
    })?;
    let msg1 = match nonce {
        Some(y) => session.send_m1_with_nonce(y)?,
        None => session.send_m1(rng)?,
    };
    chan.send(&Frame::M1(msg1.clone()))?;

    let msg2 = match chan.recv() {
        Ok(Frame::M2(v)) => v,
        Ok(Frame::Error(msg)) => return Err(Error::Protocol(ProtocolFault::PeerError(msg))),
        Ok(other) => return Err(abort(chan, unexpected("M2", other))),
        Err(e) => return Err(abort(chan, e)),
    };
    let msg3 = match Frame::M2(msg2.clone())
        .check_bounds(&pk)
        .and_then(|_| session.reveal(&msg2))
    {
        Ok(v) => v,
        Err(e) => return Err(abort(chan, e)),
    };
    chan.send(&Frame::M3(msg3.clone()))?;
    session.finish()?;
    Ok(Transcript {
        m1: msg1,
        m2: msg2,
        m3: msg3,
        sent: chan.sent_bytes().to_vec(),
        received: chan.received_bytes().to_vec(),
    })
}

/// Responder side. Learns the public key from the first frame.
pub fn run_responder<S: Read + Write, R: RngCore + ?Sized>(
    chan: &mut FrameChannel<S>,
    mode: ResponderMode,
    rng: &mut R,
) -> Result<ResponderOutcome> {
    let pk = match chan.recv() {
        Ok(Frame::KeyAnnounce { n, g }) => match PublicKey::new(n, g) {
            Ok(pk) => pk,
            Err(e) => return Err(abort(chan, e)),
        },
        Ok(other) => return Err(abort(chan, unexpected("KEY", other))),
        Err(e) => return Err(abort(chan, e)),
    };
    let mut session = PaillierResponderSession::new(pk.clone(), mode)?;

    let msg1 = match chan.recv() {
        Ok(Frame::M1(v)) => v,
        Ok(other) => return Err(abort(chan, unexpected("M1", other))),
        Err(e) => return Err(abort(chan, e)),
    };
    let msg2 = match Frame::M1(msg1.clone())
        .check_bounds(&pk)
        .and_then(|_| session.respond(&msg1, rng))
    {
        Ok(v) => v,
        Err(e) => return Err(abort(chan, e)),
    };
    chan.send(&Frame::M2(msg2.clone()))?;

    let msg3 = match chan.recv() {
        Ok(Frame::M3(v)) => v,
        Ok(other) => return Err(abort(chan, unexpected("M3", other))),
        Err(e) => return Err(abort(chan, e)),
    };
    let recovered = match Frame::M3(msg3.clone())
        .check_bounds(&pk)
        .and_then(|_| session.recover(&msg3))
    {
        Ok(v) => v,
        Err(e) => return Err(abort(chan, e)),
    };
    Ok(ResponderOutcome {
        recovered,
        transcript: Transcript {
            m1: msg1,
            m2: msg2,
            m3: msg3,
            sent: chan.sent_bytes().to_vec(),
            received: chan.received_bytes().to_vec(),
        },
    })
}

/// Applies read and write timeouts to a TCP stream.
pub fn configure_tcp(stream: &TcpStream, timeout: Duration) -> Result<()> {
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.set_nodelay(true)?;
    Ok(())
}

pub fn connect<A: ToSocketAddrs>(addr: A, timeout: Duration) -> Result<TcpStream> {
    let mut last = None;
    for sa in addr.to_socket_addrs()? {
        match TcpStream::connect_timeout(&sa, timeout) {
            Ok(s) => {
                configure_tcp(&s, timeout)?;
                return Ok(s);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last
        .map(Error::Io)
        .unwrap_or_else(|| Error::domain("address resolved to nothing")))
}

/// Connects to `addr` and runs the initiator.
pub fn send_over_tcp<R: RngCore + ?Sized>(
    addr: SocketAddr,
    sk: PrivateKey,
    m1: Plaintext,
    nonce: Option<&BigUint>,
    timeout: Duration,
    rng: &mut R,
) -> Result<Transcript> {
    let stream = connect(addr, timeout)?;
    let mut chan = FrameChannel::new(stream);
    let t = run_initiator(&mut chan, sk, m1, nonce, rng)?;
    let _ = chan.into_inner().shutdown(std::net::Shutdown::Both);
    Ok(t)
}

/// Runs the responder on an accepted connection.
pub fn respond_over_tcp<R: RngCore + ?Sized>(
    stream: TcpStream,
    mode: ResponderMode,
    timeout: Duration,
    rng: &mut R,
) -> Result<ResponderOutcome> {
    configure_tcp(&stream, timeout)?;
    let mut chan = FrameChannel::new(stream);
    let out = run_responder(&mut chan, mode, rng)?;
    let _ = chan.into_inner().shutdown(std::net::Shutdown::Both);
    Ok(out)
}

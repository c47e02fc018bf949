//! Text envelope for keys.
//!
//! A header line (`paillier-public-v1` or `paillier-private-v1`) followed by a
//! standard base64 body wrapped at 64 columns. The decoded body is a list of
//! `u32` big-endian length-prefixed canonical integers: `n, g` for public
//! keys and `n, g, p, q, lambda, mu` for private keys.
//!
//! Parse errors carry a byte offset. Header and base64 problems are reported
//! against the text, field problems against the decoded body.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::numtheory::to_canonical_bytes;
use crate::paillier::{PrivateKey, PublicKey};

pub const PUBLIC_HEADER: &str = "paillier-public-v1";
pub const PRIVATE_HEADER: &str = "paillier-private-v1";
const LINE_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KeyMaterial {
    Public(PublicKey),
    Private(PrivateKey),
}

impl KeyMaterial {
    pub fn public(&self) -> &PublicKey {
        match self {
            KeyMaterial::Public(pk) => pk,
            KeyMaterial::Private(sk) => sk.public(),
        }
    }
}

fn envelope(header: &str, fields: &[&BigUint]) -> String {
    let mut body = Vec::new();
    for f in fields {
        let bytes = to_canonical_bytes(f);
        body.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        body.extend_from_slice(&bytes);
    }
    let encoded = STANDARD.encode(body);
    let mut out = String::with_capacity(header.len() + encoded.len() + encoded.len() / LINE_WIDTH + 2);
    out.push_str(header);
    out.push('\n');
    for chunk in encoded.as_bytes().chunks(LINE_WIDTH) {
        out.push_str(std::str::from_utf8(chunk).expect("base64 is ASCII"));
        out.push('\n');
    }
    out
}

pub fn serialize_public(pk: &PublicKey) -> String {
    envelope(PUBLIC_HEADER, &[pk.n(), pk.g()])
}

pub fn serialize_private(sk: &PrivateKey) -> String {
    let pk = sk.public();
    envelope(
        PRIVATE_HEADER,
        &[pk.n(), pk.g(), sk.p(), sk.q(), sk.lambda(), sk.mu()],
    )
}

fn read_fields(body: &[u8], count: usize) -> Result<Vec<BigUint>> {
    let mut pos = 0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len_bytes = body
            .get(pos..pos + 4)
            .ok_or_else(|| Error::parse(pos, "truncated field length"))?;
        let len = u32::from_be_bytes(len_bytes.try_into().unwrap()) as usize;
        let start = pos + 4;
        let bytes = body
            .get(start..start.saturating_add(len))
            .ok_or_else(|| Error::parse(start, "truncated field"))?;
        if bytes.first() == Some(&0) {
            return Err(Error::parse(start, "non-canonical integer (leading zero)"));
        }
        out.push(BigUint::from_bytes_be(bytes));
        pos = start + len;
    }
    if pos != body.len() {
        return Err(Error::parse(pos, "trailing bytes after key fields"));
    }
    Ok(out)
}

pub fn parse_key(text: &str) -> Result<KeyMaterial> {
    let (header, rest) = text
        .split_once('\n')
        .ok_or_else(|| Error::parse(text.len(), "missing header line"))?;
    let header = header.trim_end_matches('\r');
    let private = match header {
        PUBLIC_HEADER => false,
        PRIVATE_HEADER => true,
        h if h.starts_with("paillier-public-") || h.starts_with("paillier-private-") => {
            return Err(Error::parse(0, format!("unknown key file version '{h}'")));
        }
        _ => return Err(Error::parse(0, "unrecognized key file header")),
    };

    let body_start = text.len() - rest.len();
    let mut compact = Vec::with_capacity(rest.len());
    let mut origin = Vec::with_capacity(rest.len());
    for (i, b) in rest.bytes().enumerate() {
        if !b.is_ascii_whitespace() {
            compact.push(b);
            origin.push(body_start + i);
        }
    }
    let body = STANDARD.decode(&compact).map_err(|e| {
        let at = match e {
            base64::DecodeError::InvalidByte(i, _) | base64::DecodeError::InvalidLastSymbol(i, _) => {
                origin.get(i).copied().unwrap_or(text.len())
            }
            _ => text.len(),
        };
        Error::parse(at, format!("invalid base64: {e}"))
    })?;

    if private {
        let f = read_fields(&body, 6)?;
        let [n, g, p, q, lambda, mu]: [BigUint; 6] = f.try_into().expect("six fields");
        Ok(KeyMaterial::Private(PrivateKey::from_stored(n, g, p, q, lambda, mu)?))
    } else {
        let f = read_fields(&body, 2)?;
        let [n, g]: [BigUint; 2] = f.try_into().expect("two fields");
        Ok(KeyMaterial::Public(PublicKey::new(n, g)?))
    }
}

pub fn parse_public(text: &str) -> Result<PublicKey> {
    Ok(parse_key(text)?.public().clone())
}

pub fn parse_private(text: &str) -> Result<PrivateKey> {
    match parse_key(text)? {
        KeyMaterial::Private(sk) => Ok(sk),
        KeyMaterial::Public(_) => Err(Error::parse(0, "expected a private key file")),
    }
}

pub fn write_public(path: &Path, pk: &PublicKey) -> Result<()> {
    std::fs::write(path, serialize_public(pk))?;
    Ok(())
}

/// Writes a private key, readable by the owner only on Unix.
pub fn write_private(path: &Path, sk: &PrivateKey) -> Result<()> {
    use std::io::Write;
    let mut opts = std::fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut f = opts.open(path)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        f.set_permissions(std::fs::Permissions::from_mode(0o600))?;
    }
    f.write_all(serialize_private(sk).as_bytes())?;
    Ok(())
}

pub fn read_key(path: &Path) -> Result<KeyMaterial> {
    parse_key(&std::fs::read_to_string(path)?)
}

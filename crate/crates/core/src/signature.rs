//! Paillier signatures and their blind variant.
//!
//! A signature on a unit `m` of `Z*_{n^2}` is the pair `(s1, s2)` with
//! `m = g^s1 s2^n mod n^2`. A provider blinds `m` as `M = m x^n`; the signer's
//! signature `(s1, s2)` on `M` becomes `(s1, s2 x^-1 mod n)` on `m`.
//!
//! Blinding hides only the second component: `s1` of `M` equals `s1` of `m`,
//! so the signer learns the class of the message it signs.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numtheory::{gcd, mod_inv, random_unit};
use crate::paillier::{PrivateKey, PublicKey};

/// Rehash attempts before giving up on finding a unit digest.
pub const HASH_COUNTER_LIMIT: u32 = 256;

const HASH_DOMAIN: &[u8] = b"paillier3p/sign/v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub s1: BigUint,
    pub s2: BigUint,
}

/// Blinding factor `x` and its inverse mod `n`. Cleared on drop.
#[derive(Clone)]
pub struct BlindingSecret {
    x: BigUint,
    x_inv: BigUint,
}

impl BlindingSecret {
    pub fn new(x: BigUint, n: &BigUint) -> Result<Self> {
        let x_inv = mod_inv(&x, n)?;
        if x.is_zero() {
            return Err(Error::NotInvertible);
        }
        Ok(BlindingSecret { x, x_inv })
    }

    pub fn x(&self) -> &BigUint {
        &self.x
    }

    pub fn x_inv(&self) -> &BigUint {
        &self.x_inv
    }
}

impl Drop for BlindingSecret {
    fn drop(&mut self) {
        self.x.set_zero();
        self.x_inv.set_zero();
    }
}

impl std::fmt::Debug for BlindingSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BlindingSecret(..)")
    }
}

/// Supported message digests for hash-then-sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashId {
    /// SHA-256 in counter mode, expanded to `2 bitlen(n)` bits.
    #[default]
    Sha256Counter,
}

impl std::str::FromStr for HashId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sha256" | "sha256-ctr" => Ok(HashId::Sha256Counter),
            other => Err(Error::domain(format!("unsupported hash '{other}'"))),
        }
    }
}

fn unit_mod_n_squared(pk: &PublicKey, m: &BigUint) -> bool {
    pk.is_unit(m)
}

pub fn sign_raw(sk: &PrivateKey, m: &BigUint) -> Result<Signature> {
    let pk = sk.public();
    if !unit_mod_n_squared(pk, m) {
        return Err(Error::NotSignable);
    }
    let s1 = sk.class_under_g(m)?;
    let residue = m * sk.g_pow_neg(&s1)? % pk.n_squared();
    let s2 = (residue % pk.n()).modpow(sk.root_exponent(), pk.n());
    Ok(Signature { s1, s2 })
}

/// Checks `m == g^s1 s2^n mod n^2`. Out-of-range inputs verify as false.
pub fn verify(pk: &PublicKey, m: &BigUint, sig: &Signature) -> bool {
    if sig.s1 >= *pk.n() || sig.s2 >= *pk.n() || *m >= *pk.n_squared() {
        return false;
    }
    let rhs = pk.g().modpow(&sig.s1, pk.n_squared()) * sig.s2.modpow(pk.n(), pk.n_squared())
        % pk.n_squared();
    rhs == *m
}

/// Maps a byte string into `Z*_{n^2}`.
pub fn hash_to_signable(pk: &PublicKey, message: &[u8], hash: HashId) -> Result<BigUint> {
    let HashId::Sha256Counter = hash;
    let out_bits = 2 * pk.n().bits();
    let out_len = out_bits.div_ceil(8) as usize;
    let excess = (out_len as u64 * 8 - out_bits) as u32;

    for counter in 0..HASH_COUNTER_LIMIT {
        let mut buf = Vec::with_capacity(out_len + 32);
        let mut block = 0u32;
        while buf.len() < out_len {
            let mut h = Sha256::new();
            h.update(HASH_DOMAIN);
            h.update(counter.to_be_bytes());
            h.update(block.to_be_bytes());
            h.update(message);
            buf.extend_from_slice(&h.finalize());
            block += 1;
        }
        buf.truncate(out_len);
        if let Some(first) = buf.first_mut() {
            *first &= 0xffu8 >> excess;
        }
        let v = BigUint::from_bytes_be(&buf) % pk.n_squared();
        if unit_mod_n_squared(pk, &v) {
            return Ok(v);
        }
    }
    Err(Error::Internal(format!(
        "no unit digest after {HASH_COUNTER_LIMIT} counters"
    )))
}

/// Hash-then-sign with the default digest.
pub fn sign(sk: &PrivateKey, message: &[u8]) -> Result<Signature> {
    let m = hash_to_signable(sk.public(), message, HashId::default())?;
    sign_raw(sk, &m)
}

pub fn verify_message(pk: &PublicKey, message: &[u8], sig: &Signature) -> bool {
    match hash_to_signable(pk, message, HashId::default()) {
        Ok(m) => verify(pk, &m, sig),
        Err(_) => false,
    }
}

/// `M = m x^n mod n^2` for a fresh unit `x`.
pub fn blind<R: RngCore + ?Sized>(
    pk: &PublicKey,
    m: &BigUint,
    rng: &mut R,
) -> Result<(BigUint, BlindingSecret)> {
    if !unit_mod_n_squared(pk, m) {
        return Err(Error::NotSignable);
    }
    let x = random_unit(pk.n(), rng)?;
    blind_with(pk, m, x)
}

/// Deterministic blinding with a caller-chosen unit `x`.
pub fn blind_with(pk: &PublicKey, m: &BigUint, x: BigUint) -> Result<(BigUint, BlindingSecret)> {
    if !unit_mod_n_squared(pk, m) {
        return Err(Error::NotSignable);
    }
    if !gcd(&x, pk.n()).is_one() {
        return Err(Error::NotInvertible);
    }
    let secret = BlindingSecret::new(x, pk.n())?;
    let blinded = m * secret.x.modpow(pk.n(), pk.n_squared()) % pk.n_squared();
    Ok((blinded, secret))
}

/// `(s1, s2 x^-1 mod n)`. Needs only the public modulus.
pub fn unblind(sig_blinded: &Signature, secret: &BlindingSecret, n: &BigUint) -> Signature {
    Signature {
        s1: sig_blinded.s1.clone(),
        s2: &sig_blinded.s2 * &secret.x_inv % n,
    }
}

//! Deterministic trapdoor permutation on `Z_{n^2}`.
//!
//! A message `m = m2 n + m1` maps to `g^m1 m2^n mod n^2`. Only messages with
//! `m2 >= 1` and `gcd(m2, n) = 1` are in the domain, so every `m < n` is
//! rejected.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Inadmissibility, Result};
use crate::numtheory::gcd;
use crate::paillier::{Ciphertext, PrivateKey, PublicKey};

/// The n-adic split `value = high n + low`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WideMessage {
    pub value: BigUint,
    /// `m mod n`
    pub low: BigUint,
    /// `m div n`
    pub high: BigUint,
    pub admissibility: std::result::Result<(), Inadmissibility>,
}

impl WideMessage {
    pub fn is_admissible(&self) -> bool {
        self.admissibility.is_ok()
    }
}

pub fn decompose(m: &BigUint, n: &BigUint) -> Result<WideMessage> {
    if n.is_zero() {
        return Err(Error::domain("modulus is zero"));
    }
    if *m >= n * n {
        return Err(Error::domain("message must be below n^2"));
    }
    let (high, low) = m.div_rem(n);
    let admissibility = if high.is_zero() {
        Err(Inadmissibility::HighPartZero)
    } else if !gcd(&high, n).is_one() {
        Err(Inadmissibility::HighPartNotUnit)
    } else {
        Ok(())
    };
    Ok(WideMessage {
        value: m.clone(),
        low,
        high,
        admissibility,
    })
}

pub fn tp_encrypt(pk: &PublicKey, m: &BigUint) -> Result<Ciphertext> {
    let parts = decompose(m, pk.n())?;
    parts.admissibility.map_err(Error::InadmissibleMessage)?;
    let v = pk.g().modpow(&parts.low, pk.n_squared())
        * parts.high.modpow(pk.n(), pk.n_squared())
        % pk.n_squared();
    Ciphertext::new(pk, v)
}

pub fn tp_decrypt(sk: &PrivateKey, c: &Ciphertext) -> Result<BigUint> {
    let pk = sk.public();
    // step 1: the class of c is the low digit
    let low = sk.decrypt(c)?.0;
    // step 2: residue c g^-low, reduced mod n
    let z = c.value() * sk.g_pow_neg(&low)? % pk.n_squared() % pk.n();
    // step 3: principal n-th root
    let high = z.modpow(sk.root_exponent(), pk.n());
    if high.is_zero() || !gcd(&high, pk.n()).is_one() {
        return Err(Error::MalformedCiphertext(
            "recovered high digit is not a unit mod n".into(),
        ));
    }
    // step 4
    Ok(high * pk.n() + low)
}

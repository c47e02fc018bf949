//! The probabilistic Paillier scheme: keys, encryption, decryption, the
//! residue-class algebra behind decryption and the homomorphic operations.

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numtheory::{self, gcd, l_function, mod_inv, random_unit, KEYGEN_MR_ROUNDS};

/// Attempts allowed when drawing a random residue base.
pub const RANDOM_BASE_ATTEMPTS: usize = 128;

/// How the residue base `g` is picked at key generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaseStrategy {
    /// `g = n + 1`, always a valid base.
    #[default]
    SafeDefault,
    /// `g` drawn uniformly from `Z*_{n^2}` until it validates.
    Random,
}

/// Truncated SHA-256 of the modulus, used to tag ciphertexts.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyFingerprint([u8; 16]);

impl KeyFingerprint {
    pub fn of_modulus(n: &BigUint) -> Self {
        let digest = Sha256::digest(n.to_bytes_be());
        let mut out = [0u8; 16];
        out.copy_from_slice(&digest[..16]);
        KeyFingerprint(out)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl fmt::Debug for KeyFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("KeyFingerprint(")?;
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    n_squared: BigUint,
    g: BigUint,
    // g = n + 1, which has order n and a closed-form power
    simple_base: bool,
    fingerprint: KeyFingerprint,
}

#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    p: BigUint,
    q: BigUint,
    lambda: BigUint,
    mu: BigUint,
    // 1/n mod lambda, the exponent that extracts principal n-th roots
    root_exp: BigUint,
    public: PublicKey,
}

/// An element of `Z_n`. Range is checked against a key when used.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Plaintext(pub BigUint);

impl From<BigUint> for Plaintext {
    fn from(v: BigUint) -> Self {
        Plaintext(v)
    }
}

impl From<u64> for Plaintext {
    fn from(v: u64) -> Self {
        Plaintext(BigUint::from(v))
    }
}

/// A unit of `Z*_{n^2}` bound to the key that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    value: BigUint,
    fingerprint: KeyFingerprint,
}

impl Ciphertext {
    /// Wraps a raw value, checking `0 < value < n^2` and `gcd(value, n^2) = 1`.
    pub fn new(pk: &PublicKey, value: BigUint) -> Result<Self> {
        if value.is_zero() || value >= pk.n_squared {
            return Err(Error::MalformedCiphertext("value outside (0, n^2)".into()));
        }
        if !gcd(&value, &pk.n).is_one() {
            return Err(Error::MalformedCiphertext("value is not a unit mod n^2".into()));
        }
        Ok(Ciphertext {
            value,
            fingerprint: pk.fingerprint,
        })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn fingerprint(&self) -> KeyFingerprint {
        self.fingerprint
    }

    pub fn into_value(self) -> BigUint {
        self.value
    }
}

/// Randomness for self-blinding a ciphertext.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RerandomizeMode {
    /// Multiply by `x^n` for a fresh unit `x`.
    UnitPower,
    /// Multiply by `g^(n r)` for a fresh `r`.
    BasePower,
}

/// `gcd(L(g^lambda mod n^2), n) == 1`.
pub fn validate_residue_base(g: &BigUint, n: &BigUint, lambda: &BigUint) -> Result<bool> {
    let n_squared = n * n;
    if g.is_zero() || *g >= n_squared || !gcd(g, n).is_one() {
        return Err(Error::domain("residue base is not a unit mod n^2"));
    }
    let u = numtheory::mod_pow(g, lambda, &n_squared)?;
    let l = l_function(&u, n)?;
    Ok(gcd(&l, n).is_one())
}

/// Generates a key with two distinct `prime_bits`-bit primes.
pub fn keygen<R: RngCore + ?Sized>(
    prime_bits: u64,
    strategy: BaseStrategy,
    rng: &mut R,
) -> Result<PrivateKey> {
    if prime_bits < 4 {
        return Err(Error::domain("primes must have at least 4 bits"));
    }
    loop {
        let p = numtheory::gen_prime(prime_bits, rng)?;
        let q = numtheory::gen_prime(prime_bits, rng)?;
        if p == q {
            continue;
        }
        let n = &p * &q;
        let lambda = numtheory::lcm(&(&p - 1u8), &(&q - 1u8))?;
        if !gcd(&n, &lambda).is_one() {
            continue;
        }
        let g = match strategy {
            BaseStrategy::SafeDefault => &n + 1u8,
            BaseStrategy::Random => random_base(&n, &lambda, rng)?,
        };
        return PrivateKey::from_parts(p, q, g);
    }
}

fn random_base<R: RngCore + ?Sized>(n: &BigUint, lambda: &BigUint, rng: &mut R) -> Result<BigUint> {
    let n_squared = n * n;
    for _ in 0..RANDOM_BASE_ATTEMPTS {
        let g = random_unit(&n_squared, rng)?;
        if validate_residue_base(&g, n, lambda)? {
            return Ok(g);
        }
    }
    Err(Error::Internal(format!(
        "no valid residue base after {RANDOM_BASE_ATTEMPTS} draws"
    )))
}

impl PublicKey {
    /// Builds a public key from `(n, g)` without access to the factorization.
    ///
    /// Only structural checks are possible here: `n` odd and at least 3, `g` a
    /// unit below `n^2`.
    pub fn new(n: BigUint, g: BigUint) -> Result<Self> {
        if n < BigUint::from(3u8) || n.is_even() {
            return Err(Error::domain("modulus must be odd and at least 3"));
        }
        let n_squared = &n * &n;
        if g.is_zero() || g >= n_squared || !gcd(&g, &n).is_one() {
            return Err(Error::domain("residue base is not a unit mod n^2"));
        }
        let fingerprint = KeyFingerprint::of_modulus(&n);
        let simple_base = g == &n + 1u8;
        Ok(PublicKey {
            n,
            n_squared,
            g,
            simple_base,
            fingerprint,
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn fingerprint(&self) -> KeyFingerprint {
        self.fingerprint
    }

    /// `g^k mod n^2`; for `g = n + 1` this is `1 + k n`.
    pub(crate) fn g_pow(&self, k: &BigUint) -> BigUint {
        if self.simple_base {
            (k % &self.n * &self.n + 1u8) % &self.n_squared
        } else {
            self.g.modpow(k, &self.n_squared)
        }
    }

    fn check(&self, c: &Ciphertext) -> Result<()> {
        if c.fingerprint != self.fingerprint {
            return Err(Error::KeyMismatch);
        }
        Ok(())
    }

    fn wrap(&self, value: BigUint) -> Ciphertext {
        Ciphertext {
            value,
            fingerprint: self.fingerprint,
        }
    }

    /// `g^m x^n mod n^2` with a fresh unit `x`.
    pub fn encrypt<R: RngCore + ?Sized>(&self, m: &Plaintext, rng: &mut R) -> Result<Ciphertext> {
        if m.0 >= self.n {
            return Err(Error::PlaintextOutOfRange);
        }
        let x = random_unit(&self.n, rng)?;
        self.encrypt_with_nonce(m, &x)
    }

    /// Deterministic encryption `E_g(m, x) = g^m x^n mod n^2`.
    pub fn encrypt_with_nonce(&self, m: &Plaintext, x: &BigUint) -> Result<Ciphertext> {
        if m.0 >= self.n {
            return Err(Error::PlaintextOutOfRange);
        }
        if x.is_zero() || !gcd(x, &self.n).is_one() {
            return Err(Error::NotInvertible);
        }
        let gm = self.g_pow(&m.0);
        let xn = x.modpow(&self.n, &self.n_squared);
        Ok(self.wrap(gm * xn % &self.n_squared))
    }

    /// Ciphertext of `m1 + m2 mod n`.
    pub fn add(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        self.check(c1)?;
        self.check(c2)?;
        Ok(self.wrap(&c1.value * &c2.value % &self.n_squared))
    }

    /// Ciphertext of `k m mod n`.
    pub fn scalar_mul(&self, c: &Ciphertext, k: &BigUint) -> Result<Ciphertext> {
        self.check(c)?;
        Ok(self.wrap(c.value.modpow(k, &self.n_squared)))
    }

    /// Ciphertext of `m1 + m2 mod n` for a known plaintext `m2`.
    pub fn add_plaintext(&self, c: &Ciphertext, m2: &BigUint) -> Result<Ciphertext> {
        self.check(c)?;
        if *m2 >= self.n {
            return Err(Error::PlaintextOutOfRange);
        }
        Ok(self.wrap(&c.value * self.g_pow(m2) % &self.n_squared))
    }

    pub fn rerandomize<R: RngCore + ?Sized>(
        &self,
        c: &Ciphertext,
        mode: RerandomizeMode,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        match mode {
            RerandomizeMode::UnitPower => {
                let x = random_unit(&self.n, rng)?;
                self.rerandomize_with_unit(c, &x)
            }
            RerandomizeMode::BasePower => {
                let r = rng.gen_biguint_below(&self.n);
                self.rerandomize_with_base_exponent(c, &r)
            }
        }
    }

    /// `c x^n mod n^2`.
    pub fn rerandomize_with_unit(&self, c: &Ciphertext, x: &BigUint) -> Result<Ciphertext> {
        self.check(c)?;
        if x.is_zero() || !gcd(x, &self.n).is_one() {
            return Err(Error::NotInvertible);
        }
        let xn = x.modpow(&self.n, &self.n_squared);
        Ok(self.wrap(&c.value * xn % &self.n_squared))
    }

    /// `c g^(n r) mod n^2`. An identity map when `g = n + 1`.
    pub fn rerandomize_with_base_exponent(&self, c: &Ciphertext, r: &BigUint) -> Result<Ciphertext> {
        self.check(c)?;
        let gnr = self.g_pow(&(&self.n * r));
        Ok(self.wrap(&c.value * gnr % &self.n_squared))
    }

    /// Is `w` a unit of `Z*_{n^2}`?
    pub fn is_unit(&self, w: &BigUint) -> bool {
        !w.is_zero() && *w < self.n_squared && gcd(w, &self.n).is_one()
    }
}

impl PrivateKey {
    /// Assembles a key from explicit primes and residue base, checking every
    /// invariant. Small primes are accepted, which makes the `n = 15` toy key
    /// available.
    pub fn from_parts(p: BigUint, q: BigUint, g: BigUint) -> Result<Self> {
        if p == q {
            return Err(Error::domain("p and q must differ"));
        }
        for f in [&p, &q] {
            if !numtheory::is_probable_prime(f, KEYGEN_MR_ROUNDS) {
                return Err(Error::domain("key factor is not prime"));
            }
        }
        let n = &p * &q;
        let lambda = numtheory::lcm(&(&p - 1u8), &(&q - 1u8))?;
        let root_exp = mod_inv(&(&n % &lambda), &lambda)
            .map_err(|_| Error::domain("gcd(n, lambda) != 1"))?;
        let public = PublicKey::new(n, g)?;
        if !validate_residue_base(&public.g, &public.n, &lambda)? {
            return Err(Error::domain("g fails the residue base check"));
        }
        let u = public.g.modpow(&lambda, &public.n_squared);
        let mu = mod_inv(&l_function(&u, &public.n)?, &public.n)?;
        Ok(PrivateKey {
            p,
            q,
            lambda,
            mu,
            root_exp,
            public,
        })
    }

    /// Rebuilds a key from stored components and checks they agree with a
    /// fresh derivation.
    pub fn from_stored(
        n: BigUint,
        g: BigUint,
        p: BigUint,
        q: BigUint,
        lambda: BigUint,
        mu: BigUint,
    ) -> Result<Self> {
        let key = Self::from_parts(p, q, g)?;
        if key.public.n != n {
            return Err(Error::domain("n != p q"));
        }
        if key.lambda != lambda {
            return Err(Error::domain("lambda != lcm(p-1, q-1)"));
        }
        let u = key.public.g.modpow(&lambda, &key.public.n_squared);
        let check = &mu * l_function(&u, &key.public.n)? % &key.public.n;
        if !check.is_one() || key.mu != mu {
            return Err(Error::domain("mu L(g^lambda) != 1 mod n"));
        }
        Ok(key)
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    /// `1/n mod lambda`.
    pub fn root_exponent(&self) -> &BigUint {
        &self.root_exp
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<Plaintext> {
        self.public.check(c)?;
        if !self.public.is_unit(&c.value) {
            return Err(Error::MalformedCiphertext("value is not a unit mod n^2".into()));
        }
        Ok(Plaintext(self.class_under_g(&c.value)?))
    }

    /// `L(w^lambda mod n^2) mu mod n` for a unit `w`.
    pub(crate) fn class_under_g(&self, w: &BigUint) -> Result<BigUint> {
        let pk = &self.public;
        let u = w.modpow(&self.lambda, &pk.n_squared);
        Ok(l_function(&u, &pk.n)? * &self.mu % &pk.n)
    }

    /// The n-residue class `[[w]]_base`.
    pub fn extract_class(&self, w: &BigUint, base: &BigUint) -> Result<BigUint> {
        let pk = &self.public;
        if !pk.is_unit(w) {
            return Err(Error::domain("w is not a unit mod n^2"));
        }
        if !validate_residue_base(base, &pk.n, &self.lambda)? {
            return Err(Error::domain("invalid residue base"));
        }
        let lw = l_function(&w.modpow(&self.lambda, &pk.n_squared), &pk.n)?;
        let lb = l_function(&base.modpow(&self.lambda, &pk.n_squared), &pk.n)?;
        Ok(lw * mod_inv(&lb, &pk.n)? % &pk.n)
    }

    /// The n-residue `w g^(-[[w]]_g) mod n^2`.
    pub fn extract_residue(&self, w: &BigUint) -> Result<BigUint> {
        let pk = &self.public;
        if !pk.is_unit(w) {
            return Err(Error::domain("w is not a unit mod n^2"));
        }
        let class = self.class_under_g(w)?;
        Ok(w * self.g_pow_neg(&class)? % &pk.n_squared)
    }

    /// `g^(-k) mod n^2`.
    pub(crate) fn g_pow_neg(&self, k: &BigUint) -> Result<BigUint> {
        let pk = &self.public;
        if pk.simple_base {
            return Ok(pk.g_pow(&(&pk.n - k % &pk.n)));
        }
        mod_inv(&pk.g.modpow(k, &pk.n_squared), &pk.n_squared)
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrivateKey")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl Drop for PrivateKey {
    fn drop(&mut self) {
        for v in [&mut self.p, &mut self.q, &mut self.lambda, &mut self.mu, &mut self.root_exp] {
            v.set_zero();
        }
    }
}

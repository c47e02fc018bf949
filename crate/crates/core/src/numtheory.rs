//! Arbitrary-precision number theory used by every scheme in the crate.
//!
//! Nothing in here is constant-time. Randomness is always supplied by the
//! caller through an [`RngCore`]; [`RandomSource`] is the stock choice.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Miller–Rabin rounds used during key generation.
pub const KEYGEN_MR_ROUNDS: usize = 40;
/// Miller–Rabin rounds for general-purpose checks.
pub const DEFAULT_MR_ROUNDS: usize = 20;

/// Seedable ChaCha20 stream. Reproducible under a fixed seed.
#[derive(Debug, Clone)]
pub struct RandomSource(ChaCha20Rng);

impl RandomSource {
    pub fn seeded(seed: u64) -> Self {
        RandomSource(ChaCha20Rng::seed_from_u64(seed))
    }

    pub fn from_entropy() -> Self {
        RandomSource(ChaCha20Rng::from_entropy())
    }
}

impl Default for RandomSource {
    fn default() -> Self {
        Self::from_entropy()
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

impl CryptoRng for RandomSource {}

fn check_modulus(modulus: &BigUint) -> Result<()> {
    if *modulus < BigUint::from(2u8) {
        return Err(Error::domain("modulus must be at least 2"));
    }
    Ok(())
}

pub fn mod_pow(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    check_modulus(modulus)?;
    Ok(base.modpow(exp, modulus))
}

/// Multiplicative inverse of `a` modulo `modulus`.
pub fn mod_inv(a: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    check_modulus(modulus)?;
    a.modinv(modulus).ok_or(Error::NotInvertible)
}

pub fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    a.gcd(b)
}

pub fn lcm(a: &BigUint, b: &BigUint) -> Result<BigUint> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::domain("lcm(0, 0) is undefined"));
    }
    Ok(a.lcm(b))
}

/// `L(u) = (u - 1) / n`, defined only on `u ≡ 1 (mod n)`.
pub fn l_function(u: &BigUint, n: &BigUint) -> Result<BigUint> {
    if n.is_zero() {
        return Err(Error::domain("L-function with n = 0"));
    }
    if u.is_zero() {
        return Err(Error::domain("L-function argument must be positive"));
    }
    let (quot, rem) = (u - 1u8).div_rem(n);
    if !rem.is_zero() {
        return Err(Error::domain("L-function argument is not congruent to 1 mod n"));
    }
    Ok(quot)
}

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Miller–Rabin with `rounds` witnesses.
///
/// Witnesses are drawn from a ChaCha stream keyed by a hash of the candidate,
/// so the answer is a pure function of the inputs.
pub fn is_probable_prime(candidate: &BigUint, rounds: usize) -> bool {
    let rounds = rounds.max(1);
    let two = BigUint::from(2u8);
    if *candidate < two {
        return false;
    }
    for &p in SMALL_PRIMES.iter() {
        let p = BigUint::from(p);
        if *candidate == p {
            return true;
        }
        if (candidate % &p).is_zero() {
            return false;
        }
    }

    let n_minus_one = candidate - 1u8;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;

    let mut seed = [0u8; 32];
    seed.copy_from_slice(&Sha256::digest(candidate.to_bytes_be()));
    let mut witnesses = ChaCha20Rng::from_seed(seed);

    'witness: for _ in 0..rounds {
        let a = witnesses.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, candidate);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % candidate;
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

/// Random probable prime with exactly `bits` bits.
pub fn gen_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint> {
    if bits < 2 {
        return Err(Error::domain("prime bit length must be at least 2"));
    }
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        if bits > 2 {
            candidate.set_bit(0, true);
        }
        if is_probable_prime(&candidate, KEYGEN_MR_ROUNDS) {
            return Ok(candidate);
        }
    }
}

/// Uniform draw from `Z*_modulus` by rejection sampling over `[1, modulus)`.
pub fn random_unit<R: RngCore + ?Sized>(modulus: &BigUint, rng: &mut R) -> Result<BigUint> {
    check_modulus(modulus)?;
    let one = BigUint::one();
    loop {
        let v = rng.gen_biguint_range(&one, modulus);
        if v.gcd(modulus).is_one() {
            return Ok(v);
        }
    }
}

/// Canonical big-endian bytes; zero encodes as the empty slice.
pub fn to_canonical_bytes(v: &BigUint) -> Vec<u8> {
    if v.is_zero() {
        Vec::new()
    } else {
        v.to_bytes_be()
    }
}

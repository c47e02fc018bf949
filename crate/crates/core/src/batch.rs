//! Data-parallel batch operations.
//!
//! With the `parallel` feature (on by default) the per-item work runs on the
//! rayon pool; without it the same functions run sequentially. The
//! [`sequential`] module is always available for comparison.
//!
//! Randomness is drawn up front on the calling thread, so results are
//! identical in both modes for the same generator state.

use num_bigint::BigUint;
use rand::RngCore;

use crate::error::Result;
use crate::numtheory::random_unit;
use crate::paillier::{Ciphertext, Plaintext, PrivateKey, PublicKey};
use crate::signature::{self, Signature};

#[cfg(feature = "parallel")]
fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

fn draw_nonces<R: RngCore + ?Sized>(pk: &PublicKey, count: usize, rng: &mut R) -> Result<Vec<BigUint>> {
    (0..count).map(|_| random_unit(pk.n(), rng)).collect()
}

pub fn encrypt_many<R: RngCore + ?Sized>(
    pk: &PublicKey,
    msgs: &[Plaintext],
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    let nonces = draw_nonces(pk, msgs.len(), rng)?;
    let jobs: Vec<_> = msgs.iter().zip(&nonces).collect();
    map(&jobs, |(m, x)| pk.encrypt_with_nonce(m, x)).into_iter().collect()
}

pub fn decrypt_many(sk: &PrivateKey, cts: &[Ciphertext]) -> Result<Vec<Plaintext>> {
    map(cts, |c| sk.decrypt(c)).into_iter().collect()
}

pub fn sign_raw_many(sk: &PrivateKey, msgs: &[BigUint]) -> Result<Vec<Signature>> {
    map(msgs, |m| signature::sign_raw(sk, m)).into_iter().collect()
}

pub fn verify_many(pk: &PublicKey, items: &[(BigUint, Signature)]) -> Vec<bool> {
    map(items, |(m, s)| signature::verify(pk, m, s))
}

/// Single-threaded versions of the batch operations.
pub mod sequential {
    use super::*;

    pub fn encrypt_many<R: RngCore + ?Sized>(
        pk: &PublicKey,
        msgs: &[Plaintext],
        rng: &mut R,
    ) -> Result<Vec<Ciphertext>> {
        let nonces = draw_nonces(pk, msgs.len(), rng)?;
        msgs.iter()
            .zip(&nonces)
            .map(|(m, x)| pk.encrypt_with_nonce(m, x))
            .collect()
    }

    pub fn decrypt_many(sk: &PrivateKey, cts: &[Ciphertext]) -> Result<Vec<Plaintext>> {
        cts.iter().map(|c| sk.decrypt(c)).collect()
    }

    pub fn sign_raw_many(sk: &PrivateKey, msgs: &[BigUint]) -> Result<Vec<Signature>> {
        msgs.iter().map(|m| signature::sign_raw(sk, m)).collect()
    }

    pub fn verify_many(pk: &PublicKey, items: &[(BigUint, Signature)]) -> Vec<bool> {
        items.iter().map(|(m, s)| signature::verify(pk, m, s)).collect()
    }
}

//! Paillier cryptosystem with two constructions on top: blind signatures and
//! a homomorphic three-pass (no-key) transfer protocol.
//!
//! * [`numtheory`]: modular arithmetic, primality, seeded randomness.
//! * [`paillier`]: keys, encryption, decryption, homomorphic operations.
//! * [`trapdoor`]: the deterministic trapdoor permutation on `Z_{n^2}`.
//! * [`signature`]: signatures, hash-then-sign, blinding.
//! * [`threepass`]: Paillier and Shamir three-pass state machines.
//! * [`wire`], [`keyfile`], [`transport`]: frame and key formats, stream runner.
//! * [`batch`]: data-parallel batch operations.
//!
//! Arithmetic is not constant-time.

pub mod batch;
pub mod error;
pub mod keyfile;
pub mod numtheory;
pub mod paillier;
pub mod signature;
pub mod threepass;
pub mod transport;
pub mod trapdoor;
pub mod wire;

pub use error::{Error, Inadmissibility, ProtocolFault, Result};
pub use numtheory::RandomSource;
pub use paillier::{keygen, BaseStrategy, Ciphertext, Plaintext, PrivateKey, PublicKey, RerandomizeMode};
pub use signature::{BlindingSecret, Signature};
pub use threepass::{PaillierInitiatorSession, PaillierResponderSession, ResponderMode, ShamirParty};
pub use num_bigint::BigUint;

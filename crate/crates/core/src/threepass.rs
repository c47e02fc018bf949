//! Three-pass (no-key) message transfer.
//!
//! Two variants live here:
//!
//! * the Paillier variant, where only the initiator holds a key. The responder
//!   raises `M1 = E(m1)` to a secret unit `m2`, the initiator decrypts to
//!   `m1 m2 mod n`, and the responder divides `m2` back out;
//! * Shamir's exponentiation variant over a shared public prime.
//!
//! Neither variant authenticates its peer. An active attacker who can
//! replace messages defeats both.
//!
//! The Paillier sessions are explicit state machines. Every step checks the
//! current state and fails with [`Error::ProtocolOrderViolation`] when called
//! out of order or twice.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::numtheory::{gcd, is_probable_prime, mod_inv, random_unit, DEFAULT_MR_ROUNDS};
use crate::paillier::{Ciphertext, Plaintext, PrivateKey, PublicKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitiatorState {
    Created,
    SentM1,
    SentM3,
    Done,
}

impl InitiatorState {
    fn name(self) -> &'static str {
        match self {
            InitiatorState::Created => "CREATED",
            InitiatorState::SentM1 => "SENT_M1",
            InitiatorState::SentM3 => "SENT_M3",
            InitiatorState::Done => "DONE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponderState {
    Created,
    SentM2,
    Done,
}

impl ResponderState {
    fn name(self) -> &'static str {
        match self {
            ResponderState::Created => "CREATED",
            ResponderState::SentM2 => "SENT_M2",
            ResponderState::Done => "DONE",
        }
    }
}

/// The sending party. Holds the key pair and the message.
#[derive(Debug)]
pub struct PaillierInitiatorSession {
    sk: PrivateKey,
    m1: Plaintext,
    state: InitiatorState,
}

impl PaillierInitiatorSession {
    pub fn new(sk: PrivateKey, m1: Plaintext) -> Result<Self> {
        if m1.0 >= *sk.public().n() {
            return Err(Error::PlaintextOutOfRange);
        }
        Ok(PaillierInitiatorSession {
            sk,
            m1,
            state: InitiatorState::Created,
        })
    }

    pub fn state(&self) -> InitiatorState {
        self.state
    }

    pub fn public(&self) -> &PublicKey {
        self.sk.public()
    }

    fn expect(&self, want: InitiatorState, step: &'static str) -> Result<()> {
        if self.state != want {
            return Err(Error::ProtocolOrderViolation {
                step,
                state: self.state.name(),
            });
        }
        Ok(())
    }

    /// Step 1: `M1 = g^m1 y^n mod n^2` for a fresh unit `y`.
    pub fn send_m1<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<BigUint> {
        self.expect(InitiatorState::Created, "send_m1")?;
        let y = random_unit(self.sk.public().n(), rng)?;
        self.send_m1_with_nonce(&y)
    }

    pub fn send_m1_with_nonce(&mut self, y: &BigUint) -> Result<BigUint> {
        self.expect(InitiatorState::Created, "send_m1")?;
        let c = self.sk.public().encrypt_with_nonce(&self.m1, y)?;
        self.state = InitiatorState::SentM1;
        Ok(c.into_value())
    }

    /// Step 3: `M3 = D(M2) = m1 m2 mod n`.
    pub fn reveal(&mut self, m2_msg: &BigUint) -> Result<BigUint> {
        self.expect(InitiatorState::SentM1, "reveal")?;
        let c = Ciphertext::new(self.sk.public(), m2_msg.clone())
            .map_err(|_| Error::MalformedMessage("M2 is not a unit mod n^2".into()))?;
        let m3 = self.sk.decrypt(&c)?;
        self.state = InitiatorState::SentM3;
        Ok(m3.0)
    }

    /// Marks the exchange complete once `M3` is on the wire.
    pub fn finish(&mut self) -> Result<()> {
        self.expect(InitiatorState::SentM3, "finish")?;
        self.state = InitiatorState::Done;
        Ok(())
    }
}

/// How the responder picks its secret multiplier `m2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponderMode {
    /// `m2 = x^n mod n` for a unit `x`; drawn at step 2 when `root` is `None`.
    Hardened { root: Option<BigUint> },
    /// A unit `m2 < n` used directly; drawn at step 2 when `None`.
    Plain { m2: Option<BigUint> },
}

impl Default for ResponderMode {
    fn default() -> Self {
        ResponderMode::Hardened { root: None }
    }
}

/// The receiving party. Knows only the initiator's public key.
#[derive(Debug)]
pub struct PaillierResponderSession {
    pk: PublicKey,
    mode: ResponderMode,
    m2: BigUint,
    m2_inv: BigUint,
    root: Option<BigUint>,
    state: ResponderState,
}

impl PaillierResponderSession {
    pub fn new(pk: PublicKey, mode: ResponderMode) -> Result<Self> {
        let n = pk.n();
        let check = |v: &BigUint, what: &str| -> Result<()> {
            if v.is_zero() || v >= n || !gcd(v, n).is_one() {
                return Err(Error::domain(format!("{what} must be a unit below n")));
            }
            Ok(())
        };
        match &mode {
            ResponderMode::Hardened { root: Some(x) } => check(x, "blinding root")?,
            ResponderMode::Plain { m2: Some(m2) } => check(m2, "m2")?,
            _ => {}
        }
        Ok(PaillierResponderSession {
            pk,
            mode,
            m2: BigUint::zero(),
            m2_inv: BigUint::zero(),
            root: None,
            state: ResponderState::Created,
        })
    }

    pub fn hardened(pk: PublicKey) -> Self {
        Self::new(pk, ResponderMode::default()).expect("no preset values to validate")
    }

    pub fn state(&self) -> ResponderState {
        self.state
    }

    pub fn is_hardened(&self) -> bool {
        matches!(self.mode, ResponderMode::Hardened { .. })
    }

    /// The multiplier in use; zero before step 2.
    pub fn m2(&self) -> &BigUint {
        &self.m2
    }

    fn expect(&self, want: ResponderState, step: &'static str) -> Result<()> {
        if self.state != want {
            return Err(Error::ProtocolOrderViolation {
                step,
                state: self.state.name(),
            });
        }
        Ok(())
    }

    /// Step 2: `M2 = M1^m2 mod n^2`.
    pub fn respond<R: RngCore + ?Sized>(&mut self, m1_msg: &BigUint, rng: &mut R) -> Result<BigUint> {
        self.expect(ResponderState::Created, "respond")?;
        if !self.pk.is_unit(m1_msg) {
            return Err(Error::MalformedMessage("M1 is not a unit mod n^2".into()));
        }
        let n = self.pk.n();
        let m2 = match &self.mode {
            ResponderMode::Hardened { root } => {
                let x = match root {
                    Some(x) => x.clone(),
                    None => random_unit(n, rng)?,
                };
                let m2 = x.modpow(n, n);
                self.root = Some(x);
                m2
            }
            ResponderMode::Plain { m2: Some(m2) } => m2.clone(),
            ResponderMode::Plain { m2: None } => random_unit(n, rng)?,
        };
        self.m2_inv = mod_inv(&m2, n)?;
        self.m2 = m2;
        self.state = ResponderState::SentM2;
        Ok(m1_msg.modpow(&self.m2, self.pk.n_squared()))
    }

    /// Step 4: `m1 = M3 m2^-1 mod n`.
    pub fn recover(&mut self, m3: &BigUint) -> Result<BigUint> {
        self.expect(ResponderState::SentM2, "recover")?;
        if m3 >= self.pk.n() {
            return Err(Error::MalformedMessage("M3 must be below n".into()));
        }
        let m1 = m3 * &self.m2_inv % self.pk.n();
        self.state = ResponderState::Done;
        self.erase();
        Ok(m1)
    }

    fn erase(&mut self) {
        if let Some(x) = self.root.as_mut() {
            x.set_zero();
        }
        self.root = None;
        if let ResponderMode::Hardened { root: Some(x) } = &mut self.mode {
            x.set_zero();
        }
    }
}

impl Drop for PaillierResponderSession {
    fn drop(&mut self) {
        self.erase();
        self.m2.set_zero();
        self.m2_inv.set_zero();
    }
}

/// One party of Shamir's protocol over the public prime `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShamirParty {
    p: BigUint,
    e: BigUint,
    d: BigUint,
}

impl ShamirParty {
    /// Uses the exponent `e`, which must be a unit mod `p - 1`.
    pub fn with_exponent(p: BigUint, e: BigUint) -> Result<Self> {
        check_shamir_prime(&p)?;
        let order = &p - 1u8;
        if e.is_zero() || e >= order {
            return Err(Error::domain("exponent must lie in [1, p - 1)"));
        }
        let d = mod_inv(&e, &order).map_err(|_| Error::domain("exponent not coprime to p - 1"))?;
        Ok(ShamirParty { p, e, d })
    }

    pub fn prime(&self) -> &BigUint {
        &self.p
    }

    pub fn encryption_exponent(&self) -> &BigUint {
        &self.e
    }

    pub fn decryption_exponent(&self) -> &BigUint {
        &self.d
    }

    /// `v^e mod p`
    pub fn lock(&self, v: &BigUint) -> BigUint {
        v.modpow(&self.e, &self.p)
    }

    /// `v^d mod p`
    pub fn unlock(&self, v: &BigUint) -> BigUint {
        v.modpow(&self.d, &self.p)
    }
}

fn check_shamir_prime(p: &BigUint) -> Result<()> {
    if *p < BigUint::from(3u8) || !is_probable_prime(p, DEFAULT_MR_ROUNDS) {
        return Err(Error::domain("Shamir modulus must be an odd prime"));
    }
    Ok(())
}

/// Draws an exponent coprime to `p - 1` and its inverse.
pub fn shamir_keygen<R: RngCore + ?Sized>(p: &BigUint, rng: &mut R) -> Result<ShamirParty> {
    check_shamir_prime(p)?;
    let order = p - 1u8;
    let e = if order == BigUint::from(2u8) {
        BigUint::one()
    } else {
        random_unit(&order, rng)?
    };
    ShamirParty::with_exponent(p.clone(), e)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShamirTranscript {
    pub m1: BigUint,
    pub m2: BigUint,
    pub m3: BigUint,
    pub recovered: BigUint,
}

/// Runs all three passes from `a` to `b` in process.
pub fn shamir_exchange(a: &ShamirParty, b: &ShamirParty, m: &BigUint) -> Result<ShamirTranscript> {
    if a.p != b.p {
        return Err(Error::domain("parties use different primes"));
    }
    if m.is_zero() || *m >= a.p {
        return Err(Error::domain("message must lie in [1, p)"));
    }
    let m1 = a.lock(m);
    let m2 = b.lock(&m1);
    let m3 = a.unlock(&m2);
    let recovered = b.unlock(&m3);
    Ok(ShamirTranscript {
        m1,
        m2,
        m3,
        recovered,
    })
}

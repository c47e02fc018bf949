//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::HashSet;
use std::net::TcpListener;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::thread;
use std::time::{Duration, Instant};

use num_bigint::{BigUint, RandBigInt};
use paillier3p::batch;
use paillier3p::numtheory::random_unit;
use paillier3p::signature::{blind_with, sign_raw, unblind, verify, Signature};
use paillier3p::threepass::{shamir_exchange, ShamirParty};
use paillier3p::transport::{self, respond_over_tcp, send_over_tcp, FrameChannel, MemoryPipe};
use paillier3p::trapdoor::{tp_decrypt, tp_encrypt};
use paillier3p::wire::{self, decode_msg, decode_msg_for, encode_msg, read_frame, Frame, HEADER_LEN, MAGIC};
use paillier3p::{
    keygen, BaseStrategy, Ciphertext, Error, PaillierInitiatorSession, PaillierResponderSession,
    Plaintext, PrivateKey, ProtocolFault, RandomSource, ResponderMode,
};
use rand::RngCore;

type Check = Result<(), String>;
type Criterion = (&'static str, &'static str, Duration, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn toy_key() -> PrivateKey {
    PrivateKey::from_parts(big(3), big(5), big(16)).unwrap()
}

fn units(n: u64) -> Vec<u64> {
    (1..n).filter(|x| num_integer::gcd(*x, n) == 1).collect()
}

/// Plain u64 arithmetic, independent of the library.
mod oracle {
    pub const N: u64 = 15;
    pub const NN: u64 = 225;
    pub const G: u64 = 16;

    pub fn pow(mut b: u64, mut e: u64, m: u64) -> u64 {
        let mut acc = 1 % m;
        b %= m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % m;
            }
            b = b * b % m;
            e >>= 1;
        }
        acc
    }

    pub fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    pub fn encrypt(m: u64, x: u64) -> u64 {
        pow(G, m, NN) * pow(x, N, NN) % NN
    }

    /// Finds the plaintext by searching every (m, x).
    pub fn brute_decrypt(c: u64) -> Option<u64> {
        (0..N).find(|&m| (1..N).any(|x| gcd(x, N) == 1 && encrypt(m, x) == c))
    }

    /// Searches for (s1, s2) in Z_n x Z_n with g^s1 s2^n = m.
    pub fn brute_sign(m: u64) -> Option<(u64, u64)> {
        (0..N)
            .flat_map(|s1| (1..N).map(move |s2| (s1, s2)))
            .find(|&(s1, s2)| pow(G, s1, NN) * pow(s2, N, NN) % NN == m)
    }

    pub fn inv(a: u64, m: u64) -> u64 {
        (1..m).find(|b| a * b % m == 1).unwrap()
    }
}

fn ac1_known_answers() -> Check {
    use oracle::*;
    // oracle values first
    let c = encrypt(7, 2);
    ensure!(c == 83, "oracle E(7;2) = {c}");
    ensure!(brute_decrypt(83) == Some(7), "oracle D(83)");
    ensure!(brute_sign(83) == Some((7, 2)), "oracle sign(83)");
    let blinded = 83 * pow(2, N, NN) % NN;
    ensure!(blinded == 169, "oracle blind");
    ensure!(brute_sign(169) == Some((7, 4)), "oracle sign(169)");
    ensure!(4 * inv(2, N) % N == 2, "oracle unblind");
    let plain_m2 = pow(83, 4, NN);
    ensure!(plain_m2 == 196 && brute_decrypt(196) == Some(13), "oracle plain chain");
    ensure!(13 * inv(4, N) % N == 7, "oracle plain recover");
    let hm2 = pow(2, N, N);
    ensure!(hm2 == 8, "oracle hardened m2");
    ensure!(pow(83, hm2, NN) == 166 && brute_decrypt(166) == Some(11), "oracle hardened chain");
    ensure!(11 * inv(8, N) % N == 7, "oracle hardened recover");

    // library against the pinned values
    let sk = toy_key();
    let pk = sk.public();
    let c = pk.encrypt_with_nonce(&Plaintext::from(7), &big(2)).map_err(|e| e.to_string())?;
    ensure!(c.value() == &big(83), "encrypt(7; x=2) = {}", c.value());
    ensure!(sk.decrypt(&c).unwrap() == Plaintext::from(7), "decrypt(83)");
    let s = sign_raw(&sk, &big(83)).unwrap();
    ensure!(s == Signature { s1: big(7), s2: big(2) }, "sign_raw(83) = {s:?}");
    ensure!(verify(pk, &big(83), &s), "verify(83, (7,2))");
    let (m_blind, secret) = blind_with(pk, &big(83), big(2)).unwrap();
    ensure!(m_blind == big(169), "blind(83; x=2) = {m_blind}");
    let sb = sign_raw(&sk, &m_blind).unwrap();
    ensure!(sb == Signature { s1: big(7), s2: big(4) }, "sign_raw(169) = {sb:?}");
    let su = unblind(&sb, &secret, pk.n());
    ensure!(su == s, "unblind = {su:?}");

    for (mode, want) in [
        (ResponderMode::Plain { m2: Some(big(4)) }, (83u64, 196u64, 13u64)),
        (ResponderMode::Hardened { root: Some(big(2)) }, (83, 166, 11)),
    ] {
        let mut rng = RandomSource::seeded(0);
        let mut a = PaillierInitiatorSession::new(toy_key(), Plaintext::from(7)).unwrap();
        let mut b = PaillierResponderSession::new(pk.clone(), mode).unwrap();
        let m1 = a.send_m1_with_nonce(&big(2)).unwrap();
        let m2 = b.respond(&m1, &mut rng).unwrap();
        let m3 = a.reveal(&m2).unwrap();
        let got = b.recover(&m3).unwrap();
        ensure!(
            (m1.clone(), m2.clone(), m3.clone()) == (big(want.0), big(want.1), big(want.2)),
            "transcript ({m1}, {m2}, {m3})"
        );
        ensure!(got == big(7), "recovered {got}");
    }
    Ok(())
}

fn ac2_exhaustive_n15() -> Check {
    let sk = toy_key();
    let pk = sk.public();
    let mut seen = HashSet::new();
    let mut by_plaintext: Vec<Vec<Ciphertext>> = vec![Vec::new(); 15];
    for m in 0..15u64 {
        for x in units(15) {
            let c = pk.encrypt_with_nonce(&Plaintext::from(m), &big(x)).unwrap();
            ensure!(c.value() == &big(oracle::encrypt(m, x)), "E({m};{x}) disagrees with oracle");
            ensure!(sk.decrypt(&c).unwrap() == Plaintext::from(m), "roundtrip m={m} x={x}");
            seen.insert(c.value().clone());
            by_plaintext[m as usize].push(c);
        }
    }
    ensure!(seen.len() == 120, "{} distinct ciphertexts", seen.len());

    for a in 0..15u64 {
        for b in 0..15u64 {
            let ca = &by_plaintext[a as usize][(a + b) as usize % 8];
            let cb = &by_plaintext[b as usize][(a * b) as usize % 8];
            let dec = |c: &Ciphertext| sk.decrypt(c).unwrap().0;
            ensure!(dec(&pk.add(ca, cb).unwrap()) == big((a + b) % 15), "add {a},{b}");
            ensure!(dec(&pk.scalar_mul(ca, &big(b)).unwrap()) == big(a * b % 15), "scalar {a},{b}");
            ensure!(dec(&pk.add_plaintext(ca, &big(b)).unwrap()) == big((a + b) % 15), "add_plain {a},{b}");
            // E(m1)^m2 is the protocol form of the scalar law
            ensure!(dec(&pk.scalar_mul(ca, &big(b)).unwrap()) == big(a * b % 15), "pow {a},{b}");
        }
    }

    for cs in &by_plaintext {
        for c in cs {
            let want = sk.decrypt(c).unwrap();
            for x in units(15) {
                let r = pk.rerandomize_with_unit(c, &big(x)).unwrap();
                ensure!(sk.decrypt(&r).unwrap() == want, "unit-power invariance");
            }
            for r in 0..15u64 {
                let r = pk.rerandomize_with_base_exponent(c, &big(r)).unwrap();
                ensure!(sk.decrypt(&r).unwrap() == want, "base-power invariance");
            }
        }
    }

    let mut rng = RandomSource::seeded(2);
    for m1 in 0..15u64 {
        for m2 in units(15) {
            let mut a = PaillierInitiatorSession::new(toy_key(), Plaintext::from(m1)).unwrap();
            let mut b = PaillierResponderSession::new(pk.clone(), ResponderMode::Plain { m2: Some(big(m2)) }).unwrap();
            let msg1 = a.send_m1(&mut rng).unwrap();
            let msg2 = b.respond(&msg1, &mut rng).unwrap();
            let msg3 = a.reveal(&msg2).unwrap();
            ensure!(msg3 == big(m1 * m2 % 15), "M3 for ({m1},{m2})");
            ensure!(b.recover(&msg3).unwrap() == big(m1), "recovery for ({m1},{m2})");
        }
        for x in units(15) {
            let mut a = PaillierInitiatorSession::new(toy_key(), Plaintext::from(m1)).unwrap();
            let mut b = PaillierResponderSession::new(pk.clone(), ResponderMode::Hardened { root: Some(big(x)) }).unwrap();
            let msg1 = a.send_m1(&mut rng).unwrap();
            let msg2 = b.respond(&msg1, &mut rng).unwrap();
            ensure!(oracle::gcd(b.m2().to_u64_digits().first().copied().unwrap_or(0), 15) == 1, "hardened m2 unit");
            let msg3 = a.reveal(&msg2).unwrap();
            ensure!(b.recover(&msg3).unwrap() == big(m1), "hardened recovery ({m1},{x})");
        }
    }
    Ok(())
}

fn ac3_trapdoor() -> Check {
    let sk = toy_key();
    let pk = sk.public();
    let mut images = HashSet::new();
    for m in 0..225u64 {
        let (high, low) = (m / 15, m % 15);
        let admissible = high >= 1 && oracle::gcd(high, 15) == 1;
        match tp_encrypt(pk, &big(m)) {
            Ok(c) => {
                ensure!(admissible, "accepted inadmissible m={m}");
                let want = oracle::pow(16, low, 225) * oracle::pow(high, 15, 225) % 225;
                ensure!(c.value() == &big(want), "tp_encrypt({m}) disagrees with oracle");
                ensure!(tp_decrypt(&sk, &c).unwrap() == big(m), "tp roundtrip m={m}");
                images.insert(want);
            }
            Err(Error::InadmissibleMessage(_)) => ensure!(!admissible, "rejected admissible m={m}"),
            Err(e) => return Err(format!("m={m}: unexpected {e}")),
        }
    }
    ensure!(images.len() == 120, "{} distinct images", images.len());
    Ok(())
}

fn ac4_blind_signature_512() -> Check {
    let mut rng = RandomSource::seeded(4);
    let sk = keygen(256, BaseStrategy::SafeDefault, &mut rng).map_err(|e| e.to_string())?;
    let pk = sk.public();
    ensure!(pk.n().bits() >= 511, "modulus has {} bits", pk.n().bits());
    let mut msgs = Vec::with_capacity(200);
    let mut blinded = Vec::with_capacity(200);
    let mut secrets = Vec::with_capacity(200);
    for _ in 0..200 {
        let m = random_unit(pk.n_squared(), &mut rng).unwrap();
        let x = random_unit(pk.n(), &mut rng).unwrap();
        let (mb, s) = blind_with(pk, &m, x).unwrap();
        msgs.push(m);
        blinded.push(mb);
        secrets.push(s);
    }
    let direct = batch::sign_raw_many(&sk, &msgs).map_err(|e| e.to_string())?;
    let on_blinded = batch::sign_raw_many(&sk, &blinded).map_err(|e| e.to_string())?;
    for i in 0..200 {
        let u = unblind(&on_blinded[i], &secrets[i], pk.n());
        ensure!(u.s1 == direct[i].s1 && u.s2 == direct[i].s2, "mismatch at sample {i}");
        ensure!(verify(pk, &msgs[i], &u), "unblinded signature fails verify at {i}");
    }
    Ok(())
}

fn ac5_scale() -> Check {
    let mut rng = RandomSource::seeded(5);
    let t = Instant::now();
    let sk = keygen(1024, BaseStrategy::SafeDefault, &mut rng).map_err(|e| e.to_string())?;
    eprintln!("    keygen 2048-bit: {:.1?}", t.elapsed());
    ensure!(sk.public().n().bits() >= 2047, "modulus bits {}", sk.public().n().bits());
    let pk = sk.public().clone();

    let msgs: Vec<Plaintext> = (0..50).map(|_| Plaintext(rng.gen_biguint_below(pk.n()))).collect();
    let cts = batch::encrypt_many(&pk, &msgs, &mut rng).map_err(|e| e.to_string())?;
    let back = batch::decrypt_many(&sk, &cts).map_err(|e| e.to_string())?;
    ensure!(back == msgs, "2048-bit roundtrip mismatch");

    let m1 = Plaintext(rng.gen_biguint_below(pk.n()));
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept()?;
        respond_over_tcp(stream, ResponderMode::default(), Duration::from_secs(30), &mut RandomSource::seeded(6))
    });
    let tr = send_over_tcp(addr, sk, m1.clone(), None, Duration::from_secs(30), &mut rng)
        .map_err(|e| e.to_string())?;
    let out = server.join().unwrap().map_err(|e| e.to_string())?;
    ensure!(out.recovered == m1.0, "TCP three-pass recovered wrong message");
    ensure!(out.transcript.m3 == tr.m3, "transcripts disagree");
    Ok(())
}

fn ac6_expansion() -> Check {
    let mut rng = RandomSource::seeded(6);
    let sk = keygen(512, BaseStrategy::SafeDefault, &mut rng).map_err(|e| e.to_string())?;
    let pk = sk.public();
    ensure!(pk.n().bits() >= 1023, "modulus bits {}", pk.n().bits());
    let msgs: Vec<Plaintext> = (0..1000).map(|_| Plaintext(rng.gen_biguint_below(pk.n()))).collect();
    let cts = batch::encrypt_many(pk, &msgs, &mut rng).map_err(|e| e.to_string())?;
    let bound = 2 * pk.n().bits();
    for c in &cts {
        ensure!(c.value().bits() <= bound, "ciphertext has {} bits > {bound}", c.value().bits());
    }
    Ok(())
}

fn ac7_shamir() -> Check {
    let a = ShamirParty::with_exponent(big(23), big(5)).map_err(|e| e.to_string())?;
    let b = ShamirParty::with_exponent(big(23), big(7)).map_err(|e| e.to_string())?;
    ensure!(a.decryption_exponent() == &big(9), "d_A = {}", a.decryption_exponent());
    ensure!(b.decryption_exponent() == &big(19), "d_B = {}", b.decryption_exponent());
    let t = shamir_exchange(&a, &b, &big(3)).map_err(|e| e.to_string())?;
    // oracle chain
    let (o1, o2) = (oracle::pow(3, 5, 23), oracle::pow(oracle::pow(3, 5, 23), 7, 23));
    let o3 = oracle::pow(o2, 9, 23);
    ensure!((o1, o2, o3, oracle::pow(o3, 19, 23)) == (13, 9, 2, 3), "oracle chain");
    ensure!(
        (t.m1.clone(), t.m2.clone(), t.m3.clone()) == (big(13), big(9), big(2)),
        "transcript ({}, {}, {})",
        t.m1,
        t.m2,
        t.m3
    );
    for m in 1..23u64 {
        let t = shamir_exchange(&a, &b, &big(m)).unwrap();
        ensure!(t.recovered == big(m), "recovery failed for m={m}");
        ensure!(b.lock(&a.lock(&big(m))) == a.lock(&b.lock(&big(m))), "commutativity m={m}");
    }
    Ok(())
}

fn random_frame(rng: &mut RandomSource) -> Vec<u8> {
    let kind = rng.next_u32() % 4;
    let len = (rng.next_u32() % 48) as usize;
    let mut body = vec![0u8; len];
    rng.fill_bytes(&mut body);
    match kind {
        // raw noise
        0 => body,
        // valid header shape, random type/version/length
        _ => {
            let mut out = MAGIC.to_vec();
            out.push(if kind == 1 { (rng.next_u32() % 3) as u8 } else { 1 });
            out.push((rng.next_u32() % 6) as u8);
            let claimed = match kind {
                3 => rng.next_u32(),
                _ => len as u32,
            };
            out.extend_from_slice(&claimed.to_be_bytes());
            out.extend_from_slice(&body);
            out
        }
    }
}

fn ac8_robustness() -> Check {
    let sk = toy_key();
    let pk = sk.public().clone();
    let mut rng = RandomSource::seeded(8);

    // order violations
    let mut a = PaillierInitiatorSession::new(toy_key(), Plaintext::from(7)).unwrap();
    let mut b = PaillierResponderSession::hardened(pk.clone());
    ensure!(matches!(a.reveal(&big(83)), Err(Error::ProtocolOrderViolation { .. })), "reveal before send");
    ensure!(matches!(b.recover(&big(3)), Err(Error::ProtocolOrderViolation { .. })), "recover before respond");
    let m1 = a.send_m1(&mut rng).unwrap();
    ensure!(matches!(a.send_m1(&mut rng), Err(Error::ProtocolOrderViolation { .. })), "double send");
    b.respond(&m1, &mut rng).unwrap();
    ensure!(matches!(b.respond(&m1, &mut rng), Err(Error::ProtocolOrderViolation { .. })), "double respond");

    // truncated frames
    let full = encode_msg(&Frame::M2(big(196))).unwrap();
    for cut in 0..full.len() {
        ensure!(matches!(decode_msg(&full[..cut]), Err(Error::Parse { .. })), "truncated at {cut}");
    }
    for cut in [HEADER_LEN - 3, HEADER_LEN] {
        let mut cursor = std::io::Cursor::new(full[..cut].to_vec());
        ensure!(matches!(read_frame(&mut cursor), Err(Error::Parse { .. })), "stream truncated at {cut}");
    }

    // oversized payloads
    let mut huge = MAGIC.to_vec();
    huge.extend_from_slice(&[1, 1]);
    huge.extend_from_slice(&u32::MAX.to_be_bytes());
    ensure!(matches!(decode_msg(&huge), Err(Error::Parse { .. })), "oversized length");
    let too_big = BigUint::from_bytes_be(&vec![0xab; wire::MAX_PAYLOAD + 1]);
    ensure!(matches!(encode_msg(&Frame::M1(too_big)), Err(Error::Range(_))), "oversized encode");
    let m3 = encode_msg(&Frame::M3(big(15))).unwrap();
    ensure!(matches!(decode_msg_for(&m3, &pk), Err(Error::Range(_))), "M3 >= n");

    // mid-session disconnect: peer reads key and M1 then hangs up
    let (ia, ib) = MemoryPipe::pair(Duration::from_secs(5));
    let peer = thread::spawn(move || {
        let mut chan = FrameChannel::new(ib);
        let _ = chan.recv();
        let _ = chan.recv();
    });
    let mut chan = FrameChannel::new(ia);
    let r = transport::run_initiator(&mut chan, toy_key(), Plaintext::from(7), None, &mut rng);
    peer.join().unwrap();
    ensure!(matches!(r, Err(Error::Protocol(ProtocolFault::Disconnected))), "disconnect gave {r:?}");

    // silent peer
    let (ia, _ib) = MemoryPipe::pair(Duration::from_millis(100));
    let mut chan = FrameChannel::new(ia);
    let r = transport::run_initiator(&mut chan, toy_key(), Plaintext::from(7), None, &mut rng);
    ensure!(matches!(r, Err(Error::ProtocolTimeout)), "timeout gave {r:?}");

    // fuzz: decoders and a live responder on 10,000 random frames
    let mut crashes = 0;
    for i in 0..10_000 {
        let frame = random_frame(&mut rng);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let _ = decode_msg(&frame);
            let _ = decode_msg_for(&frame, &pk);
            let _ = read_frame(&mut std::io::Cursor::new(&frame));
            if i % 10 == 0 {
                let (mut tx, rx) = MemoryPipe::pair(Duration::from_millis(20));
                use std::io::Write;
                tx.write_all(&frame).unwrap();
                tx.close_write();
                let mut chan = FrameChannel::new(rx);
                let r = transport::run_responder(&mut chan, ResponderMode::default(), &mut RandomSource::seeded(i));
                assert!(r.is_err());
            }
        }));
        if outcome.is_err() {
            crashes += 1;
        }
    }
    ensure!(crashes == 0, "{crashes} crashes during fuzzing");
    Ok(())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1", "known-answer suite at n=15", Duration::from_secs(1), ac1_known_answers),
        ("AC2", "exhaustive correctness at n=15", Duration::from_secs(5), ac2_exhaustive_n15),
        ("AC3", "trapdoor permutation domain and roundtrip", Duration::from_secs(5), ac3_trapdoor),
        ("AC4", "blind signature equality, 200 samples at 512-bit n", Duration::from_secs(60), ac4_blind_signature_512),
        ("AC5", "2048-bit keygen, 50 roundtrips, TCP three-pass", Duration::from_secs(120), ac5_scale),
        ("AC6", "expansion bound, 1000 plaintexts at 1024-bit n", Duration::from_secs(600), ac6_expansion),
        ("AC7", "Shamir protocol at p=23", Duration::from_secs(1), ac7_shamir),
        ("AC8", "protocol robustness and frame fuzzing", Duration::from_secs(600), ac8_robustness),
    ];

    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, desc, limit, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|_| {
            if elapsed > limit {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            } else {
                Ok(())
            }
        });
        match result {
            Ok(()) => println!("PASS {id} {desc} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {desc} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

//! Command-line front end for `paillier3p`.
//!
//! Integers go in and out as lowercase hex. [`run`] is the whole program;
//! `main` only wires it to the process streams.

use std::fmt;
use std::fs;
use std::io::Write;
use std::net::{SocketAddr, TcpListener, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paillier3p::keyfile::{self, KeyMaterial};
use paillier3p::signature::{self, BlindingSecret, Signature};
use paillier3p::threepass::{shamir_exchange, shamir_keygen};
use paillier3p::transport::{respond_over_tcp, send_over_tcp};
use paillier3p::trapdoor::{tp_decrypt, tp_encrypt};
use paillier3p::{
    batch, keygen, BaseStrategy, BigUint, Ciphertext, Plaintext, PrivateKey, PublicKey,
    RandomSource, ResponderMode, ShamirParty,
};

const SIGNATURE_HEADER: &str = "paillier-signature-v1";
const BLINDING_HEADER: &str = "paillier-blinding-v1";

#[derive(Debug, Parser)]
#[command(name = "p3p", version, about = "Paillier encryption, signatures and the three-pass protocol")]
struct Cli {
    /// Seed for all randomness. Makes every command deterministic.
    #[arg(long, global = true, env = "P3P_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a key pair, writing PREFIX.pub and PREFIX.key
    Keygen {
        /// Modulus size in bits
        #[arg(long, default_value_t = 2048)]
        bits: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Base::Safe)]
        base: Base,
    },
    /// Encrypt one or more plaintexts
    Encrypt {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: IntInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decrypt one or more ciphertexts
    Decrypt {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: IntInput,
        /// Print plaintexts as UTF-8 text instead of hex
        #[arg(long)]
        as_text: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the trapdoor permutation to a message below n^2
    TpEncrypt {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: IntInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invert the trapdoor permutation
    TpDecrypt {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: IntInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hash and sign a message
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: ByteInput,
        /// Signature file (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a signature file. Exits 2 if it does not verify.
    Verify {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        sig: PathBuf,
        #[command(flatten)]
        input: ByteInput,
        /// Treat --message as a residue mod n^2 instead of bytes to hash
        #[arg(long)]
        raw: bool,
    },
    /// Blind a residue for signing, saving the blinding secret
    Blind {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: IntInput,
        #[arg(long)]
        secret_out: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sign a residue mod n^2 directly
    SignRaw {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: IntInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove the blinding factor from a signature
    Unblind {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the three-pass responder
    #[command(name = "3pass-listen")]
    ThreePassListen {
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Serve sessions concurrently
        #[arg(long)]
        parallel: bool,
        /// Use a random m2 instead of the hardened x^n choice
        #[arg(long)]
        plain: bool,
        /// Stop after this many sessions (0 runs forever)
        #[arg(long, default_value_t = 0)]
        sessions: usize,
        /// Per-read timeout in seconds
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Run the three-pass initiator
    #[command(name = "3pass-send")]
    ThreePassSend {
        #[arg(long)]
        addr: String,
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        input: IntInput,
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Run Shamir's three-pass protocol locally and print the transcript
    ShamirDemo {
        /// Prime modulus in hex (random if omitted)
        #[arg(long)]
        prime: Option<String>,
        /// Prime size when --prime is omitted
        #[arg(long, default_value_t = 64)]
        bits: u64,
        /// Exponents of the two parties in hex (random if omitted)
        #[arg(long, requires = "eb")]
        ea: Option<String>,
        #[arg(long, requires = "ea")]
        eb: Option<String>,
        #[arg(long)]
        message: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Base {
    Safe,
    Random,
}

/// An integer argument: hex, UTF-8 text or a file holding hex.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct IntInput {
    #[arg(long, visible_alias = "hex")]
    message: Vec<String>,
    #[arg(long)]
    text: Option<String>,
    /// File with one hex integer per line
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

/// A byte-string argument for hash-then-sign.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ByteInput {
    #[arg(long, visible_alias = "hex")]
    message: Option<String>,
    #[arg(long)]
    text: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Crypto(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Crypto(m) => f.write_str(m),
        }
    }
}

impl From<paillier3p::Error> for CliError {
    fn from(e: paillier3p::Error) -> Self {
        CliError::Crypto(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn to_hex(v: &BigUint) -> String {
    v.to_str_radix(16)
}

pub fn parse_hex(s: &str) -> Option<BigUint> {
    let s = s.trim();
    let s = s.strip_prefix("0x").unwrap_or(s);
    if s.is_empty() {
        return None;
    }
    BigUint::parse_bytes(s.as_bytes(), 16)
}

fn hex_arg(s: &str) -> CliResult<BigUint> {
    parse_hex(s).ok_or_else(|| usage(format!("not a hex integer: {s:?}")))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

impl IntInput {
    /// Collects the values, checking each is below `bound`.
    fn values(&self, bound: &BigUint) -> CliResult<Vec<BigUint>> {
        let vals = if let Some(t) = &self.text {
            let v = BigUint::from_bytes_be(t.as_bytes());
            if v >= *bound {
                return Err(usage("text is too long for this modulus"));
            }
            vec![v]
        } else if let Some(p) = &self.input {
            read_text(p)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(hex_arg)
                .collect::<CliResult<_>>()?
        } else {
            self.message.iter().map(|s| hex_arg(s)).collect::<CliResult<_>>()?
        };
        if vals.is_empty() {
            return Err(usage("no input values"));
        }
        if let Some(v) = vals.iter().find(|v| *v >= bound) {
            return Err(usage(format!("value {} is out of range", to_hex(v))));
        }
        Ok(vals)
    }

    fn single(&self, bound: &BigUint) -> CliResult<BigUint> {
        let mut vals = self.values(bound)?;
        if vals.len() != 1 {
            return Err(usage("expected exactly one input value"));
        }
        Ok(vals.remove(0))
    }
}

impl ByteInput {
    fn bytes(&self) -> CliResult<Vec<u8>> {
        if let Some(h) = &self.message {
            hex::decode(h.trim()).map_err(|e| usage(format!("bad hex message: {e}")))
        } else if let Some(t) = &self.text {
            Ok(t.as_bytes().to_vec())
        } else if let Some(p) = &self.file {
            fs::read(p).map_err(|e| usage(format!("{}: {e}", p.display())))
        } else {
            Err(usage("no message given"))
        }
    }
}

fn load_public(path: &Path) -> CliResult<PublicKey> {
    Ok(keyfile::parse_key(&read_text(path)?)?.public().clone())
}

fn load_private(path: &Path) -> CliResult<PrivateKey> {
    match keyfile::parse_key(&read_text(path)?)? {
        KeyMaterial::Private(sk) => Ok(sk),
        KeyMaterial::Public(_) => Err(usage(format!("{} is a public key", path.display()))),
    }
}

fn format_signature(sig: &Signature) -> String {
    format!("{SIGNATURE_HEADER}\ns1 {}\ns2 {}\n", to_hex(&sig.s1), to_hex(&sig.s2))
}

/// Reads `header` then `name hex` lines in the given order.
fn parse_record(text: &str, header: &str, names: &[&str]) -> Option<Vec<BigUint>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next()? != header {
        return None;
    }
    let mut out = Vec::new();
    for name in names {
        let (key, val) = lines.next()?.split_once(' ')?;
        if key != *name {
            return None;
        }
        out.push(parse_hex(val)?);
    }
    lines.next().is_none().then_some(out)
}

fn load_signature(path: &Path) -> CliResult<Signature> {
    let mut f = parse_record(&read_text(path)?, SIGNATURE_HEADER, &["s1", "s2"])
        .ok_or_else(|| CliError::Crypto(format!("{}: malformed signature file", path.display())))?;
    let s2 = f.pop().unwrap();
    let s1 = f.pop().unwrap();
    Ok(Signature { s1, s2 })
}

fn emit(out: &mut dyn Write, dest: Option<&Path>, text: &str) -> CliResult<()> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn lines(vals: impl IntoIterator<Item = String>) -> String {
    vals.into_iter().map(|v| v + "\n").collect()
}

fn rng_for(seed: Option<u64>) -> RandomSource {
    seed.map(RandomSource::seeded).unwrap_or_default()
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn resolve(addr: &str) -> CliResult<SocketAddr> {
    addr.to_socket_addrs()
        .map_err(|e| usage(format!("{addr}: {e}")))?
        .next()
        .ok_or_else(|| usage(format!("{addr}: no address")))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 1,
            };
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("usage error");
            let _ = writeln!(err, "{first}");
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.to_string().replace('\n', " "));
            match e {
                CliError::Usage(_) => 1,
                CliError::Crypto(_) => 2,
            }
        }
    }
}

fn dispatch(cli: Cli, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let mut rng = rng_for(cli.seed);
    match cli.command {
        Command::Keygen { bits, out: prefix, base } => {
            if bits < 8 || bits % 2 != 0 {
                return Err(usage("--bits must be an even number of at least 8"));
            }
            let strategy = match base {
                Base::Safe => BaseStrategy::SafeDefault,
                Base::Random => BaseStrategy::Random,
            };
            let sk = keygen(bits / 2, strategy, &mut rng)?;
            keyfile::write_public(&with_suffix(&prefix, ".pub"), sk.public())?;
            keyfile::write_private(&with_suffix(&prefix, ".key"), &sk)?;
            writeln!(out, "{}", hex::encode(sk.public().fingerprint().as_bytes()))?;
        }
        Command::Encrypt { key, input, out: dest } => {
            let pk = load_public(&key)?;
            let msgs: Vec<Plaintext> = input.values(pk.n())?.into_iter().map(Plaintext).collect();
            let cts = batch::encrypt_many(&pk, &msgs, &mut rng)?;
            emit(out, dest.as_deref(), &lines(cts.iter().map(|c| to_hex(c.value()))))?;
        }
        Command::Decrypt { key, input, as_text, out: dest } => {
            let sk = load_private(&key)?;
            let pk = sk.public();
            let cts = input
                .values(pk.n_squared())?
                .into_iter()
                .map(|v| Ciphertext::new(pk, v))
                .collect::<paillier3p::Result<Vec<_>>>()?;
            let pts = batch::decrypt_many(&sk, &cts)?;
            let text = lines(pts.iter().map(|p| {
                if as_text {
                    String::from_utf8_lossy(&p.0.to_bytes_be()).into_owned()
                } else {
                    to_hex(&p.0)
                }
            }));
            emit(out, dest.as_deref(), &text)?;
        }
        Command::TpEncrypt { key, input, out: dest } => {
            let pk = load_public(&key)?;
            let c = tp_encrypt(&pk, &input.single(pk.n_squared())?)?;
            emit(out, dest.as_deref(), &lines([to_hex(c.value())]))?;
        }
        Command::TpDecrypt { key, input, out: dest } => {
            let sk = load_private(&key)?;
            let c = Ciphertext::new(sk.public(), input.single(sk.public().n_squared())?)?;
            emit(out, dest.as_deref(), &lines([to_hex(&tp_decrypt(&sk, &c)?)]))?;
        }
        Command::Sign { key, input, out: dest } => {
            let sk = load_private(&key)?;
            let sig = signature::sign(&sk, &input.bytes()?)?;
            emit(out, dest.as_deref(), &format_signature(&sig))?;
        }
        Command::Verify { key, sig, input, raw } => {
            let pk = load_public(&key)?;
            let s = load_signature(&sig)?;
            let ok = if raw {
                let m = BigUint::from_bytes_be(&input.bytes()?);
                signature::verify(&pk, &m, &s)
            } else {
                signature::verify_message(&pk, &input.bytes()?, &s)
            };
            if !ok {
                return Err(CliError::Crypto("signature does not verify".into()));
            }
            writeln!(out, "valid")?;
        }
        Command::Blind { key, input, secret_out, out: dest } => {
            let pk = load_public(&key)?;
            let (blinded, secret) = signature::blind(&pk, &input.single(pk.n_squared())?, &mut rng)?;
            let record = format!("{BLINDING_HEADER}\nx {}\n", to_hex(secret.x()));
            fs::write(&secret_out, record).map_err(|e| usage(format!("{}: {e}", secret_out.display())))?;
            emit(out, dest.as_deref(), &lines([to_hex(&blinded)]))?;
        }
        Command::SignRaw { key, input, out: dest } => {
            let sk = load_private(&key)?;
            let sig = signature::sign_raw(&sk, &input.single(sk.public().n_squared())?)?;
            emit(out, dest.as_deref(), &format_signature(&sig))?;
        }
        Command::Unblind { key, sig, secret, out: dest } => {
            let pk = load_public(&key)?;
            let s = load_signature(&sig)?;
            let x = parse_record(&read_text(&secret)?, BLINDING_HEADER, &["x"])
                .ok_or_else(|| CliError::Crypto(format!("{}: malformed blinding file", secret.display())))?
                .remove(0);
            let secret = BlindingSecret::new(x, pk.n())?;
            emit(out, dest.as_deref(), &format_signature(&signature::unblind(&s, &secret, pk.n())))?;
        }
        Command::ThreePassListen { port, host, parallel, plain, sessions, timeout } => {
            let listener = TcpListener::bind((host.as_str(), port))?;
            writeln!(out, "listening on {}", listener.local_addr()?)?;
            out.flush()?;
            let mode = if plain {
                ResponderMode::Plain { m2: None }
            } else {
                ResponderMode::default()
            };
            listen(listener, mode, parallel, sessions, Duration::from_secs(timeout), cli.seed, out)?;
        }
        Command::ThreePassSend { addr, key, input, timeout } => {
            let sk = load_private(&key)?;
            let m1 = input.single(sk.public().n())?;
            let t = send_over_tcp(
                resolve(&addr)?,
                sk,
                Plaintext(m1),
                None,
                Duration::from_secs(timeout),
                &mut rng,
            )?;
            write!(out, "M1 {}\nM2 {}\nM3 {}\n", to_hex(&t.m1), to_hex(&t.m2), to_hex(&t.m3))?;
        }
        Command::ShamirDemo { prime, bits, ea, eb, message } => {
            let p = match prime {
                Some(p) => hex_arg(&p)?,
                None => paillier3p::numtheory::gen_prime(bits, &mut rng)?,
            };
            let (a, b) = match (ea, eb) {
                (Some(ea), Some(eb)) => (
                    ShamirParty::with_exponent(p.clone(), hex_arg(&ea)?)?,
                    ShamirParty::with_exponent(p.clone(), hex_arg(&eb)?)?,
                ),
                _ => (shamir_keygen(&p, &mut rng)?, shamir_keygen(&p, &mut rng)?),
            };
            let t = shamir_exchange(&a, &b, &hex_arg(&message)?)?;
            let rows = [
                ("p", &p),
                ("e_A", a.encryption_exponent()),
                ("d_A", a.decryption_exponent()),
                ("e_B", b.encryption_exponent()),
                ("d_B", b.decryption_exponent()),
                ("M1", &t.m1),
                ("M2", &t.m2),
                ("M3", &t.m3),
                ("recovered", &t.recovered),
            ];
            for (name, v) in rows {
                writeln!(out, "{name} {}", to_hex(v))?;
            }
        }
    }
    Ok(())
}

fn listen(
    listener: TcpListener,
    mode: ResponderMode,
    parallel: bool,
    sessions: usize,
    timeout: Duration,
    seed: Option<u64>,
    out: &mut (dyn Write + Send),
) -> CliResult<()> {
    let out = Mutex::new(out);
    let serve = |i: usize, stream| -> CliResult<()> {
        let mut rng = rng_for(seed.map(|s| s.wrapping_add(i as u64)));
        let r = respond_over_tcp(stream, mode.clone(), timeout, &mut rng)?;
        let mut out = out.lock().unwrap();
        writeln!(out, "recovered {}", to_hex(&r.recovered))?;
        out.flush()?;
        Ok(())
    };
    let limit = if sessions == 0 { usize::MAX } else { sessions };
    if !parallel {
        // one failed session is fatal only when it was the last one asked for
        let mut last = Ok(());
        for (i, stream) in listener.incoming().take(limit).enumerate() {
            last = serve(i, stream?);
            if let Err(e) = &last {
                eprintln!("session {i}: {e}");
            }
        }
        return last;
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = listener
            .incoming()
            .take(limit)
            .enumerate()
            .map(|(i, stream)| {
                let serve = &serve;
                scope.spawn(move || serve(i, stream?))
            })
            .collect();
        let mut result = Ok(());
        for (i, h) in handles.into_iter().enumerate() {
            if let Err(e) = h.join().expect("session thread panicked") {
                eprintln!("session {i}: {e}");
                result = Err(e);
            }
        }
        result
    })
}

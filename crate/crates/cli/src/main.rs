use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use groupauth::protocol::{MergeRule, Mode, NullPolicy, ProtocolError};
use groupauth::sharesplit::SplitError;
use groupauth::wire::WireError;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

mod commands;
mod demo;

#[derive(Parser, Debug)]
#[command(name = "groupauth", version, about = "Policy-based group authentication with split Naccache-Stern keys")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a key pair (public.json, private.json).
    Keygen(commands::KeygenArgs),
    /// Compile a policy into one share file per holder.
    Compile(commands::CompileArgs),
    /// Issue an encrypted challenge and keep the verifier state.
    Challenge(commands::ChallengeArgs),
    /// Answer a challenge with one token's share.
    Respond(commands::RespondArgs),
    /// Merge anonymous responses and check them against the state.
    Verify(commands::VerifyArgs),
    /// Run every subset of holders end to end against a policy.
    Audit(commands::AuditArgs),
    /// Rebuild a reference example and audit it.
    Demo(demo::DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Monotone,
    Sequence,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Monotone => Mode::Monotone,
            ModeArg::Sequence => Mode::Sequence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MergeArg {
    Or,
    Sum,
    Xor,
}

impl From<MergeArg> for MergeRule {
    fn from(m: MergeArg) -> Self {
        match m {
            MergeArg::Or => MergeRule::Or,
            MergeArg::Sum => MergeRule::Sum,
            MergeArg::Xor => MergeRule::Xor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NullArg {
    One,
    Random,
}

impl From<NullArg> for NullPolicy {
    fn from(n: NullArg) -> Self {
        match n {
            NullArg::One => NullPolicy::One,
            NullArg::Random => NullPolicy::RandomNonzero,
        }
    }
}

/// Exit 1 for a negative verdict or a refused compilation, 2 for bad input.
#[derive(Debug)]
pub enum CliError {
    Failure(String),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Failure(msg) | CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

impl From<WireError> for CliError {
    fn from(e: WireError) -> Self {
        CliError::Usage(format!("schema error: {e}"))
    }
}

impl From<SplitError> for CliError {
    fn from(e: SplitError) -> Self {
        CliError::Failure(format!("compile failed: {e}"))
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::SessionMismatch => CliError::Failure(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<groupauth::nscrypt::CryptoError> for CliError {
    fn from(e: groupauth::nscrypt::CryptoError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<groupauth::policy::PolicyError> for CliError {
    fn from(e: groupauth::policy::PolicyError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Reads and parses a document, prefixing schema errors with the file name.
pub fn load<T: groupauth::wire::Wire>(path: &Path) -> CliResult<T> {
    T::from_json(&read_file(path)?)
        .map_err(|e| CliError::Usage(format!("{}: schema error: {e}", path.display())))
}

pub fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// ChaCha20 seeded from up to 32 hex-encoded bytes, or from the OS.
pub fn rng_from(seed: Option<&str>) -> CliResult<ChaCha20Rng> {
    let Some(text) = seed else {
        return Ok(ChaCha20Rng::from_entropy());
    };
    let bytes = hex::decode(text).map_err(|e| CliError::Usage(format!("--seed: {e}")))?;
    if bytes.len() > 32 {
        return Err(CliError::Usage("--seed: at most 32 bytes (64 hex digits)".into()));
    }
    let mut seed = [0u8; 32];
    seed[..bytes.len()].copy_from_slice(&bytes);
    Ok(ChaCha20Rng::from_seed(seed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen(args) => commands::keygen(args),
        Command::Compile(args) => commands::compile(args),
        Command::Challenge(args) => commands::challenge(args),
        Command::Respond(args) => commands::respond(args),
        Command::Verify(args) => commands::verify(args),
        Command::Audit(args) => commands::audit(args),
        Command::Demo(args) => demo::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("groupauth: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("groupauth: {msg}");
            ExitCode::from(2)
        }
    }
}

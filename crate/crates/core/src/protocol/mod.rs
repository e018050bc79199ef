//! Challenge-response group authentication.
//!
//! The verifier encrypts a random plaintext under the public key and keeps
//! the plaintext. Each present token answers with its partial decryption
//! (per slot, in sequence mode), the verifier merges the anonymous answers
//! and accepts iff some merged slot equals the plaintext. Verifier-side
//! functions only ever see public-key material and their own state.

mod audit;

use rand::Rng;

pub use audit::{audit, audit_with_plaintexts, AuditConfig, AuditReport, IssuedShares, TrialOutcome};

use crate::nscrypt::{encrypt, Ciphertext, CryptoError, KeyShare, NsPublicKey, Plaintext};
use crate::numtheory::{small, Natural};
use crate::sharesplit::ShareSequence;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("invalid challenge: {0}")]
    InvalidChallenge(String),
    #[error("share kind does not match the challenge mode")]
    ModeMismatch,
    #[error("share has {found} slots but the challenge has {expected}")]
    SlotCountMismatch { expected: usize, found: usize },
    #[error("responses have inconsistent lengths")]
    LengthMismatch,
    #[error("response belongs to a different session")]
    SessionMismatch,
    #[error("ciphertext is not below the share modulus")]
    CiphertextOutOfRange,
    #[error("merged value overflows the scalar type")]
    Overflow,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Monotone,
    Sequence,
}

/// How the anonymous responses are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeRule {
    /// Bitwise OR; monotone mode.
    Or,
    /// Arithmetic sum; sequence mode default.
    Sum,
    /// Bitwise XOR; sequence mode. Paired null responses cancel under XOR.
    Xor,
}

/// What a token answers at a slot where it holds no share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NullPolicy {
    One,
    /// Fresh uniform value in `[2, 2^n)`.
    RandomNonzero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge<T> {
    pub session_id: String,
    pub mode: Mode,
    pub merge: MergeRule,
    pub slot_count: usize,
    /// One shared ciphertext, or one per slot.
    pub ciphertexts: Vec<Ciphertext<T>>,
}

impl<T: Natural> Challenge<T> {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |why: &str| Err(ProtocolError::InvalidChallenge(why.to_owned()));
        if self.slot_count == 0 {
            return bad("slot_count must be at least 1");
        }
        if (self.merge == MergeRule::Or) != (self.mode == Mode::Monotone) {
            return bad("OR merging is used exactly in monotone mode");
        }
        if self.mode == Mode::Monotone && self.slot_count != 1 {
            return bad("monotone challenges have a single slot");
        }
        if self.ciphertexts.len() != 1 && self.ciphertexts.len() != self.slot_count {
            return bad("need one ciphertext or one per slot");
        }
        if self.ciphertexts.iter().any(|c| c.0.is_zero()) {
            return bad("ciphertexts must be non-zero");
        }
        Ok(())
    }

    pub fn ciphertext_for(&self, slot: usize) -> &Ciphertext<T> {
        self.ciphertexts.get(slot).unwrap_or(&self.ciphertexts[0])
    }
}

/// The verifier's secret half of a session. Never sent to tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifierState<T> {
    pub session_id: String,
    pub mode: Mode,
    pub merge: MergeRule,
    pub slot_count: usize,
    /// Parallel to the challenge ciphertexts.
    pub plaintexts: Vec<T>,
}

/// One token's answer. Carries no holder identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseVector<T> {
    pub session_id: String,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict<T> {
    pub session_id: String,
    pub accepted: bool,
    /// Least slot (0-based) whose merged value matched.
    pub matching_slot: Option<usize>,
    /// Merged values, for diagnostics only: they equal the secret on success.
    pub merged: Option<Vec<T>>,
}

impl<T> Verdict<T> {
    pub fn redacted(mut self) -> Self {
        self.merged = None;
        self
    }
}

/// 128 random bits, hex encoded.
pub fn new_session_id<R: Rng + ?Sized>(rng: &mut R) -> String {
    let bytes: [u8; 16] = rng.gen();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds a challenge for chosen plaintexts (one shared, or one per slot).
pub fn challenge_for_plaintexts<T: Natural>(
    public: &NsPublicKey<T>,
    mode: Mode,
    merge: MergeRule,
    slot_count: usize,
    session_id: String,
    plaintexts: Vec<T>,
) -> Result<(Challenge<T>, VerifierState<T>), ProtocolError> {
    let ciphertexts = plaintexts
        .iter()
        .map(|m| encrypt(public, &Plaintext(m.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let challenge = Challenge {
        session_id: session_id.clone(),
        mode,
        merge,
        slot_count,
        ciphertexts,
    };
    challenge.validate()?;
    let state = VerifierState {
        session_id,
        mode,
        merge,
        slot_count,
        plaintexts,
    };
    Ok((challenge, state))
}

/// Uniform plaintext from `[1, 2^n - 1]`.
pub fn random_plaintext<T: Natural, R: Rng + ?Sized>(public: &NsPublicKey<T>, rng: &mut R) -> T {
    let bound = T::power_of_two(public.prime_count()).expect("key size fits the scalar") - T::one();
    T::random_below(rng, &bound) + T::one()
}

/// Draws a random plaintext (or one per slot) and encrypts it.
pub fn make_challenge<T: Natural, R: Rng + ?Sized>(
    public: &NsPublicKey<T>,
    mode: Mode,
    merge: MergeRule,
    slot_count: usize,
    per_index_random: bool,
    rng: &mut R,
) -> Result<(Challenge<T>, VerifierState<T>), ProtocolError> {
    let draws = if per_index_random { slot_count.max(1) } else { 1 };
    let plaintexts = (0..draws).map(|_| random_plaintext(public, rng)).collect();
    let id = new_session_id(rng);
    challenge_for_plaintexts(public, mode, merge, slot_count, id, plaintexts)
}

/// Share material held by one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenShare<T> {
    Monotone(KeyShare<T>),
    Sequence(ShareSequence<T>),
}

impl<T: Natural> TokenShare<T> {
    pub fn holder(&self) -> &str {
        match self {
            TokenShare::Monotone(s) => &s.holder,
            TokenShare::Sequence(s) => &s.holder,
        }
    }

    pub fn modulus(&self) -> &T {
        match self {
            TokenShare::Monotone(s) => &s.modulus,
            TokenShare::Sequence(s) => &s.modulus,
        }
    }
}

fn null_response<T: Natural, R: Rng + ?Sized>(policy: NullPolicy, prime_count: usize, rng: &mut R) -> T {
    match policy {
        NullPolicy::One => T::one(),
        NullPolicy::RandomNonzero => {
            let two: T = small(2);
            let span = T::power_of_two(prime_count).expect("key size fits the scalar") - two.clone();
            two + T::random_below(rng, &span)
        }
    }
}

/// Computes a token's response vector: its partial decryption at every slot
/// where it holds primes, a null response everywhere else.
pub fn token_respond<T: Natural, R: Rng + ?Sized>(
    share: &TokenShare<T>,
    challenge: &Challenge<T>,
    null_policy: NullPolicy,
    rng: &mut R,
) -> Result<ResponseVector<T>, ProtocolError> {
    challenge.validate()?;
    if challenge.ciphertexts.iter().any(|c| c.0 >= *share.modulus()) {
        return Err(ProtocolError::CiphertextOutOfRange);
    }
    let values = match (share, challenge.mode) {
        (TokenShare::Monotone(s), Mode::Monotone) => {
            vec![s.subset.contribution(&s.modulus, &s.exponent, challenge.ciphertext_for(0))?]
        }
        (TokenShare::Sequence(s), Mode::Sequence) => {
            if s.slots.len() != challenge.slot_count {
                return Err(ProtocolError::SlotCountMismatch {
                    expected: challenge.slot_count,
                    found: s.slots.len(),
                });
            }
            s.slots
                .iter()
                .enumerate()
                .map(|(i, slot)| match slot {
                    Some(subset) => subset
                        .contribution(&s.modulus, &s.exponent, challenge.ciphertext_for(i))
                        .map_err(ProtocolError::from),
                    None => Ok(null_response(null_policy, s.prime_count, rng)),
                })
                .collect::<Result<_, _>>()?
        }
        _ => return Err(ProtocolError::ModeMismatch),
    };
    Ok(ResponseVector {
        session_id: challenge.session_id.clone(),
        values,
    })
}

/// Slot-wise merge of any number of responses. No responses give all zeros.
pub fn merge_responses<T: Natural>(
    responses: &[ResponseVector<T>],
    rule: MergeRule,
    slot_count: usize,
) -> Result<Vec<T>, ProtocolError> {
    if responses.iter().any(|r| r.values.len() != slot_count) {
        return Err(ProtocolError::LengthMismatch);
    }
    (0..slot_count)
        .map(|i| {
            responses.iter().try_fold(T::zero(), |acc, r| {
                let v = &r.values[i];
                match rule {
                    MergeRule::Or => Ok(acc | v.clone()),
                    MergeRule::Xor => Ok(acc ^ v.clone()),
                    MergeRule::Sum => acc.checked_add(v).ok_or(ProtocolError::Overflow),
                }
            })
        })
        .collect()
}

/// Bitwise OR of single-slot responses; 0 (always rejected) for none.
pub fn merge_monotone<T: Natural>(responses: &[ResponseVector<T>]) -> Result<T, ProtocolError> {
    Ok(merge_responses(responses, MergeRule::Or, 1)?.remove(0))
}

/// Per-slot arithmetic sum or XOR across tokens.
pub fn merge_sequence<T: Natural>(
    responses: &[ResponseVector<T>],
    rule: MergeRule,
    slot_count: usize,
) -> Result<Vec<T>, ProtocolError> {
    merge_responses(responses, rule, slot_count)
}

/// Accepts iff some merged slot equals its secret plaintext.
pub fn verify<T: Natural>(
    state: &VerifierState<T>,
    merged: &[T],
) -> Result<Verdict<T>, ProtocolError> {
    if state.plaintexts.is_empty()
        || (state.plaintexts.len() != 1 && state.plaintexts.len() != merged.len())
    {
        return Err(ProtocolError::LengthMismatch);
    }
    let secret = |i: usize| state.plaintexts.get(i).unwrap_or(&state.plaintexts[0]);
    let matching_slot = merged.iter().enumerate().position(|(i, v)| v == secret(i));
    Ok(Verdict {
        session_id: state.session_id.clone(),
        accepted: matching_slot.is_some(),
        matching_slot,
        merged: Some(merged.to_vec()),
    })
}

/// Session check, merge with `rule` (the state's own rule when `None`), verify.
pub fn verify_responses<T: Natural>(
    state: &VerifierState<T>,
    responses: &[ResponseVector<T>],
    rule: Option<MergeRule>,
) -> Result<Verdict<T>, ProtocolError> {
    if responses.iter().any(|r| r.session_id != state.session_id) {
        return Err(ProtocolError::SessionMismatch);
    }
    let merged = merge_responses(responses, rule.unwrap_or(state.merge), state.slot_count)?;
    verify(state, &merged)
}

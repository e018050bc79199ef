//! JSON file formats. Integers are decimal strings; every document carries
//! a `kind` discriminator. Protocol messages never name a holder.

use serde::{Deserialize, Serialize};

use crate::nscrypt::{Ciphertext, KeyShare, NsPrivateKey, NsPublicKey, PrimeSubset};
use crate::numtheory::Natural;
use crate::protocol::{Challenge, MergeRule, Mode, ResponseVector, TokenShare, Verdict, VerifierState};
use crate::sharesplit::ShareSequence;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("expected a '{expected}' document, found '{found}'")]
    WrongKind { expected: &'static str, found: String },
    #[error("field '{field}': {message}")]
    Field { field: String, message: String },
}

impl WireError {
    fn field(field: impl Into<String>, message: impl ToString) -> Self {
        WireError::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Document {
    NsPublic(PublicKeyDoc),
    NsPrivate(PrivateKeyDoc),
    ShareMonotone(MonotoneShareDoc),
    ShareSequence(SequenceShareDoc),
    Challenge(ChallengeDoc),
    VerifierState(StateDoc),
    Response(ResponseDoc),
    Verdict(VerdictDoc),
}

impl Document {
    fn kind(&self) -> &'static str {
        match self {
            Document::NsPublic(_) => "ns-public",
            Document::NsPrivate(_) => "ns-private",
            Document::ShareMonotone(_) => "share-monotone",
            Document::ShareSequence(_) => "share-sequence",
            Document::Challenge(_) => "challenge",
            Document::VerifierState(_) => "verifier-state",
            Document::Response(_) => "response",
            Document::Verdict(_) => "verdict",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PublicKeyDoc {
    n: usize,
    p: String,
    v: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PrivateKeyDoc {
    n: usize,
    p: String,
    s: String,
    primes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MonotoneShareDoc {
    holder: String,
    n: usize,
    p: String,
    s: String,
    primes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SequenceShareDoc {
    holder: String,
    n: usize,
    p: String,
    s: String,
    /// `null` where the holder has no share.
    slots: Vec<Option<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChallengeDoc {
    session_id: String,
    mode: Mode,
    merge: MergeRule,
    slot_count: usize,
    ciphertexts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StateDoc {
    session_id: String,
    mode: Mode,
    merge: MergeRule,
    slot_count: usize,
    plaintexts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ResponseDoc {
    session_id: String,
    values: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VerdictDoc {
    session_id: String,
    accepted: bool,
    matching_slot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    merged: Option<Vec<String>>,
}

fn render(doc: Document) -> String {
    let mut text = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    text.push('\n');
    text
}

fn read(text: &str) -> Result<Document, WireError> {
    serde_json::from_str(text).map_err(|e| WireError::Json(e.to_string()))
}

fn wrong_kind(expected: &'static str, doc: &Document) -> WireError {
    WireError::WrongKind {
        expected,
        found: doc.kind().to_owned(),
    }
}

/// Reads the `kind` field without validating the rest.
pub fn kind_of(text: &str) -> Result<String, WireError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| WireError::Json(e.to_string()))?;
    value
        .get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_owned)
        .ok_or_else(|| WireError::field("kind", "missing or not a string"))
}

fn num<T: Natural>(field: &str, text: &str) -> Result<T, WireError> {
    let ok = !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit());
    if !ok {
        return Err(WireError::field(field, format!("'{text}' is not a decimal integer")));
    }
    T::from_str_radix(text, 10).map_err(|_| WireError::field(field, format!("'{text}' does not fit the scalar type")))
}

fn nums<T: Natural>(field: &str, texts: &[String]) -> Result<Vec<T>, WireError> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| num(&format!("{field}[{i}]"), t))
        .collect()
}

fn dec<T: Natural>(values: impl IntoIterator<Item = T>) -> Vec<String> {
    values.into_iter().map(|v| v.to_string()).collect()
}

fn subset<T: Natural>(field: &str, texts: &[String], n: usize) -> Result<PrimeSubset<T>, WireError> {
    let primes = nums::<T>(field, texts)?;
    let subset = PrimeSubset::from_primes(primes).map_err(|e| WireError::field(field, e))?;
    if subset.max_index() >= n {
        return Err(WireError::field(field, format!("prime outside the first {n} primes")));
    }
    Ok(subset)
}

/// Conversion between library values and their JSON documents.
pub trait Wire: Sized {
    const KIND: &'static str;
    fn to_json(&self) -> String;
    fn from_json(text: &str) -> Result<Self, WireError>;
}

impl<T: Natural> Wire for NsPublicKey<T> {
    const KIND: &'static str = "ns-public";

    fn to_json(&self) -> String {
        render(Document::NsPublic(PublicKeyDoc {
            n: self.prime_count(),
            p: self.modulus().to_string(),
            v: dec(self.values().iter().cloned()),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::NsPublic(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        if doc.v.len() != doc.n {
            return Err(WireError::field("v", format!("expected {} values", doc.n)));
        }
        let p = num("p", &doc.p)?;
        NsPublicKey::new(p, nums("v", &doc.v)?).map_err(|e| WireError::field("v", e))
    }
}

impl<T: Natural> Wire for NsPrivateKey<T> {
    const KIND: &'static str = "ns-private";

    fn to_json(&self) -> String {
        render(Document::NsPrivate(PrivateKeyDoc {
            n: self.prime_count(),
            p: self.modulus().to_string(),
            s: self.exponent().to_string(),
            primes: dec(self.primes().iter().cloned()),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::NsPrivate(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        if doc.primes.len() != doc.n {
            return Err(WireError::field("primes", format!("expected {} primes", doc.n)));
        }
        let p = num("p", &doc.p)?;
        let s = num("s", &doc.s)?;
        NsPrivateKey::new(p, s, nums("primes", &doc.primes)?).map_err(|e| WireError::field("p/s/primes", e))
    }
}

impl<T: Natural> Wire for KeyShare<T> {
    const KIND: &'static str = "share-monotone";

    fn to_json(&self) -> String {
        render(Document::ShareMonotone(MonotoneShareDoc {
            holder: self.holder.clone(),
            n: self.prime_count,
            p: self.modulus.to_string(),
            s: self.exponent.to_string(),
            primes: dec(self.subset.primes().cloned()),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::ShareMonotone(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        Ok(KeyShare {
            holder: doc.holder,
            modulus: num("p", &doc.p)?,
            exponent: num("s", &doc.s)?,
            prime_count: doc.n,
            subset: subset("primes", &doc.primes, doc.n)?,
        })
    }
}

impl<T: Natural> Wire for ShareSequence<T> {
    const KIND: &'static str = "share-sequence";

    fn to_json(&self) -> String {
        render(Document::ShareSequence(SequenceShareDoc {
            holder: self.holder.clone(),
            n: self.prime_count,
            p: self.modulus.to_string(),
            s: self.exponent.to_string(),
            slots: self
                .slots
                .iter()
                .map(|slot| slot.as_ref().map(|sub| dec(sub.primes().cloned())))
                .collect(),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::ShareSequence(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        if doc.slots.is_empty() {
            return Err(WireError::field("slots", "at least one slot is required"));
        }
        let slots = doc
            .slots
            .iter()
            .enumerate()
            .map(|(i, slot)| {
                slot.as_ref()
                    .map(|primes| subset(&format!("slots[{i}]"), primes, doc.n))
                    .transpose()
            })
            .collect::<Result<_, _>>()?;
        Ok(ShareSequence {
            holder: doc.holder,
            modulus: num("p", &doc.p)?,
            exponent: num("s", &doc.s)?,
            prime_count: doc.n,
            slots,
        })
    }
}

impl<T: Natural> Wire for Challenge<T> {
    const KIND: &'static str = "challenge";

    fn to_json(&self) -> String {
        render(Document::Challenge(ChallengeDoc {
            session_id: self.session_id.clone(),
            mode: self.mode,
            merge: self.merge,
            slot_count: self.slot_count,
            ciphertexts: dec(self.ciphertexts.iter().map(|c| c.0.clone())),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::Challenge(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        let challenge = Challenge {
            session_id: doc.session_id,
            mode: doc.mode,
            merge: doc.merge,
            slot_count: doc.slot_count,
            ciphertexts: nums("ciphertexts", &doc.ciphertexts)?
                .into_iter()
                .map(Ciphertext)
                .collect(),
        };
        challenge.validate().map_err(|e| WireError::field("ciphertexts/slot_count/mode/merge", e))?;
        Ok(challenge)
    }
}

impl<T: Natural> Wire for VerifierState<T> {
    const KIND: &'static str = "verifier-state";

    fn to_json(&self) -> String {
        render(Document::VerifierState(StateDoc {
            session_id: self.session_id.clone(),
            mode: self.mode,
            merge: self.merge,
            slot_count: self.slot_count,
            plaintexts: dec(self.plaintexts.iter().cloned()),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::VerifierState(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        let plaintexts = nums("plaintexts", &doc.plaintexts)?;
        if plaintexts.is_empty() || (plaintexts.len() != 1 && plaintexts.len() != doc.slot_count) {
            return Err(WireError::field("plaintexts", "need one plaintext or one per slot"));
        }
        Ok(VerifierState {
            session_id: doc.session_id,
            mode: doc.mode,
            merge: doc.merge,
            slot_count: doc.slot_count,
            plaintexts,
        })
    }
}

impl<T: Natural> Wire for ResponseVector<T> {
    const KIND: &'static str = "response";

    fn to_json(&self) -> String {
        render(Document::Response(ResponseDoc {
            session_id: self.session_id.clone(),
            values: dec(self.values.iter().cloned()),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::Response(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        Ok(ResponseVector {
            session_id: doc.session_id,
            values: nums("values", &doc.values)?,
        })
    }
}

impl<T: Natural> Wire for Verdict<T> {
    const KIND: &'static str = "verdict";

    fn to_json(&self) -> String {
        render(Document::Verdict(VerdictDoc {
            session_id: self.session_id.clone(),
            accepted: self.accepted,
            matching_slot: self.matching_slot,
            merged: self.merged.as_ref().map(|m| dec(m.iter().cloned())),
        }))
    }

    fn from_json(text: &str) -> Result<Self, WireError> {
        let Document::Verdict(doc) = read(text)? else {
            return Err(wrong_kind(Self::KIND, &read(text)?));
        };
        Ok(Verdict {
            session_id: doc.session_id,
            accepted: doc.accepted,
            matching_slot: doc.matching_slot,
            merged: doc.merged.map(|m| nums("merged", &m)).transpose()?,
        })
    }
}

/// Reads either kind of share file.
pub fn token_from_json<T: Natural>(text: &str) -> Result<TokenShare<T>, WireError> {
    match kind_of(text)?.as_str() {
        "share-monotone" => KeyShare::from_json(text).map(TokenShare::Monotone),
        "share-sequence" => ShareSequence::from_json(text).map(TokenShare::Sequence),
        other => Err(WireError::WrongKind {
            expected: "share-monotone or share-sequence",
            found: other.to_owned(),
        }),
    }
}

pub fn token_to_json<T: Natural>(token: &TokenShare<T>) -> String {
    match token {
        TokenShare::Monotone(s) => s.to_json(),
        TokenShare::Sequence(s) => s.to_json(),
    }
}

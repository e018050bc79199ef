//! Group authentication by splitting a Naccache-Stern private key over a
//! Boolean policy on named key holders.
//!
//! The arithmetic core is generic over [`numtheory::Natural`]; the aliases
//! below fix it to arbitrary-precision integers.

pub mod fixtures;
pub mod nscrypt;
pub mod numtheory;
pub mod policy;
pub mod protocol;
pub mod sharesplit;
pub mod wire;

pub use num_bigint::BigUint;

pub type Nat = BigUint;
pub type PublicKey = nscrypt::NsPublicKey<Nat>;
pub type PrivateKey = nscrypt::NsPrivateKey<Nat>;
pub type KeyShare = nscrypt::KeyShare<Nat>;
pub type ShareSequence = sharesplit::ShareSequence<Nat>;
pub type TokenShare = protocol::TokenShare<Nat>;
pub type Challenge = protocol::Challenge<Nat>;
pub type VerifierState = protocol::VerifierState<Nat>;
pub type ResponseVector = protocol::ResponseVector<Nat>;
pub type Verdict = protocol::Verdict<Nat>;
pub type IssuedShares = protocol::IssuedShares<Nat>;

//! Compiling policies into key-share material.

mod monotone;
mod slots;

use std::collections::BTreeMap;

pub use monotone::{balanced_contiguous, bl_split, MonotoneSplit, Partitioner};
pub use slots::{slots_baseline, slots_packed, SlotAssignment, SlotPlan};

use crate::nscrypt::{CryptoError, KeyShare, NsPrivateKey, PrimeSubset};
use crate::numtheory::Natural;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("policy contains 'not'; monotone splitting needs an AND/OR policy")]
    NonMonotone,
    #[error("policy needs {needed} prime indices but only {available} are available")]
    InsufficientPrimes { needed: usize, available: usize },
    #[error("policy names {0} holders; at most 64 are supported")]
    TooManyVariables(usize),
    #[error("group {group} has {size} members but the key has only {prime_count} primes")]
    GroupLargerThanPrimeCount {
        group: String,
        size: usize,
        prime_count: usize,
    },
    #[error("the group family is empty")]
    EmptyFamily,
    #[error("invalid slot: {0}")]
    InvalidSlot(String),
    #[error("plan coverage differs from the family (missing {missing:?}, extra {extra:?})")]
    CoverageMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("share material uses {material} primes but the key has {key}")]
    PrimeCountMismatch { material: usize, key: usize },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// A holder's ordered per-slot shares; `None` where the holder has no part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareSequence<T> {
    pub holder: String,
    pub modulus: T,
    pub exponent: T,
    pub prime_count: usize,
    pub slots: Vec<Option<PrimeSubset<T>>>,
}

/// Resolves a monotone split into `(P_j, s)` shares.
pub fn issue_monotone<T: Natural>(
    split: &MonotoneSplit,
    private: &NsPrivateKey<T>,
) -> Result<BTreeMap<String, KeyShare<T>>, SplitError> {
    split
        .iter()
        .map(|(holder, indices)| {
            let subset = PrimeSubset::from_indices(indices.iter().copied(), private.primes())?;
            let share = KeyShare {
                holder: holder.to_owned(),
                modulus: private.modulus().clone(),
                exponent: private.exponent().clone(),
                prime_count: private.prime_count(),
                subset,
            };
            Ok((holder.to_owned(), share))
        })
        .collect()
}

/// One share sequence per universe holder, slot by slot.
pub fn issue_sequence<T: Natural>(
    plan: &SlotPlan,
    private: &NsPrivateKey<T>,
) -> Result<BTreeMap<String, ShareSequence<T>>, SplitError> {
    if plan.prime_count() != private.prime_count() {
        return Err(SplitError::PrimeCountMismatch {
            material: plan.prime_count(),
            key: private.prime_count(),
        });
    }
    plan.universe()
        .names()
        .iter()
        .enumerate()
        .map(|(h, holder)| {
            let slots = plan
                .slots()
                .iter()
                .map(|slot| {
                    slot.part_of(h)
                        .map(|part| {
                            PrimeSubset::from_indices(
                                slot.parts()[part].iter().copied(),
                                private.primes(),
                            )
                        })
                        .transpose()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let seq = ShareSequence {
                holder: holder.clone(),
                modulus: private.modulus().clone(),
                exponent: private.exponent().clone(),
                prime_count: private.prime_count(),
                slots,
            };
            Ok((holder.clone(), seq))
        })
        .collect()
}

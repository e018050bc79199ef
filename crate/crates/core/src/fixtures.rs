//! Reference systems and the airplane example, as checked-in constants.

use std::collections::BTreeMap;

use crate::nscrypt::{keygen, CryptoError, KeySpec, ModulusChoice, NsPrivateKey, NsPublicKey};
use crate::numtheory::{prime_index, Natural};
use crate::policy::{GroupFamily, PolicyError, Universe};
use crate::sharesplit::{SlotAssignment, SlotPlan, SplitError};

/// 12-prime reference system: least prime above 2*3*...*37.
pub const REFERENCE_MODULUS: u64 = 7420738134871;
pub const REFERENCE_EXPONENT: u64 = 5642069;
pub const REFERENCE_PUBLIC_VALUES: [u64; 12] = [
    1042080239371,
    6961378167419,
    556387338943,
    6467374518496,
    6101909563954,
    7161849266528,
    6408801185994,
    6664307396372,
    6792283659586,
    4009453191992,
    4858036635332,
    3535089085276,
];

/// 0b101101100111.
pub const REFERENCE_PLAINTEXT: u64 = 2919;
/// Printed as the ciphertext of 2919. It is 2^30 and decrypts to nothing.
pub const PRINTED_CIPHERTEXT: u64 = 1073741824;
/// What encrypt(2919) actually yields under the reference key.
pub const COMPUTED_CIPHERTEXT: u64 = 5802616398374;

/// 8-prime system with a forced modulus (not the least prime above 9699690).
pub const SMALL_MODULUS: u64 = 9700247;
pub const SMALL_EXPONENT: u64 = 5642069;
pub const SMALL_PLAINTEXT: u64 = 202;
pub const SMALL_CIPHERTEXT: u64 = 7202882;
pub const SMALL_HOLDERS: &str = "A1,A2,A3";
pub const SMALL_POLICY: &str = "(A1 and A2) or (A1 and A3)";
/// Contributions of A1 and of A2/A3 to m = 202.
pub const SMALL_CONTRIBUTIONS: [u64; 2] = [10, 192];

pub const AIRPLANE_HOLDERS: &str = "A,B,C,D,E";
/// Two managers (A, B), three staff (C, D, E); a manager must fly.
pub const AIRPLANE_POLICY: &str = "(A and B) or ((A or B) and (C or D or E))";
/// Seats available.
pub const AIRPLANE_MAX_SIZE: usize = 3;
pub const AIRPLANE_GROUPS: [&str; 16] = [
    "AB", "AC", "AD", "AE", "BC", "BD", "BE", "ABC", "ABD", "ABE", "ACD", "ACE", "ADE", "BCD",
    "BCE", "BDE",
];

/// The seven-slot airplane table: per slot, each holder's primes (empty = no share).
pub const AIRPLANE_TABLE: [[&[u64]; 5]; 7] = [
    [&[2, 3, 5, 7, 11, 13], &[2, 3, 5, 7, 11, 13], &[17, 19, 23, 29, 31, 37], &[17, 19, 23, 29, 31, 37], &[17, 19, 23, 29, 31, 37]],
    [&[2, 3, 5, 7], &[11, 13, 17, 19], &[23, 29, 31, 37], &[23, 29, 31, 37], &[23, 29, 31, 37]],
    [&[2, 3, 5, 7], &[], &[11, 13, 17, 19], &[23, 29, 31, 37], &[23, 29, 31, 37]],
    [&[], &[2, 3, 5, 7], &[11, 13, 17, 19], &[23, 29, 31, 37], &[23, 29, 31, 37]],
    [&[2, 3, 5, 7], &[], &[], &[11, 13, 17, 19], &[23, 29, 31, 37]],
    [&[], &[2, 3, 5, 7], &[], &[11, 13, 17, 19], &[23, 29, 31, 37]],
    [&[2, 3, 5, 7, 11, 13], &[17, 19, 23, 29, 31, 37], &[], &[], &[]],
];

/// Groups each table slot is meant to authenticate.
pub const AIRPLANE_TABLE_GROUPS: [&[&str]; 7] = [
    &["AC", "AD", "AE", "BC", "BD", "BE"],
    &["ABC", "ABD", "ABE"],
    &["ACD", "ACE"],
    &["BCD", "BCE"],
    &["ADE"],
    &["BDE"],
    &["AB"],
];

/// Token responses (rows = slots, columns = A..E) to the reference
/// ciphertext with null response 1, as computed.
pub const AIRPLANE_RESPONSES: [[u64; 5]; 7] = [
    [39, 39, 2880, 2880, 2880],
    [7, 96, 2816, 2816, 2816],
    [7, 1, 96, 2816, 2816],
    [1, 7, 96, 2816, 2816],
    [7, 1, 1, 96, 2816],
    [1, 7, 1, 96, 2816],
    [39, 2880, 1, 1, 1],
];

/// The last response row as printed: B and C swapped relative to the
/// table's share assignment. With it AB would sum to 40, not 2919.
pub const PRINTED_LAST_RESPONSE_ROW: [u64; 5] = [39, 1, 2880, 1, 1];

fn nat<T: Natural>(x: u64) -> T {
    T::from_u64(x).expect("fixture constant fits the scalar")
}

fn forced_key<T: Natural>(
    n: usize,
    p: u64,
    s: u64,
) -> Result<(NsPublicKey<T>, NsPrivateKey<T>), CryptoError> {
    let spec = KeySpec {
        prime_count: n,
        modulus: ModulusChoice::Fixed(nat(p)),
        exponent: Some(nat(s)),
    };
    // The rng is unused when both modulus and exponent are forced.
    keygen(&spec, &mut rand::rngs::mock::StepRng::new(0, 0))
}

/// The 12-prime reference key pair.
pub fn reference_keys<T: Natural>() -> Result<(NsPublicKey<T>, NsPrivateKey<T>), CryptoError> {
    forced_key(12, REFERENCE_MODULUS, REFERENCE_EXPONENT)
}

/// The 8-prime key pair with modulus 9700247.
pub fn small_keys<T: Natural>() -> Result<(NsPublicKey<T>, NsPrivateKey<T>), CryptoError> {
    forced_key(8, SMALL_MODULUS, SMALL_EXPONENT)
}

pub fn airplane_universe() -> Universe {
    Universe::from_list(AIRPLANE_HOLDERS).expect("fixture universe is valid")
}

pub fn airplane_family() -> Result<GroupFamily, PolicyError> {
    family_from_labels(&airplane_universe(), &AIRPLANE_GROUPS)
}

/// Parses single-character labels such as `"ACD"`.
pub fn family_from_labels(universe: &Universe, labels: &[&str]) -> Result<GroupFamily, PolicyError> {
    labels
        .iter()
        .map(|label| {
            let names: Vec<String> = label.chars().map(String::from).collect();
            universe.group(&names)
        })
        .collect()
}

/// The seven-slot table as a slot plan. Holders with equal prime sets share
/// a part; parts are ordered by their first holder.
pub fn airplane_table_plan() -> Result<SlotPlan, SplitError> {
    let universe = airplane_universe();
    let slots = AIRPLANE_TABLE
        .iter()
        .map(|row| {
            let mut parts: Vec<Vec<u64>> = Vec::new();
            let mut member_part = BTreeMap::new();
            for (holder, primes) in row.iter().enumerate() {
                if primes.is_empty() {
                    continue;
                }
                let part = match parts.iter().position(|p| p.as_slice() == *primes) {
                    Some(i) => i,
                    None => {
                        parts.push(primes.to_vec());
                        parts.len() - 1
                    }
                };
                member_part.insert(holder, part);
            }
            let parts = parts
                .iter()
                .map(|ps| {
                    ps.iter()
                        .map(|&p| {
                            prime_index(&p).ok_or_else(|| SplitError::InvalidSlot(format!("{p} is not prime")))
                        })
                        .collect()
                })
                .collect::<Result<Vec<_>, _>>()?;
            SlotAssignment::new(parts, member_part, 12)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SlotPlan::new(universe, 12, slots)
}

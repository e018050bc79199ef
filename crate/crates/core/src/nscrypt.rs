//! The Naccache-Stern knapsack cryptosystem.
//!
//! A private key is a list of small primes `p_0 < p_1 < ...`, a prime
//! modulus `p` larger than their product, and an exponent `s` coprime to
//! `p - 1`. The public values are `v_i = p_i^(1/s) mod p`. A message is a
//! bit vector: bit `i` selects `p_i`, and the ciphertext is the product of
//! the selected `v_i`. Raising the ciphertext to `s` yields the product of
//! the selected primes, which is read back by trial division.
//!
//! Key shares restrict that trial division to a subset of the primes, so a
//! share holder only learns the message bits its subset covers.

use rand::Rng;

use crate::numtheory::{
    self, checked_product, first_n_primes, is_probable_prime, mod_inv, mod_pow, Natural,
    NumError, DEFAULT_MR_ROUNDS,
};

/// Supported range for the number of primes in a key.
pub const MIN_PRIMES: usize = 2;
pub const MAX_PRIMES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("prime count {0} outside the supported range {MIN_PRIMES}..={MAX_PRIMES}")]
    PrimeCount(usize),
    #[error("modulus is not prime")]
    ModulusNotPrime,
    #[error("modulus must exceed the product of the key primes")]
    ModulusTooSmall,
    #[error("secret exponent must lie in (1, p - 1) and be coprime to p - 1")]
    BadExponent,
    #[error("key primes must be the first n primes in increasing order")]
    NonConsecutivePrimes,
    #[error("public value {index} is out of range")]
    PublicValueOutOfRange { index: usize },
    #[error("private key does not match public key")]
    KeyMismatch,
    #[error("plaintext must satisfy 0 < m < 2^{bits}")]
    PlaintextOutOfRange { bits: usize },
    #[error("ciphertext must satisfy 1 <= c < p")]
    CiphertextOutOfRange,
    #[error("ciphertext does not decrypt to a product of key primes")]
    MalformedCiphertext,
    #[error("prime subset is empty or not drawn from the key primes")]
    BadPrimeSubset,
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Plaintext<T>(pub T);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ciphertext<T>(pub T);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsPublicKey<T> {
    modulus: T,
    values: Vec<T>,
}

impl<T: Natural> NsPublicKey<T> {
    pub fn new(modulus: T, values: Vec<T>) -> Result<Self, CryptoError> {
        if !(MIN_PRIMES..=MAX_PRIMES).contains(&values.len()) {
            return Err(CryptoError::PrimeCount(values.len()));
        }
        if !is_probable_prime(&modulus, DEFAULT_MR_ROUNDS) {
            return Err(CryptoError::ModulusNotPrime);
        }
        if let Some(index) = values.iter().position(|v| v.is_zero() || *v >= modulus) {
            return Err(CryptoError::PublicValueOutOfRange { index });
        }
        Ok(Self { modulus, values })
    }

    pub fn modulus(&self) -> &T {
        &self.modulus
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn prime_count(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsPrivateKey<T> {
    modulus: T,
    exponent: T,
    primes: Vec<T>,
}

impl<T: Natural> NsPrivateKey<T> {
    /// Validates and assembles a private key. The primes must be the first
    /// `n` primes, because bit positions are derived from prime values.
    pub fn new(modulus: T, exponent: T, primes: Vec<T>) -> Result<Self, CryptoError> {
        let n = primes.len();
        if !(MIN_PRIMES..=MAX_PRIMES).contains(&n) {
            return Err(CryptoError::PrimeCount(n));
        }
        if primes != first_n_primes::<T>(n) {
            return Err(CryptoError::NonConsecutivePrimes);
        }
        check_modulus(&modulus, &primes)?;
        check_exponent(&exponent, &modulus)?;
        Ok(Self {
            modulus,
            exponent,
            primes,
        })
    }

    pub fn modulus(&self) -> &T {
        &self.modulus
    }

    pub fn exponent(&self) -> &T {
        &self.exponent
    }

    pub fn primes(&self) -> &[T] {
        &self.primes
    }

    pub fn prime_count(&self) -> usize {
        self.primes.len()
    }

    /// Derives the matching public key, `v_i = p_i^(s^-1 mod (p-1)) mod p`.
    pub fn public_key(&self) -> Result<NsPublicKey<T>, CryptoError> {
        let order = self.modulus.clone() - T::one();
        let root = mod_inv(&self.exponent, &order)?;
        let values = self
            .primes
            .iter()
            .map(|q| mod_pow(q, &root, &self.modulus))
            .collect::<Result<Vec<_>, _>>()?;
        NsPublicKey::new(self.modulus.clone(), values)
    }

    /// Checks `v_i^s = p_i (mod p)` for every public value.
    pub fn matches(&self, public: &NsPublicKey<T>) -> bool {
        public.modulus == self.modulus
            && public.values.len() == self.primes.len()
            && public.values.iter().zip(&self.primes).all(|(v, q)| {
                mod_pow(v, &self.exponent, &self.modulus).as_ref() == Ok(q)
            })
    }
}

fn check_modulus<T: Natural>(modulus: &T, primes: &[T]) -> Result<(), CryptoError> {
    let product = checked_product(primes).ok_or(NumError::Overflow)?;
    if *modulus <= product {
        return Err(CryptoError::ModulusTooSmall);
    }
    if !is_probable_prime(modulus, DEFAULT_MR_ROUNDS) {
        return Err(CryptoError::ModulusNotPrime);
    }
    Ok(())
}

fn check_exponent<T: Natural>(exponent: &T, modulus: &T) -> Result<(), CryptoError> {
    let order = modulus.clone() - T::one();
    if exponent.is_zero() || exponent.is_one() || *exponent >= order || !numtheory::gcd(exponent, &order).is_one() {
        return Err(CryptoError::BadExponent);
    }
    Ok(())
}

/// How the prime modulus is chosen during key generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModulusChoice<T> {
    /// Least prime above the product of the key primes.
    LeastAbove,
    /// Uniformly random prime in `(P, 2P)`, `P` the product of the key primes.
    RandomAbove,
    Fixed(T),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeySpec<T> {
    pub prime_count: usize,
    pub modulus: ModulusChoice<T>,
    /// Forced secret exponent; drawn at random when absent.
    pub exponent: Option<T>,
}

impl<T> KeySpec<T> {
    pub fn new(prime_count: usize) -> Self {
        Self {
            prime_count,
            modulus: ModulusChoice::LeastAbove,
            exponent: None,
        }
    }
}

pub fn keygen<T: Natural, R: Rng + ?Sized>(
    spec: &KeySpec<T>,
    rng: &mut R,
) -> Result<(NsPublicKey<T>, NsPrivateKey<T>), CryptoError> {
    let n = spec.prime_count;
    if !(MIN_PRIMES..=MAX_PRIMES).contains(&n) {
        return Err(CryptoError::PrimeCount(n));
    }
    let primes = first_n_primes::<T>(n);
    let product = checked_product(&primes).ok_or(NumError::Overflow)?;

    let modulus = match &spec.modulus {
        ModulusChoice::Fixed(p) => p.clone(),
        ModulusChoice::LeastAbove => numtheory::next_prime_above(&product)?,
        ModulusChoice::RandomAbove => {
            product.checked_add(&product).ok_or(NumError::Overflow)?;
            let span = product.clone() - T::one();
            loop {
                let candidate = product.clone() + T::one() + T::random_below(rng, &span);
                if is_probable_prime(&candidate, DEFAULT_MR_ROUNDS) {
                    break candidate;
                }
            }
        }
    };
    check_modulus(&modulus, &primes)?;

    let exponent = match &spec.exponent {
        Some(s) => s.clone(),
        None => {
            let order = modulus.clone() - T::one();
            let two = numtheory::small::<T>(2);
            let span = order.clone() - two.clone();
            loop {
                let s = two.clone() + T::random_below(rng, &span);
                if numtheory::gcd(&s, &order).is_one() {
                    break s;
                }
            }
        }
    };

    let private = NsPrivateKey::new(modulus, exponent, primes)?;
    let public = private.public_key()?;
    Ok((public, private))
}

/// `c = prod { v_i : bit i of m is set } mod p`.
pub fn encrypt<T: Natural>(
    public: &NsPublicKey<T>,
    message: &Plaintext<T>,
) -> Result<Ciphertext<T>, CryptoError> {
    let n = public.prime_count();
    let m = &message.0;
    if m.is_zero() || m.bit_len() > n as u64 {
        return Err(CryptoError::PlaintextOutOfRange { bits: n });
    }
    let c = public
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| m.test_bit(*i as u64))
        .fold(T::one(), |acc, (_, v)| acc.mul_mod(v, &public.modulus));
    Ok(Ciphertext(c))
}

fn check_ciphertext<T: Natural>(c: &Ciphertext<T>, modulus: &T) -> Result<(), CryptoError> {
    if c.0.is_zero() || c.0 >= *modulus {
        return Err(CryptoError::CiphertextOutOfRange);
    }
    Ok(())
}

/// Full decryption. The residue `c^s mod p` must factor completely over the
/// key primes, each at most once; anything else is rejected as malformed.
pub fn decrypt<T: Natural>(
    private: &NsPrivateKey<T>,
    c: &Ciphertext<T>,
) -> Result<Plaintext<T>, CryptoError> {
    check_ciphertext(c, &private.modulus)?;
    let mut residue = mod_pow(&c.0, &private.exponent, &private.modulus)?;
    let mut m = T::zero();
    for (i, q) in private.primes.iter().enumerate() {
        let (quotient, rem) = residue.div_rem(q);
        if rem.is_zero() {
            residue = quotient;
            m = m | (T::one() << i);
        }
    }
    if !residue.is_one() {
        return Err(CryptoError::MalformedCiphertext);
    }
    Ok(Plaintext(m))
}

/// Primes of a key share, each paired with its bit position in the full
/// system prime list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimeSubset<T> {
    entries: Vec<(usize, T)>,
}

impl<T: Natural> PrimeSubset<T> {
    /// Builds a subset from bit positions into `system_primes`.
    pub fn from_indices(
        indices: impl IntoIterator<Item = usize>,
        system_primes: &[T],
    ) -> Result<Self, CryptoError> {
        let mut entries = indices
            .into_iter()
            .map(|i| {
                system_primes
                    .get(i)
                    .map(|q| (i, q.clone()))
                    .ok_or(CryptoError::BadPrimeSubset)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::normalize(&mut entries)?;
        Ok(Self { entries })
    }

    /// Builds a subset from prime values; positions follow the ascending
    /// sequence of all primes, which is how key primes are laid out.
    pub fn from_primes(primes: impl IntoIterator<Item = T>) -> Result<Self, CryptoError> {
        let mut entries = primes
            .into_iter()
            .map(|q| {
                numtheory::prime_index(&q)
                    .filter(|&i| i < MAX_PRIMES)
                    .map(|i| (i, q))
                    .ok_or(CryptoError::BadPrimeSubset)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::normalize(&mut entries)?;
        Ok(Self { entries })
    }

    fn normalize(entries: &mut Vec<(usize, T)>) -> Result<(), CryptoError> {
        entries.sort_by_key(|(i, _)| *i);
        entries.dedup_by_key(|(i, _)| *i);
        if entries.is_empty() {
            return Err(CryptoError::BadPrimeSubset);
        }
        Ok(())
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }

    pub fn primes(&self) -> impl Iterator<Item = &T> + '_ {
        self.entries.iter().map(|(_, q)| q)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest bit position covered.
    pub fn max_index(&self) -> usize {
        self.entries.last().map(|(i, _)| *i).unwrap_or(0)
    }

    /// The share holder's contribution: bits `i` with `p_i` in this subset
    /// and `p_i | c^s mod p`. Bit positions refer to the full prime list.
    pub fn contribution(
        &self,
        modulus: &T,
        exponent: &T,
        c: &Ciphertext<T>,
    ) -> Result<T, CryptoError> {
        let residue = mod_pow(&c.0, exponent, modulus)?;
        Ok(self
            .entries
            .iter()
            .filter(|(_, q)| residue.is_multiple_of(q))
            .fold(T::zero(), |m, (i, _)| m | (T::one() << *i)))
    }
}

/// A holder's share `(P_j, s)` of the private key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyShare<T> {
    pub holder: String,
    pub modulus: T,
    pub exponent: T,
    /// Number of primes in the system key.
    pub prime_count: usize,
    pub subset: PrimeSubset<T>,
}

pub fn partial_decrypt<T: Natural>(share: &KeyShare<T>, c: &Ciphertext<T>) -> T {
    share
        .subset
        .contribution(&share.modulus, &share.exponent, c)
        .expect("share modulus is non-zero")
}

/// Primes selected by the set bits of `m`, in increasing order.
pub fn bit_primes<T: Natural>(m: &Plaintext<T>, primes: &[T]) -> Vec<T> {
    primes
        .iter()
        .enumerate()
        .filter(|(i, _)| m.0.test_bit(*i as u64))
        .map(|(_, q)| q.clone())
        .collect()
}

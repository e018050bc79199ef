//! Exact integer arithmetic for the cryptosystem.
//!
//! Everything here is generic over [`Natural`], which is implemented for
//! `u32`, `u64` and [`BigUint`]. Machine-word implementations widen
//! internally for modular multiplication, so any modulus representable in
//! the type is safe; values that outgrow the type surface as
//! [`NumError::Overflow`] rather than wrapping.

use std::fmt::{Debug, Display};
use std::ops::{BitOr, BitXor, Shl};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, FromPrimitive, ToPrimitive, Unsigned};
use rand::Rng;

/// Miller-Rabin rounds used above the deterministic range.
pub const DEFAULT_MR_ROUNDS: usize = 40;

/// Witness set that makes Miller-Rabin exact for every n < 3.3 * 10^24.
const DETERMINISTIC_WITNESSES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumError {
    #[error("modulus must be non-zero")]
    ZeroModulus,
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    #[error("value is not invertible modulo the given modulus")]
    NotInvertible,
    #[error("result does not fit in the scalar type")]
    Overflow,
}

/// Unsigned integer usable as the scalar type of the whole crate.
pub trait Natural:
    Clone
    + Ord
    + Debug
    + Display
    + Integer
    + Unsigned
    + FromPrimitive
    + ToPrimitive
    + CheckedAdd
    + CheckedMul
    + BitOr<Output = Self>
    + BitXor<Output = Self>
    + Shl<usize, Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `self * rhs mod modulus` without intermediate overflow.
    fn mul_mod(&self, rhs: &Self, modulus: &Self) -> Self;

    /// Number of significant bits (0 for zero).
    fn bit_len(&self) -> u64;

    fn test_bit(&self, bit: u64) -> bool;

    /// Uniform draw from `[0, bound)`; `bound` must be non-zero.
    fn random_below<R: Rng + ?Sized>(rng: &mut R, bound: &Self) -> Self;

    /// `2^bit`, or `None` if it does not fit.
    fn power_of_two(bit: usize) -> Option<Self>;
}

macro_rules! impl_natural_for_word {
    ($word:ty, $wide:ty) => {
        impl Natural for $word {
            fn mul_mod(&self, rhs: &Self, modulus: &Self) -> Self {
                ((*self as $wide) * (*rhs as $wide) % (*modulus as $wide)) as $word
            }

            fn bit_len(&self) -> u64 {
                u64::from(<$word>::BITS - self.leading_zeros())
            }

            fn test_bit(&self, bit: u64) -> bool {
                bit < u64::from(<$word>::BITS) && (self >> bit) & 1 == 1
            }

            fn random_below<R: Rng + ?Sized>(rng: &mut R, bound: &Self) -> Self {
                rng.gen_range(0..*bound)
            }

            fn power_of_two(bit: usize) -> Option<Self> {
                (bit < <$word>::BITS as usize).then(|| 1 << bit)
            }
        }
    };
}

impl_natural_for_word!(u32, u64);
impl_natural_for_word!(u64, u128);

impl Natural for BigUint {
    fn mul_mod(&self, rhs: &Self, modulus: &Self) -> Self {
        (self * rhs) % modulus
    }

    fn bit_len(&self) -> u64 {
        self.bits()
    }

    fn test_bit(&self, bit: u64) -> bool {
        self.bit(bit)
    }

    fn random_below<R: Rng + ?Sized>(rng: &mut R, bound: &Self) -> Self {
        rng.gen_biguint_below(bound)
    }

    fn power_of_two(bit: usize) -> Option<Self> {
        Some(BigUint::from(1u8) << bit)
    }
}

pub(crate) fn small<T: Natural>(value: u32) -> T {
    T::from_u32(value).expect("every Natural holds u32 values")
}

/// `base^exponent mod modulus` by left-to-right square-and-multiply.
pub fn mod_pow<T: Natural>(base: &T, exponent: &T, modulus: &T) -> Result<T, NumError> {
    if modulus.is_zero() {
        return Err(NumError::ZeroModulus);
    }
    if modulus.is_one() {
        return Ok(T::zero());
    }
    let base = base.mod_floor(modulus);
    let mut acc = T::one();
    for bit in (0..exponent.bit_len()).rev() {
        acc = acc.mul_mod(&acc, modulus);
        if exponent.test_bit(bit) {
            acc = acc.mul_mod(&base, modulus);
        }
    }
    Ok(acc)
}

/// Inverse of `a` modulo `m` via the extended Euclidean algorithm.
///
/// The Bezout coefficient is tracked modulo `m` so that the computation
/// stays within unsigned arithmetic.
pub fn mod_inv<T: Natural>(a: &T, m: &T) -> Result<T, NumError> {
    if *m < small(2) {
        return Err(NumError::ModulusTooSmall);
    }
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (T::zero(), T::one());
    while !r1.is_zero() {
        let (q, r2) = r0.div_rem(&r1);
        let qt = q.mod_floor(m).mul_mod(&t1, m);
        let t2 = if t0 >= qt {
            t0 - qt
        } else {
            m.clone() - (qt - t0)
        };
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if !r0.is_one() {
        return Err(NumError::NotInvertible);
    }
    Ok(t0)
}

/// Greatest common divisor, with `gcd(0, 0) = 0`.
pub fn gcd<T: Natural>(a: &T, b: &T) -> T {
    a.gcd(b)
}

/// Miller-Rabin primality test.
///
/// Exact below 2^64 (fixed witness set); above that, `rounds` random
/// witnesses bound the false-positive rate by `4^-rounds`.
pub fn is_probable_prime<T: Natural>(n: &T, rounds: usize) -> bool {
    if *n < small(2) {
        return false;
    }
    for &w in &DETERMINISTIC_WITNESSES {
        let w: T = small(w);
        if *n == w {
            return true;
        }
        if n.is_multiple_of(&w) {
            return false;
        }
    }

    let n_minus_one = n.clone() - T::one();
    let two: T = small(2);
    let mut d = n_minus_one.clone();
    let mut twos = 0u32;
    while d.is_even() {
        d = d / two.clone();
        twos += 1;
    }

    let passes = |witness: &T| -> bool {
        let mut x = mod_pow(witness, &d, n).expect("n >= 2");
        if x.is_one() || x == n_minus_one {
            return true;
        }
        for _ in 1..twos {
            x = x.mul_mod(&x, n);
            if x == n_minus_one {
                return true;
            }
        }
        false
    };

    if n.bit_len() <= 64 {
        return DETERMINISTIC_WITNESSES
            .iter()
            .all(|&w| passes(&small(w)));
    }

    let mut rng = rand::thread_rng();
    // witnesses drawn from [2, n - 2]
    let span = n.clone() - small(3);
    (0..rounds.max(1)).all(|_| {
        let witness = T::random_below(&mut rng, &span) + two.clone();
        passes(&witness)
    })
}

/// Least prime strictly greater than `x`.
pub fn next_prime_above<T: Natural>(x: &T) -> Result<T, NumError> {
    let two: T = small(2);
    if *x < two {
        return Ok(two);
    }
    let mut candidate = x.checked_add(&T::one()).ok_or(NumError::Overflow)?;
    if candidate.is_even() {
        candidate = candidate.checked_add(&T::one()).ok_or(NumError::Overflow)?;
    }
    while !is_probable_prime(&candidate, DEFAULT_MR_ROUNDS) {
        candidate = candidate.checked_add(&two).ok_or(NumError::Overflow)?;
    }
    Ok(candidate)
}

/// The first `n` primes in increasing order.
pub fn first_n_primes<T: Natural>(n: usize) -> Vec<T> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
        .into_iter()
        .map(|p| T::from_u64(p).expect("small primes fit every Natural"))
        .collect()
}

/// Position of `prime` in the ascending sequence of all primes, counting from 0.
///
/// Returns `None` when `prime` is not prime. Only meant for the small primes
/// that make up a key's prime list.
pub fn prime_index<T: Natural>(prime: &T) -> Option<usize> {
    let value = prime.to_u64()?;
    if !is_probable_prime(&value, DEFAULT_MR_ROUNDS) {
        return None;
    }
    Some((2..value).filter(|&k| is_probable_prime(&k, 1)).count())
}

/// Product of the values, or `None` on overflow.
pub fn checked_product<'a, T: Natural>(values: impl IntoIterator<Item = &'a T>) -> Option<T> {
    values
        .into_iter()
        .try_fold(T::one(), |acc, v| acc.checked_mul(v))
}

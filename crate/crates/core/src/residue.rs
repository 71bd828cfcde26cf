//! Arithmetic in Z_M with M = 2^64.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use rand::distr::{Distribution, StandardUniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Number of bits in the modulus. All protocol values live in Z_{2^64}.
pub const MODULUS_BITS: u32 = 64;

/// A residue modulo 2^64. Addition and subtraction wrap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Residue(pub u64);

impl Residue {
    pub const ZERO: Residue = Residue(0);

    pub const fn new(value: u64) -> Self {
        Residue(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    /// Most significant bit, used by the uniformity smoke tests.
    pub const fn high_bit(self) -> bool {
        self.0 >> 63 == 1
    }
}

impl From<u64> for Residue {
    fn from(v: u64) -> Self {
        Residue(v)
    }
}

impl From<Residue> for u64 {
    fn from(r: Residue) -> Self {
        r.0
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Add for Residue {
    type Output = Residue;
    fn add(self, rhs: Residue) -> Residue {
        Residue(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for Residue {
    fn add_assign(&mut self, rhs: Residue) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for Residue {
    type Output = Residue;
    fn sub(self, rhs: Residue) -> Residue {
        Residue(self.0.wrapping_sub(rhs.0))
    }
}

impl SubAssign for Residue {
    fn sub_assign(&mut self, rhs: Residue) {
        self.0 = self.0.wrapping_sub(rhs.0);
    }
}

impl Neg for Residue {
    type Output = Residue;
    fn neg(self) -> Residue {
        Residue(self.0.wrapping_neg())
    }
}

impl Sum for Residue {
    fn sum<I: Iterator<Item = Residue>>(iter: I) -> Residue {
        iter.fold(Residue::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Residue> for Residue {
    fn sum<I: Iterator<Item = &'a Residue>>(iter: I) -> Residue {
        iter.copied().sum()
    }
}

impl Distribution<Residue> for StandardUniform {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Residue {
        Residue(rng.random())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_at_modulus() {
        assert_eq!(Residue(u64::MAX) + Residue(2), Residue(1));
        assert_eq!(Residue(0) - Residue(1), Residue(u64::MAX));
        assert_eq!(-Residue(1), Residue(u64::MAX));
    }

    #[test]
    fn sum_matches_u128_reduction() {
        let xs = [u64::MAX, u64::MAX - 7, 12345, 1 << 63];
        let expected = (xs.iter().map(|&x| x as u128).sum::<u128>() % (1u128 << 64)) as u64;
        let got: Residue = xs.iter().map(|&x| Residue(x)).sum();
        assert_eq!(got.value(), expected);
    }
}

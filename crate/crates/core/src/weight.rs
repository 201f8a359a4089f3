//! Coefficient arithmetic for the transfer loop.
//!
//! Weights only ever grow by `acc += k * x` with a small integer `k`, so the
//! transfer loop needs nothing beyond that operation. Exact counts stay in a
//! `u128` until they overflow; residue mode keeps one word per modulus.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

pub trait WeightArith: Send + Sync {
    type Elem: Clone + Send + Sync + std::fmt::Debug + PartialEq;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, x: &Self::Elem) -> bool;
    /// `acc += k * x`
    fn add_scaled(&self, acc: &mut Self::Elem, x: &Self::Elem, k: u64);
    fn add_assign(&self, acc: &mut Self::Elem, x: &Self::Elem) {
        self.add_scaled(acc, x, 1);
    }
}

/// Natural number with an inline fast path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Natural {
    Small(u128),
    Big(BigUint),
}

impl Natural {
    pub fn to_biguint(&self) -> BigUint {
        match self {
            Natural::Small(v) => BigUint::from(*v),
            Natural::Big(b) => b.clone(),
        }
    }

    fn normalize(b: BigUint) -> Natural {
        match b.to_u128() {
            Some(v) => Natural::Small(v),
            None => Natural::Big(b),
        }
    }
}

impl From<BigUint> for Natural {
    fn from(b: BigUint) -> Self {
        Natural::normalize(b)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Exact;

impl WeightArith for Exact {
    type Elem = Natural;

    fn zero(&self) -> Natural {
        Natural::Small(0)
    }

    fn one(&self) -> Natural {
        Natural::Small(1)
    }

    fn is_zero(&self, x: &Natural) -> bool {
        match x {
            Natural::Small(v) => *v == 0,
            Natural::Big(b) => b.is_zero(),
        }
    }

    fn add_scaled(&self, acc: &mut Natural, x: &Natural, k: u64) {
        if let (Natural::Small(a), Natural::Small(v)) = (&*acc, x) {
            if let Some(s) = v.checked_mul(k as u128).and_then(|p| p.checked_add(*a)) {
                *acc = Natural::Small(s);
                return;
            }
        }
        let sum = acc.to_biguint() + x.to_biguint() * k;
        *acc = Natural::Big(sum);
    }
}

/// Residues modulo a fixed list of word-sized moduli.
#[derive(Clone, Debug)]
pub struct Residues {
    moduli: Vec<u64>,
}

pub type ResidueVec = SmallVec<[u64; 2]>;

impl Residues {
    pub fn new(moduli: Vec<u64>) -> Self {
        assert!(moduli.iter().all(|&m| m >= 2), "moduli must be at least 2");
        Residues { moduli }
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }
}

impl WeightArith for Residues {
    type Elem = ResidueVec;

    fn zero(&self) -> ResidueVec {
        self.moduli.iter().map(|_| 0).collect()
    }

    fn one(&self) -> ResidueVec {
        self.moduli.iter().map(|_| 1).collect()
    }

    fn is_zero(&self, x: &ResidueVec) -> bool {
        x.iter().all(|&v| v == 0)
    }

    fn add_scaled(&self, acc: &mut ResidueVec, x: &ResidueVec, k: u64) {
        for ((a, &v), &m) in acc.iter_mut().zip(x).zip(&self.moduli) {
            let m = m as u128;
            *a = ((*a as u128 + (v as u128) * (k as u128 % m)) % m) as u64;
        }
    }
}

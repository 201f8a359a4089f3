//! Reinsertion of tadpoles into tadpole-free counts.
//!
//! Any diagram is a tadpole-free diagram with a (possibly empty) chain of
//! tadpole decorations on each edge. The decorations of one edge have the
//! generating function `D = 1 + 2 g1 D^2`, a diagram with `n` vertices has
//! `2n` edges plus the base edge, and so
//! `G(g1, g2) = D(g1) H(g1 D^2, g2 D^2)`.
//!
//! Only ring operations appear, so the same code restores residues.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::table::{mod_u64, CoefficientTable, Count};
use crate::truncation::Truncation;

pub trait CountRing {
    type E: Clone;
    fn zero(&self) -> Self::E;
    fn embed(&self, v: u64) -> Self::E;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn sub(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
}

pub struct Integers;

impl CountRing for Integers {
    type E = BigInt;
    fn zero(&self) -> BigInt {
        BigInt::from(0)
    }
    fn embed(&self, v: u64) -> BigInt {
        BigInt::from(v)
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
}

pub struct Modular(pub u64);

impl CountRing for Modular {
    type E = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn embed(&self, v: u64) -> u64 {
        v % self.0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % self.0 as u128) as u64
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + self.0 as u128 - *b as u128) % self.0 as u128) as u64
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.0 as u128) as u64
    }
}

pub type Series2<E> = BTreeMap<(usize, usize), E>;

fn get<R: CountRing>(r: &R, s: &Series2<R::E>, i: (usize, usize)) -> R::E {
    s.get(&i).cloned().unwrap_or_else(|| r.zero())
}

/// Coefficients of `D` up to `g1^n`.
fn decoration<R: CountRing>(r: &R, n: usize) -> Vec<R::E> {
    let mut d = vec![r.embed(1)];
    let two = r.embed(2);
    for k in 1..=n {
        let mut acc = r.zero();
        for i in 0..k {
            acc = r.add(&acc, &r.mul(&d[i], &d[k - 1 - i]));
        }
        d.push(r.mul(&two, &acc));
    }
    d
}

fn mul1<R: CountRing>(r: &R, a: &[R::E], b: &[R::E]) -> Vec<R::E> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| {
            (0..=k).fold(r.zero(), |acc, i| r.add(&acc, &r.mul(&a[i], &b[k - i])))
        })
        .collect()
}

/// Full counts from tadpole-free counts on the same index set.
pub fn restore<R: CountRing>(r: &R, h: &Series2<R::E>, trunc: &Truncation) -> Series2<R::E> {
    let n = trunc.max_order;
    let d = decoration(r, n);
    // powers[m] = D^m, m up to 2n + 1
    let mut powers = vec![{
        let mut one = vec![r.zero(); n + 1];
        one[0] = r.embed(1);
        one
    }];
    for m in 1..=2 * n + 1 {
        let next = mul1(r, &powers[m - 1], &d);
        powers.push(next);
    }
    trunc
        .indices()
        .into_iter()
        .map(|(p1, p2)| {
            let mut acc = r.zero();
            for q1 in 0..=p1 {
                let hq = get(r, h, (q1, p2));
                let m = 2 * (q1 + p2) + 1;
                acc = r.add(&acc, &r.mul(&hq, &powers[m][p1 - q1]));
            }
            ((p1, p2), acc)
        })
        .collect()
}

/// `1 / a` for `a` with constant term 1, on a downward closed index set.
pub fn inverse<R: CountRing>(r: &R, a: &Series2<R::E>, trunc: &Truncation) -> Series2<R::E> {
    let mut inv: Series2<R::E> = BTreeMap::new();
    for (p1, p2) in trunc.indices() {
        if (p1, p2) == (0, 0) {
            inv.insert((0, 0), r.embed(1));
            continue;
        }
        let mut acc = r.zero();
        for q1 in 0..=p1 {
            for q2 in 0..=p2 {
                if (q1, q2) == (0, 0) {
                    continue;
                }
                let term = r.mul(&get(r, a, (q1, q2)), &get(r, &inv, (p1 - q1, p2 - q2)));
                acc = r.add(&acc, &term);
            }
        }
        inv.insert((p1, p2), r.sub(&r.zero(), &acc));
    }
    inv
}

/// Restores a first-return series: `S_H -> H -> G -> S`.
pub fn restore_first_return<R: CountRing>(
    r: &R,
    s: &Series2<R::E>,
    trunc: &Truncation,
) -> Series2<R::E> {
    let one_minus: Series2<R::E> = trunc
        .indices()
        .into_iter()
        .map(|i| {
            let v = get(r, s, i);
            let c = if i == (0, 0) { r.embed(1) } else { r.zero() };
            (i, r.sub(&c, &v))
        })
        .collect();
    let h = inverse(r, &one_minus, trunc);
    let g = restore(r, &h, trunc);
    let ginv = inverse(r, &g, trunc);
    ginv.into_iter()
        .map(|(i, v)| {
            let c = if i == (0, 0) { r.embed(1) } else { r.zero() };
            (i, r.sub(&c, &v))
        })
        .collect()
}

fn restore_any<R: CountRing>(r: &R, s: &Series2<R::E>, first_return: bool, t: &Truncation) -> Series2<R::E> {
    if first_return {
        restore_first_return(r, s, t)
    } else {
        restore(r, s, t)
    }
}

/// Restores a tadpole-free table in place of its counts.
pub fn restore_table(table: &CoefficientTable) -> CoefficientTable {
    if !table.tadpole_free {
        return table.clone();
    }
    let trunc = table.options.truncation();
    let fr = table.options.first_return;
    let entries = if table.is_exact() {
        let s: Series2<BigInt> = table
            .entries
            .iter()
            .map(|(&i, c)| (i, BigInt::from(c.as_exact().expect("exact").clone())))
            .collect();
        restore_any(&Integers, &s, fr, &trunc)
            .into_iter()
            .map(|(i, v)| {
                let v = v.to_biguint().expect("restored counts are nonnegative");
                (i, Count::Exact(v))
            })
            .collect()
    } else {
        let width = match table.entries.values().next() {
            Some(Count::Residues(r)) => r.len(),
            _ => 0,
        };
        let moduli = match &table.options.arithmetic {
            crate::transfer::Arithmetic::Residues { moduli } => moduli.clone(),
            crate::transfer::Arithmetic::Exact => Vec::new(),
        };
        assert_eq!(width, moduli.len(), "residue width matches moduli");
        let per_mod: Vec<Series2<u64>> = moduli
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let s: Series2<u64> = table
                    .entries
                    .iter()
                    .map(|(&i, c)| match c {
                        Count::Residues(r) => (i, r[k]),
                        Count::Exact(v) => (i, mod_u64(&BigInt::from(v.clone()), m)),
                    })
                    .collect();
                restore_any(&Modular(m), &s, fr, &trunc)
            })
            .collect();
        table
            .entries
            .keys()
            .map(|i| (*i, Count::Residues(per_mod.iter().map(|s| s[i]).collect())))
            .collect()
    };
    CoefficientTable {
        options: table.options.clone(),
        tadpole_free: false,
        entries,
        peak_states: table.peak_states.clone(),
    }
}

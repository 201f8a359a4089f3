//! Exact truncated power series and the tangle renormalisation.
//!
//! One-variable series in `g` carry their truncation order. Two-variable
//! series in `(g1, g2)` carry the set of known coefficients instead: any
//! operation that would read an unknown coefficient either drops the result
//! (products, sums) or reports the missing index (composition).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::CoefficientTable;

pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("series with zero constant term is not invertible")]
    NotInvertible,
    #[error("inner series of a composition must vanish at 0")]
    BadInner,
    #[error("coefficient ({p1}, {p2}) is needed at order {order} but not known")]
    MissingCoefficient { p1: usize, p2: usize, order: usize },
    #[error("table is not exact")]
    NotExact,
    #[error("G must start with 1")]
    BadConstant,
    #[error("{what} failed its consistency check at order {order}")]
    Residual { what: &'static str, order: usize },
    #[error("fixed point did not settle within {0} iterations")]
    NoConvergence(usize),
    #[error("{name} coefficient at order {order} is {value}, expected a nonnegative integer")]
    NotCounting {
        name: &'static str,
        order: usize,
        value: String,
    },
    #[error("bad series file: {0}")]
    Format(String),
}

fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// File form: coefficients as decimal strings (`n` or `n/d`) through `order`.
#[derive(Serialize, Deserialize)]
struct SeriesFile {
    order: usize,
    coefficients: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<Q>,
}

impl TruncatedSeries {
    /// Series known through order `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<Q>) -> Self {
        assert!(!coeffs.is_empty(), "a series knows at least its constant term");
        TruncatedSeries { coeffs }
    }

    pub fn from_integers<I, T>(values: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        Self::new(values.into_iter().map(|v| Q::from_integer(v.into())).collect())
    }

    pub fn zero(order: usize) -> Self {
        Self::new(vec![Q::zero(); order + 1])
    }

    pub fn constant(c: Q, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(Q::one(), order)
    }

    /// `c g^k`
    pub fn monomial(c: Q, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// The variable `g`.
    pub fn var(order: usize) -> Self {
        Self::monomial(Q::one(), 1, order)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(SeriesFile {
            order: self.order(),
            coefficients: self.coeffs.iter().map(|c| c.to_string()).collect(),
        })
        .expect("plain data serializes")
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self, SeriesError> {
        let file: SeriesFile =
            serde_json::from_value(v).map_err(|e| SeriesError::Format(e.to_string()))?;
        if file.coefficients.len() != file.order + 1 {
            return Err(SeriesError::Format(format!(
                "order {} needs {} coefficients, found {}",
                file.order,
                file.order + 1,
                file.coefficients.len()
            )));
        }
        let coeffs = file
            .coefficients
            .iter()
            .map(|c| {
                c.parse::<Q>()
                    .map_err(|_| SeriesError::Format(format!("bad coefficient {c:?}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(TruncatedSeries { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &Q {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.coeffs[..=order.min(self.order())].to_vec())
    }

    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let inv0 = c0.recip();
        let mut r: Vec<Q> = Vec::with_capacity(self.coeffs.len());
        r.push(inv0.clone());
        for n in 1..self.coeffs.len() {
            let mut acc = Q::zero();
            for k in 1..=n {
                if !self.coeffs[k].is_zero() {
                    acc += &self.coeffs[k] * &r[n - k];
                }
            }
            r.push(-acc * &inv0);
        }
        Ok(Self::new(r))
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut r = Self::one(self.order());
        for _ in 0..k {
            r = &r * self;
        }
        r
    }

    /// `self(inner(g))`.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::BadInner);
        }
        let order = self.order().min(inner.order());
        let inner = inner.truncate(order);
        let mut acc = Self::zero(order);
        for c in self.coeffs[..=order].iter().rev() {
            acc = &(&acc * &inner) + &Self::constant(c.clone(), order);
        }
        Ok(acc)
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn to_integers(&self) -> Option<Vec<BigInt>> {
        self.coeffs
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect()
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c} g")?,
                _ => write!(f, "{c} g^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(g^{})", self.order() + 1)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        TruncatedSeries::new((0..=n).map(|k| &self.coeffs[k] + &rhs.coeffs[k]).collect())
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        TruncatedSeries::new((0..=n).map(|k| &self.coeffs[k] - &rhs.coeffs[k]).collect())
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        let mut r = vec![Q::zero(); n + 1];
        for (i, a) in self.coeffs[..=n].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs[..=n - i].iter().enumerate() {
                if !b.is_zero() {
                    r[i + j] += a * b;
                }
            }
        }
        TruncatedSeries::new(r)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// Two-variable series with an explicit set of known coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TruncatedSeries2 {
    coeffs: BTreeMap<(usize, usize), Q>,
}

impl TruncatedSeries2 {
    pub fn from_map(coeffs: BTreeMap<(usize, usize), Q>) -> Self {
        TruncatedSeries2 { coeffs }
    }

    pub fn from_table(table: &CoefficientTable) -> Result<Self, SeriesError> {
        let coeffs = table
            .entries
            .iter()
            .map(|(&i, c)| {
                c.as_exact()
                    .map(|v| (i, Q::from_integer(BigInt::from(v.clone()))))
                    .ok_or(SeriesError::NotExact)
            })
            .collect::<Result<_, _>>()?;
        Ok(TruncatedSeries2 { coeffs })
    }

    pub fn get(&self, p1: usize, p2: usize) -> Option<&Q> {
        self.coeffs.get(&(p1, p2))
    }

    pub fn insert(&mut self, p1: usize, p2: usize, c: Q) {
        self.coeffs.insert((p1, p2), c);
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Q> {
        &self.coeffs
    }

    fn known_below(&self, p1: usize, p2: usize) -> bool {
        (0..=p1).all(|i| (0..=p2).all(|j| self.coeffs.contains_key(&(i, j))))
    }

    /// Product, known wherever every contributing coefficient is known.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for &(p1, p2) in self.coeffs.keys() {
            if !self.known_below(p1, p2) || !other.known_below(p1, p2) {
                continue;
            }
            let mut acc = Q::zero();
            for i in 0..=p1 {
                for j in 0..=p2 {
                    let a = &self.coeffs[&(i, j)];
                    if !a.is_zero() {
                        acc += a * &other.coeffs[&(p1 - i, p2 - j)];
                    }
                }
            }
            out.insert((p1, p2), acc);
        }
        TruncatedSeries2 { coeffs: out }
    }

    fn zip(&self, other: &Self, f: impl Fn(&Q, &Q) -> Q) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter_map(|(i, a)| other.coeffs.get(i).map(|b| (*i, f(a, b))))
            .collect();
        TruncatedSeries2 { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// `G(g, 0)` through the longest contiguous known stretch.
    pub fn column(&self) -> TruncatedSeries {
        let coeffs: Vec<Q> = (0..).map_while(|p| self.get(p, 0).cloned()).collect();
        TruncatedSeries::new(if coeffs.is_empty() { vec![Q::zero()] } else { coeffs })
    }

    /// `t^-k F(g1 / t^2, g2 / t^2)` as a series in `g`.
    ///
    /// Every coefficient `(i, j)` whose term can reach the output order is
    /// required; the first missing one is reported.
    pub fn compose_rescaled(
        &self,
        rescale: Rescale,
        g1: &TruncatedSeries,
        g2: &TruncatedSeries,
        t: &TruncatedSeries,
    ) -> Result<TruncatedSeries, SeriesError> {
        let order = g1.order().min(g2.order()).min(t.order());
        let t_inv = t.truncate(order).inverse()?;
        let t_inv2 = &t_inv * &t_inv;
        let u1 = &g1.truncate(order) * &t_inv2;
        let u2 = &g2.truncate(order) * &t_inv2;
        let v1 = u1.valuation();
        let v2 = u2.valuation();
        if v1 == Some(0) || v2 == Some(0) {
            return Err(SeriesError::BadInner);
        }
        let mut acc = TruncatedSeries::zero(order);
        let mut u2j = TruncatedSeries::one(order);
        for j in 0.. {
            let base = match (j, v2) {
                (0, _) => 0,
                (_, None) => break,
                (_, Some(v)) => j * v,
            };
            if base > order {
                break;
            }
            let mut u1i = u2j.clone();
            for i in 0.. {
                let need = match (i, v1) {
                    (0, _) => base,
                    (_, None) => break,
                    (_, Some(v)) => base + i * v,
                };
                if need > order {
                    break;
                }
                let c = self.get(i, j).ok_or(SeriesError::MissingCoefficient {
                    p1: i,
                    p2: j,
                    order,
                })?;
                if !c.is_zero() {
                    acc = &acc + &u1i.scale(c);
                }
                u1i = &u1i * &u1;
            }
            u2j = &u2j * &u2;
        }
        Ok(match rescale {
            Rescale::Plain => acc,
            Rescale::GLike => &acc * &t_inv,
            Rescale::GammaLike => &acc * &t_inv2,
        })
    }
}

/// Prefactor applied by [`TruncatedSeries2::compose_rescaled`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rescale {
    Plain,
    /// `t^-1`, for two-leg functions.
    GLike,
    /// `t^-2`, for four-leg functions.
    GammaLike,
}

/// One-particle-irreducible part: `G = 1 / (1 - S1)`.
#[allow(non_snake_case)]
pub fn sigma1_from_G(g: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
    if !g.coeff(0).is_one() {
        return Err(SeriesError::BadConstant);
    }
    Ok(&TruncatedSeries::one(g.order()) - &g.inverse()?)
}

#[allow(non_snake_case)]
pub fn G_from_sigma1(s1: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
    (&TruncatedSeries::one(s1.order()) - s1).inverse()
}

/// Skeleton part `S2`, defined by `G(g) = 1 + S2(g G(g)^2)`.
///
/// Solved as the fixed point of `S <- G(g / (1 + S)^2) - 1`, which gains at
/// least one order per pass.
#[allow(non_snake_case)]
pub fn sigma2_from_G(g: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
    if !g.coeff(0).is_one() {
        return Err(SeriesError::BadConstant);
    }
    let n = g.order();
    let one = TruncatedSeries::one(n);
    let x = TruncatedSeries::var(n);
    let mut s = TruncatedSeries::zero(n);
    for _ in 0..=n + 1 {
        let d = (&one + &s).inverse()?;
        let arg = &x * &(&d * &d);
        s = &g.compose(&arg)? - &one;
    }
    // forward check: G = 1 + S(g G^2)
    let back = &one + &s.compose(&(&x * &(g * g)))?;
    if let Some(k) = (0..=n).find(|&k| back.coeff(k) != g.coeff(k)) {
        return Err(SeriesError::Residual {
            what: "skeleton expansion",
            order: k,
        });
    }
    Ok(s)
}

/// Splits the four-leg function obtained by cutting one vertex into the
/// parts where the two cut strands are joined by a crossing (`G1`) or by a
/// tangency (`G2`).
///
/// Marking a vertex of an `(i+1, j)` or `(i, j+1)` diagram and cutting it
/// open gives `2 (i + j + 1)` ordered choices, hence
/// `G2[i, j] = (i+1) a[i+1, j] / (2(i+j+1))` and
/// `G1[i, j] + G2[i, j] = (j+1) a[i, j+1] / (2(i+j+1))`.
#[allow(non_snake_case)]
pub fn extract_G1_G2(
    g: &TruncatedSeries2,
) -> Result<(TruncatedSeries2, TruncatedSeries2), SeriesError> {
    if g.get(0, 0).map(|c| c.is_one()) != Some(true) {
        return Err(SeriesError::BadConstant);
    }
    let mut g1 = BTreeMap::new();
    let mut g2 = BTreeMap::new();
    for &(p1, p2) in g.entries().keys() {
        let (i, j) = (p1, p2);
        let denom = q(2 * (i + j + 1) as i64);
        let tangent = g.get(i + 1, j).map(|a| a * q(i as i64 + 1) / &denom);
        let sum = g.get(i, j + 1).map(|a| a * q(j as i64 + 1) / &denom);
        if let Some(t) = &tangent {
            g2.insert((i, j), t.clone());
            if let Some(s) = &sum {
                g1.insert((i, j), s - t);
            }
        }
    }
    let g1 = TruncatedSeries2::from_map(g1);
    let g2 = TruncatedSeries2::from_map(g2);
    // back-substitution: both splittings rebuild the same counts
    for (&(i, j), a) in g.entries() {
        if i >= 1 {
            if let Some(t) = g2.get(i - 1, j) {
                if &(t * q(2 * (i + j) as i64) / q(i as i64)) != a {
                    return Err(SeriesError::Residual {
                        what: "tangency split",
                        order: i + j,
                    });
                }
            }
        }
        if j >= 1 {
            if let (Some(c), Some(t)) = (g1.get(i, j - 1), g2.get(i, j - 1)) {
                if &((c + t) * q(2 * (i + j) as i64) / q(j as i64)) != a {
                    return Err(SeriesError::Residual {
                        what: "crossing split",
                        order: i + j,
                    });
                }
            }
        }
    }
    Ok((g1, g2))
}

/// Four-leg functions with the disconnected part removed:
/// `Gamma1 = G1`, `Gamma2 = G2 - G^2`.
pub fn gammas(
    g: &TruncatedSeries2,
    g1: &TruncatedSeries2,
    g2: &TruncatedSeries2,
) -> (TruncatedSeries2, TruncatedSeries2) {
    (g1.clone(), g2.sub(&g.mul(g)))
}

/// Converged renormalised couplings and prime tangle series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenormSolution {
    pub order: usize,
    pub g1: TruncatedSeries,
    pub g2: TruncatedSeries,
    pub t: TruncatedSeries,
    /// Prime tangles whose two strands are joined by a crossing-type vertex.
    pub gamma1: TruncatedSeries,
    /// Prime tangles of the other type.
    pub gamma2: TruncatedSeries,
    pub iterations: usize,
    /// Per-order residuals of the three defining equations: the rescaled
    /// two-leg function equals 1, and the two coupling updates are fixed.
    pub residuals: [TruncatedSeries; 3],
}

impl RenormSolution {
    /// Prime tangles of both types, `Gamma1 + 2 Gamma2`.
    pub fn tangles(&self) -> TruncatedSeries {
        &self.gamma1 + &self.gamma2.scale(&q(2))
    }
}

struct Couplings {
    g1: TruncatedSeries,
    g2: TruncatedSeries,
    t: TruncatedSeries,
    gamma1: TruncatedSeries,
    gamma2: TruncatedSeries,
}

fn renorm_pass(
    n: usize,
    g_full: &TruncatedSeries2,
    gam1: &TruncatedSeries2,
    gam2: &TruncatedSeries2,
    g1: &TruncatedSeries,
    g2: &TruncatedSeries,
    t: &TruncatedSeries,
) -> Result<Couplings, SeriesError> {
    let one = TruncatedSeries::one(n);
    let g = TruncatedSeries::var(n);
    let half = Q::new(BigInt::from(1), BigInt::from(2));
    let gamma1 = gam1.compose_rescaled(Rescale::GammaLike, g1, g2, t)?;
    let gamma2 = gam2.compose_rescaled(Rescale::GammaLike, g1, g2, t)?;
    let one_m_g = &one - &g;
    let one_p_g = &one + &g;
    // chains of prime tangles glued along one or the other direction
    let p = &(&one_m_g * &(&gamma2 + &gamma1)) - &g;
    let h_plus = &p * &(&one + &p).inverse()?;
    let m = &(&one_p_g * &(&gamma2 - &gamma1)) + &g;
    let h_minus = &m * &(&one + &m).inverse()?;
    let h2 = (&h_plus + &h_minus).scale(&half);
    let h1 = (&h_plus - &h_minus).scale(&half);
    let rest = &(&one - &h2) - &h1;
    let v2 = &(&one_m_g * &gamma2) * &(&rest * &rest);
    let new_g1 = &g * &(&one - &h2.scale(&q(2)));
    let new_g2 = -&(&g * &(&h1 + &v2));
    let new_t = g_full.compose_rescaled(Rescale::Plain, &new_g1, &new_g2, t)?;
    Ok(Couplings {
        g1: new_g1,
        g2: new_g2,
        t: new_t,
        gamma1,
        gamma2,
    })
}

/// Solves the self-consistent renormalisation to order `pmax`.
///
/// `g` must hold `a[p1, 0]` for `p1 <= pmax + 1` and `a[p1, p2]` for
/// `p2 >= 1`, `p1 + 3 p2 <= pmax + 3`.
pub fn renormalize(g: &TruncatedSeries2, pmax: usize) -> Result<RenormSolution, SeriesError> {
    let (g1s, g2s) = extract_G1_G2(g)?;
    let (gam1, gam2) = gammas(g, &g1s, &g2s);
    let n = pmax;
    let mut g1 = TruncatedSeries::var(n);
    let mut g2 = TruncatedSeries::zero(n);
    let mut t = TruncatedSeries::one(n);
    let limit = n + 8;
    let mut settled = None;
    for it in 1..=limit {
        let c = renorm_pass(n, g, &gam1, &gam2, &g1, &g2, &t)?;
        let same = c.g1 == g1 && c.g2 == g2 && c.t == t;
        g1 = c.g1;
        g2 = c.g2;
        t = c.t;
        if same {
            settled = Some((it, c.gamma1, c.gamma2));
            break;
        }
    }
    let (iterations, gamma1, gamma2) = settled.ok_or(SeriesError::NoConvergence(limit))?;

    let check = renorm_pass(n, g, &gam1, &gam2, &g1, &g2, &t)?;
    let ren_a = &g.compose_rescaled(Rescale::GLike, &g1, &g2, &t)? - &TruncatedSeries::one(n);
    let residuals = [ren_a, &g1 - &check.g1, &g2 - &check.g2];
    let names = [
        "renormalised two-leg function",
        "crossing coupling",
        "tangency coupling",
    ];
    for (r, what) in residuals.iter().zip(names) {
        if let Some(order) = r.valuation() {
            return Err(SeriesError::Residual { what, order });
        }
    }
    for (name, s) in [("Gamma1", &gamma1), ("Gamma2", &gamma2)] {
        for (k, c) in s.coeffs().iter().enumerate() {
            if !c.is_integer() || c.is_negative() {
                return Err(SeriesError::NotCounting {
                    name,
                    order: k,
                    value: c.to_string(),
                });
            }
        }
    }
    Ok(RenormSolution {
        order: n,
        g1,
        g2,
        t,
        gamma1,
        gamma2,
        iterations,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> TruncatedSeries {
        TruncatedSeries::from_integers(v.iter().copied())
    }

    #[test]
    fn json_round_trip() {
        let s = TruncatedSeries::new(vec![q(1), Q::new(BigInt::from(-3), BigInt::from(2)), q(0)]);
        let v = s.to_json_value();
        assert_eq!(v["coefficients"][1], "-3/2");
        assert_eq!(TruncatedSeries::from_json_value(v).unwrap(), s);
        let short = serde_json::json!({"order": 3, "coefficients": ["1"]});
        assert!(TruncatedSeries::from_json_value(short).is_err());
    }

    #[test]
    fn inverse_of_geometric() {
        let s = ints(&[1, -1, 0, 0, 0]);
        assert_eq!(s.inverse().unwrap(), ints(&[1, 1, 1, 1, 1]));
        assert_eq!(ints(&[0, 1]).inverse(), Err(SeriesError::NotInvertible));
    }

    #[test]
    fn compose_substitutes() {
        // (1 + x)^2 at x = g + g^2
        let outer = ints(&[1, 2, 1, 0, 0]);
        let inner = ints(&[0, 1, 1, 0, 0]);
        assert_eq!(outer.compose(&inner).unwrap(), ints(&[1, 2, 3, 2, 1]));
        assert_eq!(outer.compose(&ints(&[1, 1])), Err(SeriesError::BadInner));
    }

    #[test]
    fn sigma1_of_small_counts() {
        let g = ints(&[1, 2, 8, 42, 260]);
        assert_eq!(sigma1_from_G(&g).unwrap(), ints(&[0, 2, 4, 18, 108]));
        assert_eq!(G_from_sigma1(&ints(&[0, 2, 4, 18, 108])).unwrap(), g);
    }

    #[test]
    fn sigma2_of_small_counts() {
        let g = ints(&[1, 2, 8, 42, 260, 1796, 13396]);
        assert_eq!(sigma2_from_G(&g).unwrap(), ints(&[0, 2, 0, 2, 4, 12, 60]));
    }

    #[test]
    fn missing_coefficient_is_reported() {
        let mut m = BTreeMap::new();
        m.insert((0, 0), Q::one());
        m.insert((1, 0), q(2));
        let f = TruncatedSeries2::from_map(m);
        let g = TruncatedSeries::var(3);
        let err = f
            .compose_rescaled(Rescale::Plain, &g, &TruncatedSeries::zero(3), &TruncatedSeries::one(3))
            .unwrap_err();
        assert_eq!(
            err,
            SeriesError::MissingCoefficient {
                p1: 2,
                p2: 0,
                order: 3
            }
        );
    }

    #[test]
    fn compose_ignores_unreachable_terms() {
        let mut m = BTreeMap::new();
        for i in 0..=3 {
            m.insert((i, 0), q(1));
        }
        m.insert((0, 1), q(5));
        let f = TruncatedSeries2::from_map(m);
        let g2 = TruncatedSeries::monomial(q(1), 3, 3);
        let r = f
            .compose_rescaled(Rescale::Plain, &TruncatedSeries::var(3), &g2, &TruncatedSeries::one(3))
            .unwrap();
        assert_eq!(r, ints(&[1, 1, 1, 6]));
    }
}

//! Reference tables of published counts, bundled with the crate.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::oracle::tangency_row;

const TABLE1: &str = include_str!("../fixtures/table1.csv");
const TABLE2: &str = include_str!("../fixtures/table2.csv");
const TABLE3: &str = include_str!("../fixtures/table3.csv");

/// Two-leg counts by order: all, one-particle irreducible, skeleton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoLegRow {
    pub p: usize,
    pub g: BigUint,
    pub sigma1: BigUint,
    pub sigma2: BigUint,
}

/// Prime tangle counts of the two types; blank cells are `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangleRow {
    pub p: usize,
    pub gamma1: Option<BigUint>,
    pub gamma2: Option<BigUint>,
}

fn records(src: &str) -> impl Iterator<Item = csv::StringRecord> + '_ {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(src.as_bytes())
        .into_records()
        .map(|r| r.expect("bundled fixture is well formed"))
}

fn num(s: &str) -> BigUint {
    s.trim().parse().expect("bundled fixture holds integers")
}

fn opt_num(s: &str) -> Option<BigUint> {
    let s = s.trim();
    (!s.is_empty()).then(|| num(s))
}

fn index(s: &str) -> usize {
    s.trim().parse().expect("bundled fixture holds indices")
}

pub fn two_leg_counts() -> Vec<TwoLegRow> {
    records(TABLE1)
        .map(|r| TwoLegRow {
            p: index(&r[0]),
            g: num(&r[1]),
            sigma1: num(&r[2]),
            sigma2: num(&r[3]),
        })
        .collect()
}

/// `a[p1, p2]`: diagrams with `p1` crossings and `p2` tangency pairs.
pub fn mixed_counts() -> BTreeMap<(usize, usize), BigUint> {
    records(TABLE2)
        .map(|r| ((index(&r[0]), index(&r[1])), num(&r[2])))
        .collect()
}

pub fn tangle_counts() -> Vec<TangleRow> {
    records(TABLE3)
        .map(|r| TangleRow {
            p: index(&r[0]),
            gamma1: opt_num(&r[1]),
            gamma2: opt_num(&r[2]),
        })
        .collect()
}

/// Two-variable counts assembled from the bundled tables: the mixed table,
/// the crossing-only column and the tangency-only row from its closed form
/// (orders below `tangency_orders`).
pub fn two_variable_counts(tangency_orders: usize) -> BTreeMap<(usize, usize), BigUint> {
    let mut out = mixed_counts();
    for row in two_leg_counts() {
        out.insert((row.p, 0), row.g);
    }
    for p in 1..tangency_orders {
        out.insert((0, p), tangency_row(p).expect("closed forms agree"));
    }
    out
}

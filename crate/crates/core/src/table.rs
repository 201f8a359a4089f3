//! Coefficient tables `a[p1, p2]` and their JSON form.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transfer::{Arithmetic, EnumerationOptions};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("malformed table: {0}")]
    Format(String),
    #[error("cannot combine: {0}")]
    Combine(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Count {
    Exact(BigUint),
    /// One residue per modulus of the run.
    Residues(Vec<u64>),
}

impl Count {
    pub fn as_exact(&self) -> Option<&BigUint> {
        match self {
            Count::Exact(v) => Some(v),
            Count::Residues(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientTable {
    pub options: EnumerationOptions,
    /// Counts exclude diagrams with tadpoles.
    pub tadpole_free: bool,
    pub entries: BTreeMap<(usize, usize), Count>,
    /// Number of states after each step.
    pub peak_states: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    p1: usize,
    p2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residues: Option<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    options: EnumerationOptions,
    tadpole_free: bool,
    entries: Vec<EntryFile>,
    peak_states: Vec<usize>,
}

impl CoefficientTable {
    pub fn get(&self, p1: usize, p2: usize) -> Option<&Count> {
        self.entries.get(&(p1, p2))
    }

    pub fn exact(&self, p1: usize, p2: usize) -> Option<BigUint> {
        self.get(p1, p2).and_then(Count::as_exact).cloned()
    }

    /// The `p2 = 0` column as long as it is exact and contiguous.
    pub fn crossing_column(&self) -> Vec<BigUint> {
        (0..)
            .map_while(|p| self.exact(p, 0))
            .collect()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(|c| matches!(c, Count::Exact(_)))
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let file = TableFile {
            options: self.options.clone(),
            tadpole_free: self.tadpole_free,
            entries: self
                .entries
                .iter()
                .map(|(&(p1, p2), c)| match c {
                    Count::Exact(v) => EntryFile {
                        p1,
                        p2,
                        count: Some(v.to_string()),
                        residues: None,
                    },
                    Count::Residues(r) => EntryFile {
                        p1,
                        p2,
                        count: None,
                        residues: Some(r.clone()),
                    },
                })
                .collect(),
            peak_states: self.peak_states.clone(),
        };
        serde_json::to_value(file).expect("plain data serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("plain data serializes")
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self, TableError> {
        let file: TableFile = serde_json::from_value(v)?;
        let mut entries = BTreeMap::new();
        for e in file.entries {
            let c = match (e.count, e.residues) {
                (Some(s), None) => Count::Exact(
                    s.parse()
                        .map_err(|_| TableError::Format(format!("bad count {s:?}")))?,
                ),
                (None, Some(r)) => Count::Residues(r),
                _ => {
                    return Err(TableError::Format(format!(
                        "entry ({}, {}) needs exactly one of count, residues",
                        e.p1, e.p2
                    )))
                }
            };
            if entries.insert((e.p1, e.p2), c).is_some() {
                return Err(TableError::Format(format!("duplicate entry ({}, {})", e.p1, e.p2)));
            }
        }
        Ok(CoefficientTable {
            options: file.options,
            tadpole_free: file.tadpole_free,
            entries,
            peak_states: file.peak_states,
        })
    }

    pub fn from_json(s: &str) -> Result<Self, TableError> {
        Self::from_json_value(serde_json::from_str(s)?)
    }
}

/// Reassembles exact counts from residue runs with coprime moduli.
///
/// The result is exact only while every true count stays below the product
/// of all moduli.
pub fn crt_combine(tables: &[CoefficientTable]) -> Result<CoefficientTable, TableError> {
    let first = tables
        .first()
        .ok_or_else(|| TableError::Combine("no tables given".into()))?;
    let mut moduli: Vec<u64> = Vec::new();
    for t in tables {
        let Arithmetic::Residues { moduli: m } = &t.options.arithmetic else {
            return Err(TableError::Combine("all inputs must be residue tables".into()));
        };
        let mut a = t.options.clone();
        let mut b = first.options.clone();
        a.arithmetic = Arithmetic::Exact;
        b.arithmetic = Arithmetic::Exact;
        if a != b || t.tadpole_free != first.tadpole_free {
            return Err(TableError::Combine("tables come from different options".into()));
        }
        if t.entries.keys().ne(first.entries.keys()) {
            return Err(TableError::Combine("tables cover different indices".into()));
        }
        moduli.extend_from_slice(m);
    }
    for (i, &a) in moduli.iter().enumerate() {
        for &b in &moduli[..i] {
            if a.gcd(&b) != 1 {
                return Err(TableError::Combine(format!("moduli {a} and {b} are not coprime")));
            }
        }
    }
    let modulus: BigInt = moduli.iter().map(|&m| BigInt::from(m)).product();
    let bases: Vec<BigInt> = moduli
        .iter()
        .map(|&m| {
            let m = BigInt::from(m);
            let rest = &modulus / &m;
            let inv = (&rest % &m).extended_gcd(&m).x;
            rest * inv.mod_floor(&m)
        })
        .collect();

    let mut entries = BTreeMap::new();
    for idx in first.entries.keys() {
        let mut acc = BigInt::zero();
        let mut k = 0;
        for t in tables {
            let Some(Count::Residues(r)) = t.entries.get(idx) else {
                return Err(TableError::Combine(format!("entry {idx:?} is not a residue list")));
            };
            if r.len() != t.options.arithmetic_moduli_len() {
                return Err(TableError::Combine(format!("entry {idx:?} has the wrong width")));
            }
            for &x in r {
                acc += &bases[k] * BigInt::from(x);
                k += 1;
            }
        }
        let v = acc.mod_floor(&modulus);
        entries.insert(*idx, Count::Exact(v.to_biguint().expect("reduced mod a positive")));
    }
    let mut options = first.options.clone();
    options.arithmetic = Arithmetic::Exact;
    Ok(CoefficientTable {
        options,
        tadpole_free: first.tadpole_free,
        entries,
        peak_states: first.peak_states.clone(),
    })
}

impl EnumerationOptions {
    fn arithmetic_moduli_len(&self) -> usize {
        match &self.arithmetic {
            Arithmetic::Exact => 0,
            Arithmetic::Residues { moduli } => moduli.len(),
        }
    }
}

/// Reduces an exact table modulo the given moduli.
pub fn reduce_mod(table: &CoefficientTable, moduli: &[u64]) -> CoefficientTable {
    let entries = table
        .entries
        .iter()
        .map(|(&i, c)| {
            let v = c.as_exact().expect("exact table");
            let r = moduli
                .iter()
                .map(|&m| {
                    let x = v % BigUint::from(m);
                    u64::try_from(x).expect("below a u64 modulus")
                })
                .collect();
            (i, Count::Residues(r))
        })
        .collect();
    let mut options = table.options.clone();
    options.arithmetic = Arithmetic::Residues {
        moduli: moduli.to_vec(),
    };
    CoefficientTable {
        options,
        tadpole_free: table.tadpole_free,
        entries,
        peak_states: table.peak_states.clone(),
    }
}

/// `x mod m` for a possibly negative integer.
pub(crate) fn mod_u64(x: &BigInt, m: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(m));
    u64::try_from(r).expect("in range")
}

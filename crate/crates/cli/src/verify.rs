//! Fixture, closed-form and oracle comparisons.

use std::time::Instant;

use knotenum::fixtures;
use knotenum::oracle::{self, one_crossing_row, tangency_row};
use knotenum::series::{renormalize, sigma1_from_G, sigma2_from_G, TruncatedSeries, TruncatedSeries2};
use knotenum::table::crt_combine;
use knotenum::transfer::Arithmetic;
use knotenum::{enumerate, CoefficientTable, EnumerationOptions, RunControl};
use num_bigint::{BigInt, BigUint};
use serde::Serialize;
use serde_json::json;

use crate::output::{emit, envelope};
use crate::{Failure, VerifyArgs};

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

type Outcome = Result<String, Failure>;

fn count(o: &EnumerationOptions) -> Result<CoefficientTable, Failure> {
    Ok(enumerate(o, &RunControl::default())?)
}

fn same<T: PartialEq + std::fmt::Display>(what: String, got: &T, want: &T) -> Result<(), Failure> {
    if got == want {
        Ok(())
    } else {
        Err(Failure::mismatch(format!("{what}: got {got}, expected {want}")))
    }
}

fn entry(t: &CoefficientTable, p1: usize, p2: usize) -> Result<BigUint, Failure> {
    t.exact(p1, p2)
        .ok_or_else(|| Failure::mismatch(format!("entry ({p1}, {p2}) missing")))
}

fn two_leg(p: usize) -> Outcome {
    for tadpoles in [false, true] {
        let mut o = EnumerationOptions::crossings(p);
        o.allow_tadpoles = tadpoles;
        let t = count(&o)?;
        o.first_return = true;
        let f = count(&o)?;
        for row in fixtures::two_leg_counts().iter().filter(|r| (1..=p).contains(&r.p)) {
            same(format!("G({})", row.p), &entry(&t, row.p, 0)?, &row.g)?;
            same(format!("Sigma1({})", row.p), &entry(&f, row.p, 0)?, &row.sigma1)?;
        }
    }
    Ok(format!("G and Sigma1 through p = {p}, both tadpole settings"))
}

fn algebraic() -> Outcome {
    let rows = fixtures::two_leg_counts();
    let g = TruncatedSeries::from_integers(rows.iter().map(|r| r.g.clone()));
    let err = |e: knotenum::series::SeriesError| Failure::mismatch(e.to_string());
    let s1 = sigma1_from_G(&g).map_err(err)?;
    let s2 = sigma2_from_G(&g).map_err(err)?;
    for row in rows.iter().skip(1) {
        let p = row.p;
        same(format!("Sigma1({p})"), &s1.coeff(p).to_integer(), &BigInt::from(row.sigma1.clone()))?;
        same(format!("Sigma2({p})"), &s2.coeff(p).to_integer(), &BigInt::from(row.sigma2.clone()))?;
    }
    Ok(format!("Sigma1 and Sigma2 through p = {}", g.order()))
}

fn tangencies(t: &CoefficientTable, n: usize) -> Outcome {
    let mut k = 0;
    for (&(p1, p2), want) in fixtures::mixed_counts().iter().filter(|(i, _)| i.0 + i.1 <= n) {
        same(format!("a[{p1},{p2}]"), &entry(t, p1, p2)?, want)?;
        k += 1;
    }
    Ok(format!("{k} entries with p1 + p2 <= {n}"))
}

fn closed_forms(t: &CoefficientTable, n: usize) -> Outcome {
    for p in 1..=30 {
        tangency_row(p).map_err(|e| Failure::mismatch(e.to_string()))?;
    }
    for p in 1..=n {
        same(format!("a[0,{p}]"), &entry(t, 0, p)?, &tangency_row(p).expect("checked"))?;
        same(format!("a[1,{}]", p - 1), &entry(t, 1, p - 1)?, &one_crossing_row(p).expect("checked"))?;
    }
    Ok(format!("formulas agree through 30, enumeration through {n}"))
}

fn tangles(p: usize) -> Outcome {
    let t = count(&EnumerationOptions::for_renormalization(p))?;
    let err = |e: knotenum::series::SeriesError| Failure::mismatch(e.to_string());
    let g = TruncatedSeries2::from_table(&t).map_err(err)?;
    let sol = renormalize(&g, p).map_err(err)?;
    for row in fixtures::tangle_counts().iter().filter(|r| r.p <= p) {
        if let Some(v) = &row.gamma1 {
            same(format!("Gamma1({})", row.p), &sol.gamma1.coeff(row.p).to_integer(), &BigInt::from(v.clone()))?;
        }
        if let Some(v) = &row.gamma2 {
            same(format!("Gamma2({})", row.p), &sol.gamma2.coeff(row.p).to_integer(), &BigInt::from(v.clone()))?;
        }
    }
    Ok(format!("Gamma1 and Gamma2 through p = {p}"))
}

fn first_difference(a: &CoefficientTable, b: &CoefficientTable) -> Option<String> {
    let keys: std::collections::BTreeSet<_> = a.entries.keys().chain(b.entries.keys()).collect();
    keys.into_iter().find_map(|k| {
        let (x, y) = (a.entries.get(k), b.entries.get(k));
        (x != y).then(|| format!("entry {k:?}: {x:?} vs {y:?}"))
    })
}

fn oracle_check(n: usize) -> Outcome {
    for tadpoles in [true, false] {
        let o = oracle::mixed_options(n, tadpoles);
        let fast = count(&o)?;
        let slow = oracle::direct_enumerate(&o)?;
        if let Some(d) = first_difference(&fast, &slow) {
            return Err(Failure::mismatch(format!("tadpoles {tadpoles}, {d}")));
        }
    }
    Ok(format!("direct enumeration agrees for p1 + p2 <= {n}"))
}

fn residues(p: usize) -> Outcome {
    let o = EnumerationOptions::crossings(p);
    let exact = count(&o)?;
    let parts = [1u64 << 32, (1u64 << 32) - 1]
        .into_iter()
        .map(|m| {
            let mut r = o.clone();
            r.arithmetic = Arithmetic::Residues { moduli: vec![m] };
            count(&r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let combined = crt_combine(&parts).map_err(|e| Failure::mismatch(e.to_string()))?;
    if let Some(d) = first_difference(&combined, &exact) {
        return Err(Failure::mismatch(d));
    }
    Ok(format!("moduli 2^32 and 2^32 - 1 recombine through p = {p}"))
}

pub fn run_checks(a: &VerifyArgs) -> Result<bool, Failure> {
    let p = a.p;
    let n = p.min(9);
    let mut checks = Vec::new();
    let mut record = |name: &'static str, out: Outcome| -> Result<(), Failure> {
        let (passed, detail) = match out {
            Ok(d) => (true, d),
            Err(f) if f.code == 1 => (false, f.message),
            Err(f) => return Err(f),
        };
        println!("{} {name}: {detail}", if passed { "ok  " } else { "FAIL" });
        checks.push(Check { name, passed, detail });
        Ok(())
    };
    let start = Instant::now();
    record("two-leg counts", two_leg(p))?;
    record("irreducible and skeleton columns", algebraic())?;
    let mixed = count(&oracle::mixed_options(n, false))?;
    record("tangency table", tangencies(&mixed, n))?;
    record("closed forms", closed_forms(&mixed, n.min(8)))?;
    record("tangle counts", tangles(p.min(10)))?;
    record("oracle", oracle_check(a.oracle_max))?;
    record("residue arithmetic", residues(p.min(10)))?;
    eprintln!("verify finished in {:.1}s", start.elapsed().as_secs_f64());
    let ok = checks.iter().all(|c| c.passed);
    if let Some(out) = &a.out {
        emit(Some(out), &envelope("verify", a, json!({ "passed": ok, "checks": checks })))?;
    }
    Ok(ok)
}

pub fn run(a: &VerifyArgs) -> Result<(), Failure> {
    if run_checks(a)? {
        Ok(())
    } else {
        Err(Failure::mismatch("verification failed"))
    }
}

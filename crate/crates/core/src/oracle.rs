//! Independent checks of the transfer enumeration.
//!
//! [`direct_enumerate`] walks every move sequence depth first on a separate
//! representation: each open line carries a pair label and a region label,
//! and there are no arch markers, no canonical form, no validity filter and
//! no merging of equal states. Dead configurations are simply never closed.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arch_state::ArchState;
use crate::table::{CoefficientTable, Count};
use crate::tadpoles;
use crate::transfer::{
    raw_moves, Arithmetic, EnumerationOptions, MoveKind, MoveRules, TransferError,
};
use crate::truncation::{TangencyCutoff, Truncation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("closed forms disagree at p = {p}: {factorial} vs {convolution}")]
    ClosedForms {
        p: usize,
        factorial: BigUint,
        convolution: BigUint,
    },
    #[error("trace replay is limited to order 4, got {0}")]
    TraceOrder(usize),
}

const ACTIVE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Line {
    pair: u32,
    region: u32,
}

struct Walk<'a> {
    truncation: Truncation,
    allow_tadpoles: bool,
    first_return: bool,
    steps: usize,
    counts: &'a mut BTreeMap<(usize, usize), u64>,
}

impl Walk<'_> {
    fn allowed(&self, step: usize, lines: usize, degree: usize) -> bool {
        let half = (lines - 1) / 2;
        if half > self.steps - step {
            return false;
        }
        let created = (step + half) / 2;
        degree <= created && self.truncation.admissible(created - degree, degree)
    }

    fn go(&mut self, lines: &mut Vec<Line>, step: usize, degree: usize, fresh: bool, labels: u32) {
        if step > 0 && step.is_multiple_of(2) && lines.len() == 1 {
            *self.counts.entry((step / 2 - degree, degree)).or_default() += 1;
            if self.first_return {
                return;
            }
        }
        if step == self.steps {
            return;
        }
        let next = step + 1;
        let a = lines.iter().position(|l| l.pair == ACTIVE).expect("one active line");
        let region = lines[a].region;

        // new crossing
        if self.allowed(next, lines.len() + 2, degree) {
            let p = Line { pair: labels, region };
            lines.insert(a + 1, p);
            lines.insert(a, p);
            self.go(lines, next, degree, !self.allow_tadpoles, labels + 1);
            lines.remove(a);
            lines.remove(a + 1);
        }

        // new tangency pair on either side
        if self.truncation.uses_tangencies() && self.allowed(next, lines.len() + 2, degree + 1) {
            let p = Line { pair: labels, region };
            for at in [a, a + 1] {
                lines.insert(at, p);
                lines.insert(at, p);
                self.go(lines, next, degree + 1, false, labels + 1);
                lines.remove(at);
                lines.remove(at);
            }
        }

        // closing onto a line of the same region across an even gap
        for l in 0..lines.len() {
            if l == a || lines[l].region != region {
                continue;
            }
            let (lo, hi) = (a.min(l), a.max(l));
            let between = hi - lo - 1;
            if between % 2 == 1 || (fresh && between == 0) {
                continue;
            }
            if !self.allowed(next, lines.len() - 2, degree) {
                continue;
            }
            let saved = lines.clone();
            let pair = lines[l].pair;
            let enclosed = labels;
            for x in &mut lines[lo + 1..hi] {
                if x.region == region {
                    x.region = enclosed;
                }
            }
            let q = (0..lines.len())
                .find(|&i| i != l && lines[i].pair == pair)
                .expect("paired");
            lines[q].pair = ACTIVE;
            lines.remove(hi);
            lines.remove(lo);
            self.go(lines, next, degree, false, labels + 1);
            *lines = saved;
        }
    }
}

/// Tadpole-free or full counts, exactly as produced by the walk.
pub fn direct_enumerate_raw(options: &EnumerationOptions) -> Result<CoefficientTable, TransferError> {
    options.check()?;
    let truncation = options.truncation();
    let mut counts = BTreeMap::new();
    let mut walk = Walk {
        truncation,
        allow_tadpoles: options.allow_tadpoles,
        first_return: options.first_return,
        steps: 2 * options.max_order,
        counts: &mut counts,
    };
    let mut lines = vec![Line {
        pair: ACTIVE,
        region: 0,
    }];
    walk.go(&mut lines, 0, 0, false, 1);

    let entries = truncation
        .indices()
        .into_iter()
        .map(|idx| {
            let v = if idx == (0, 0) {
                u64::from(!options.first_return)
            } else {
                counts.get(&idx).copied().unwrap_or(0)
            };
            (idx, Count::Exact(BigUint::from(v)))
        })
        .collect();
    let mut opts = options.clone();
    opts.arithmetic = Arithmetic::Exact;
    Ok(CoefficientTable {
        options: opts,
        tadpole_free: !options.allow_tadpoles,
        entries,
        peak_states: Vec::new(),
    })
}

/// Same contract as [`crate::transfer::enumerate`], computed without merging.
pub fn direct_enumerate(options: &EnumerationOptions) -> Result<CoefficientTable, TransferError> {
    let raw = direct_enumerate_raw(options)?;
    Ok(tadpoles::restore_table(&raw))
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Catalan numbers `c_0..=c_n` by the convolution recurrence.
pub fn catalan(n: usize) -> Vec<BigUint> {
    let mut c = vec![BigUint::one()];
    for k in 0..n {
        let next = (0..=k).fold(BigUint::zero(), |acc, i| acc + &c[i] * &c[k - i]);
        c.push(next);
    }
    c
}

fn binomial(n: usize, k: usize) -> BigUint {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Diagrams with tangencies only, `a[0, p]`, by two independent formulas.
pub fn tangency_row(p: usize) -> Result<BigUint, OracleError> {
    let fact = factorial(2 * p) * factorial(2 * p + 2)
        / (factorial(p) * factorial(p + 1) * factorial(p + 1) * factorial(p + 2));
    let c = catalan(p);
    let conv = (0..=p).fold(BigUint::zero(), |acc, j| {
        acc + binomial(2 * p, 2 * j) * &c[p - j] * &c[j]
    });
    if fact != conv {
        return Err(OracleError::ClosedForms {
            p,
            factorial: fact,
            convolution: conv,
        });
    }
    Ok(fact)
}

/// `a[1, p - 1] = p a[0, p]`: one tangency replaced by a crossing.
pub fn one_crossing_row(p: usize) -> Result<BigUint, OracleError> {
    assert!(p >= 1, "needs at least one vertex");
    Ok(tangency_row(p)? * p)
}

/// Why a candidate descendant was discarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    /// A right arch encloses lines with no way out.
    Isolated,
    /// A right arch encloses an odd number of lines.
    Odd,
    /// The line to be joined sits behind a right arch that the active line
    /// does not share; the connection would cut an enclosed region off.
    Screened,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DroppedState {
    pub parent: String,
    /// Open-line index of the line the active line would be joined to.
    pub target: Option<usize>,
    /// Canonical form of the discarded descendant, when it has one.
    pub state: Option<String>,
    pub reason: DropReason,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub step: usize,
    /// Canonical text and weight, sorted by text.
    pub states: Vec<(String, BigUint)>,
    pub dropped: Vec<DroppedState>,
}

/// Second-visit candidates across an even gap onto a line of another block.
fn screened(s: &ArchState) -> Vec<usize> {
    let layout = s.layout();
    let a = layout.active_pos;
    let pts = s.points();
    let mut line = 0;
    let mut out = Vec::new();
    for (l, r) in pts.iter().enumerate() {
        if !r.is_left() {
            continue;
        }
        if l != a && layout.block[l] != layout.block[a] {
            let (lo, hi) = (a.min(l), a.max(l));
            let between = pts[lo + 1..hi].iter().filter(|r| r.is_left()).count();
            if between % 2 == 0 {
                out.push(line);
            }
        }
        line += 1;
    }
    out
}

/// Replays the first-return evolution with tadpoles allowed, listing every
/// state after each step together with the candidates that were dropped.
pub fn replay_trace(pmax: usize) -> Result<Vec<TraceRecord>, OracleError> {
    if pmax > 4 {
        return Err(OracleError::TraceOrder(pmax));
    }
    let rules = MoveRules {
        allow_tadpoles: true,
        tangencies: false,
    };
    let steps = 2 * pmax;
    let mut current: BTreeMap<ArchState, BigUint> = BTreeMap::new();
    current.insert(ArchState::vacuum(), BigUint::one());
    let mut out = vec![TraceRecord {
        step: 0,
        states: vec![(ArchState::vacuum().to_string(), BigUint::one())],
        dropped: Vec::new(),
    }];
    for step in 1..=steps {
        let mut next: BTreeMap<ArchState, BigUint> = BTreeMap::new();
        let mut dropped = Vec::new();
        for (s, w) in &current {
            for target in screened(s) {
                dropped.push(DroppedState {
                    parent: s.to_string(),
                    target: Some(target),
                    state: None,
                    reason: DropReason::Screened,
                });
            }
            for d in raw_moves(s, rules) {
                let r = d.state.reduce();
                let report = r.validate();
                if !report.is_valid() {
                    dropped.push(DroppedState {
                        parent: s.to_string(),
                        target: None,
                        state: Some(r.to_string()),
                        reason: if report.has_isolated() {
                            DropReason::Isolated
                        } else {
                            DropReason::Odd
                        },
                    });
                    continue;
                }
                if (r.other_lines() / 2) > steps - step {
                    continue;
                }
                debug_assert_ne!(d.kind, MoveKind::Tangency);
                *next.entry(r).or_default() += w;
            }
        }
        let mut states: Vec<(String, BigUint)> =
            next.iter().map(|(s, w)| (s.to_string(), w.clone())).collect();
        states.sort();
        out.push(TraceRecord {
            step,
            states,
            dropped,
        });
        if step % 2 == 0 {
            next.remove(&ArchState::vacuum());
        }
        current = next;
    }
    Ok(out)
}

/// Line-oriented rendering: `step k: <state> x<weight>`, drops as comments.
pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in records {
        for (state, w) in &r.states {
            s.push_str(&format!("step {}: {} x{}\n", r.step, state, w));
        }
        for d in &r.dropped {
            let why = match d.reason {
                DropReason::Isolated => "isolated",
                DropReason::Odd => "odd",
                DropReason::Screened => "screened",
            };
            s.push_str(&format!("# step {}: {}", r.step, d.parent));
            if let Some(t) = d.target {
                s.push_str(&format!(" to line {t}"));
            }
            if let Some(st) = &d.state {
                s.push_str(&format!(" -> {st}"));
            }
            s.push_str(&format!(" dropped ({why})\n"));
        }
    }
    s
}

/// Options for the crossing and tangency comparison runs.
pub fn mixed_options(max_order: usize, allow_tadpoles: bool) -> EnumerationOptions {
    EnumerationOptions {
        max_order,
        tangencies: TangencyCutoff::Max(max_order),
        allow_tadpoles,
        first_return: false,
        arithmetic: Arithmetic::Exact,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_small_orders() {
        let t = direct_enumerate(&EnumerationOptions::crossings(5)).unwrap();
        assert_eq!(t.exact(3, 0).unwrap(), BigUint::from(42u32));
        assert_eq!(t.exact(5, 0).unwrap(), BigUint::from(1796u32));
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(tangency_row(1).unwrap(), BigUint::from(2u32));
        assert_eq!(tangency_row(2).unwrap(), BigUint::from(10u32));
        assert_eq!(tangency_row(6).unwrap(), BigUint::from(56628u32));
        assert_eq!(one_crossing_row(1).unwrap(), BigUint::from(2u32));
        assert_eq!(one_crossing_row(2).unwrap(), BigUint::from(20u32));
        assert_eq!(one_crossing_row(4).unwrap(), BigUint::from(2352u32));
    }

    #[test]
    fn trace_milestones() {
        let t = replay_trace(4).unwrap();
        assert_eq!(t[0].states, vec![("1:0".to_string(), BigUint::one())]);
        let vac = |k: usize| {
            t[k].states
                .iter()
                .find(|(s, _)| s == "1:0")
                .map(|(_, w)| w.clone())
        };
        let want = [2u32, 4, 18, 108];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(vac(2 * n + 2), Some(BigUint::from(*w)));
        }
        // the connection to the uppermost line is screened at step 6
        assert!(t[6]
            .dropped
            .iter()
            .any(|d| d.reason == DropReason::Screened && d.target == Some(0)));
        assert!(replay_trace(5).is_err());
    }
}

//! Helpers shared by the property tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use knotenum::arch_state::{ArchState, Role};
use knotenum::transfer::{descendants, MoveKind, MoveRules, Transfer};
use knotenum::weight::Exact;
use knotenum::EnumerationOptions;
use rand::Rng;

/// Random state with arbitrary (usually non-canonical) right arches.
pub fn random_state(rng: &mut impl Rng, pairs: usize, arches: usize) -> ArchState {
    // left Dyck word over `pairs` pairs, then the active placeholder
    let mut left = Vec::new();
    let (mut open, mut close) = (pairs, pairs);
    while open + close > 0 {
        if open > 0 && (close == open || rng.gen_bool(0.5)) {
            left.push(Role::LeftOpen);
            open -= 1;
        } else {
            left.push(Role::LeftClose);
            close -= 1;
        }
    }
    let pos = rng.gen_range(0..=left.len());
    left.insert(pos, Role::LeftOpen);
    let active = pos;
    // right Dyck word spliced in at random gaps
    let mut right = Vec::new();
    let (mut open, mut close) = (arches, arches);
    while open + close > 0 {
        if open > 0 && (close == open || rng.gen_bool(0.5)) {
            right.push(Role::RightOpen);
            open -= 1;
        } else {
            right.push(Role::RightClose);
            close -= 1;
        }
    }
    let mut slots: Vec<usize> = (0..right.len())
        .map(|_| rng.gen_range(0..=left.len()))
        .collect();
    slots.sort_unstable();
    let mut points = Vec::new();
    let mut k = 0;
    for gap in 0..=left.len() {
        while k < right.len() && slots[k] == gap {
            points.push(right[k]);
            k += 1;
        }
        if gap < left.len() {
            points.push(left[gap]);
        }
    }
    ArchState::new(points, active, rng.gen_bool(0.5)).expect("constructed balanced")
}

/// Random walk over the state space of crossing-only diagrams up to order
/// `p`, tadpoles allowed, that also counts second visits. Returns the states
/// of each step with their number of second visits, after checking that the
/// engine holds exactly the same states.
pub fn instrumented_run(p: usize) -> Result<Vec<BTreeMap<ArchState, BTreeSet<usize>>>, String> {
    let options = EnumerationOptions::crossings(p);
    let engine = Transfer::new(options, Exact).map_err(|e| e.to_string())?;
    let rules = MoveRules {
        allow_tadpoles: true,
        tangencies: false,
    };
    let steps = 2 * p;
    let mut map = engine.initial();
    let mut current: BTreeMap<ArchState, BTreeSet<usize>> = BTreeMap::new();
    current.entry(ArchState::vacuum()).or_default().insert(0);
    let mut out = Vec::new();
    for step in 1..=steps {
        let mut next: BTreeMap<ArchState, BTreeSet<usize>> = BTreeMap::new();
        for (s, visits) in &current {
            for d in descendants(s, rules) {
                if d.state.other_lines() / 2 > steps - step {
                    continue;
                }
                let extra = usize::from(d.kind == MoveKind::Type2);
                let slot = next.entry(d.state).or_default();
                slot.extend(visits.iter().map(|n| n + extra));
            }
        }
        map = engine.step(&map);
        let from_engine: BTreeSet<ArchState> = map
            .states
            .keys()
            .map(|k| ArchState::decode_key(k).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let replayed: BTreeSet<ArchState> = next.keys().cloned().collect();
        if from_engine != replayed {
            return Err(format!("step {step}: engine and replay hold different states"));
        }
        out.push(next.clone());
        current = next;
    }
    Ok(out)
}

/// Both Dyck conditions, and `l = 2 (k - 2 n)` for `n` second visits after
/// `k` steps.
pub fn check_state(step: usize, s: &ArchState, visits: &BTreeSet<usize>) -> Result<(), String> {
    let mut depth = [0i64; 2];
    for r in s.points() {
        let (side, d) = match r {
            Role::LeftOpen => (0, 1),
            Role::LeftClose => (0, -1),
            Role::RightOpen => (1, 1),
            Role::RightClose => (1, -1),
        };
        depth[side] += d;
        if depth[0] < 0 || depth[1] < 0 {
            return Err(format!("step {step}: {s} is not a Dyck word"));
        }
    }
    // the active placeholder is the one unmatched left opening
    if depth != [1, 0] {
        return Err(format!("step {step}: {s} is unbalanced"));
    }
    if !s.validate().is_valid() {
        return Err(format!("step {step}: {s} has a forbidden block"));
    }
    for &n in visits {
        if s.other_lines() as i64 != 2 * (step as i64 - 2 * n as i64) {
            return Err(format!("step {step}: {s} with {n} second visits"));
        }
    }
    Ok(())
}

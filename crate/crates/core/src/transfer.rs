//! Transfer-matrix evolution of weighted slice states.
//!
//! Each step advances the active line past one more event: a new crossing
//! (type 1), the second visit of an earlier crossing (type 2), or a new
//! tangency pair. After `2n` steps the weight sitting on the vacuum counts
//! the closed diagrams with `n` vertices.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::arch_state::{ArchState, Role, StateError, StateKey};
use crate::table::{CoefficientTable, Count};
use crate::tadpoles;
use crate::truncation::{TangencyCutoff, Truncation};
use crate::weight::{Exact, Residues, WeightArith};

/// Orders above this would overflow the active-index field of a key.
pub const MAX_ORDER: usize = 127;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("invalid options: {0}")]
    Options(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("state limit exceeded at step {step}: {states} states (limit {limit})")]
    ResourceLimit {
        step: usize,
        states: usize,
        limit: usize,
        peak_states: Vec<usize>,
    },
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Arithmetic {
    Exact,
    Residues { moduli: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnumerationOptions {
    pub max_order: usize,
    pub tangencies: TangencyCutoff,
    pub allow_tadpoles: bool,
    pub first_return: bool,
    pub arithmetic: Arithmetic,
}

impl EnumerationOptions {
    /// Crossing-only diagrams up to order `p`, tadpoles allowed.
    pub fn crossings(p: usize) -> Self {
        EnumerationOptions {
            max_order: p,
            tangencies: TangencyCutoff::Off,
            allow_tadpoles: true,
            first_return: false,
            arithmetic: Arithmetic::Exact,
        }
    }

    /// Everything `renormalize(pmax)` reads.
    pub fn for_renormalization(pmax: usize) -> Self {
        EnumerationOptions {
            max_order: pmax + 1,
            tangencies: TangencyCutoff::PowerCounting { slack: 2 },
            allow_tadpoles: false,
            first_return: false,
            arithmetic: Arithmetic::Exact,
        }
    }

    pub fn truncation(&self) -> Truncation {
        Truncation::new(self.max_order, self.tangencies)
    }

    pub fn check(&self) -> Result<(), TransferError> {
        if self.max_order > MAX_ORDER {
            return Err(TransferError::Options(format!(
                "order {} exceeds the supported maximum {MAX_ORDER}",
                self.max_order
            )));
        }
        if let Arithmetic::Residues { moduli } = &self.arithmetic {
            if moduli.is_empty() {
                return Err(TransferError::Options("residue mode needs a modulus".into()));
            }
            if let Some(m) = moduli.iter().find(|&&m| m < 2) {
                return Err(TransferError::Options(format!("modulus {m} is below 2")));
            }
        }
        Ok(())
    }
}

/// Which moves apply, independent of weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MoveRules {
    pub allow_tadpoles: bool,
    pub tangencies: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    Type1,
    Type2,
    Tangency,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Descendant {
    pub state: ArchState,
    pub kind: MoveKind,
}

impl Descendant {
    pub fn tangency_shift(&self) -> usize {
        (self.kind == MoveKind::Tangency) as usize
    }
}

fn left_count(points: &[Role]) -> usize {
    points.iter().filter(|r| r.is_left()).count()
}

/// New crossing: the active line `a` becomes `1 a 0`.
pub fn descendants_type1(s: &ArchState) -> ArchState {
    let a = s.active_position();
    let mut p = Vec::with_capacity(s.points().len() + 2);
    p.extend_from_slice(&s.points()[..a]);
    p.extend_from_slice(&[Role::LeftOpen, Role::LeftOpen, Role::LeftClose]);
    p.extend_from_slice(&s.points()[a + 1..]);
    ArchState::from_parts_unchecked(p, s.active_index() + 1, true)
}

/// Second visit of an earlier crossing: the active line meets an open line
/// of its own block across an even number of lines. The two meeting lines
/// leave the cut as a right arch and the partner of the line met becomes
/// active.
pub fn descendants_type2(s: &ArchState, allow_tadpoles: bool) -> Vec<ArchState> {
    let layout = s.layout();
    let a = layout.active_pos;
    let pts = s.points();
    let mut out = Vec::new();
    for (l, role) in pts.iter().enumerate() {
        if !role.is_left() || l == a || layout.block[l] != layout.block[a] {
            continue;
        }
        let (lo, hi) = (a.min(l), a.max(l));
        let between = left_count(&pts[lo + 1..hi]);
        if between % 2 == 1 {
            continue;
        }
        if !allow_tadpoles && s.last_was_type1() && between == 0 {
            continue;
        }
        let q = layout.partner[l].expect("non-active lines are paired");
        let mut p = pts.to_vec();
        p[lo] = Role::RightOpen;
        p[hi] = Role::RightClose;
        p[q] = Role::LeftOpen;
        let active = left_count(&p[..q]);
        out.push(ArchState::from_parts_unchecked(p, active, false));
    }
    out
}

/// New tangency pair, drawn on either side of the active line.
pub fn descendants_tangency(s: &ArchState) -> [ArchState; 2] {
    let a = s.active_position();
    let pts = s.points();
    let build = |above: bool| {
        let mut p = Vec::with_capacity(pts.len() + 2);
        p.extend_from_slice(&pts[..a]);
        if above {
            p.extend_from_slice(&[Role::LeftOpen, Role::LeftClose, Role::LeftOpen]);
        } else {
            p.extend_from_slice(&[Role::LeftOpen, Role::LeftOpen, Role::LeftClose]);
        }
        p.extend_from_slice(&pts[a + 1..]);
        let active = s.active_index() + if above { 2 } else { 0 };
        ArchState::from_parts_unchecked(p, active, false)
    };
    [build(true), build(false)]
}

/// All raw moves from `s`, before reduction.
pub fn raw_moves(s: &ArchState, rules: MoveRules) -> Vec<Descendant> {
    let mut out = Vec::new();
    let mut t1 = descendants_type1(s);
    if rules.allow_tadpoles {
        t1 = t1.with_type1_flag(false);
    }
    out.push(Descendant {
        state: t1,
        kind: MoveKind::Type1,
    });
    if rules.tangencies {
        for state in descendants_tangency(s) {
            out.push(Descendant {
                state,
                kind: MoveKind::Tangency,
            });
        }
    }
    for state in descendants_type2(s, rules.allow_tadpoles) {
        out.push(Descendant {
            state,
            kind: MoveKind::Type2,
        });
    }
    out
}

/// Surviving descendants in canonical form. Repeats are kept; each counts once.
pub fn descendants(s: &ArchState, rules: MoveRules) -> Vec<Descendant> {
    raw_moves(s, rules)
        .into_iter()
        .filter_map(|d| {
            let state = d.state.reduce();
            state.validate().is_valid().then_some(Descendant {
                state,
                kind: d.kind,
            })
        })
        .collect()
}

/// Weights per tangency degree.
pub type Weights<E> = SmallVec<[E; 1]>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedStateMap<E> {
    pub states: FxHashMap<StateKey, Weights<E>>,
    pub step_index: usize,
}

impl<E> WeightedStateMap<E> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub struct Transfer<W: WeightArith> {
    options: EnumerationOptions,
    truncation: Truncation,
    rules: MoveRules,
    degrees: usize,
    arith: W,
}

impl<W: WeightArith> Transfer<W> {
    pub fn new(options: EnumerationOptions, arith: W) -> Result<Self, TransferError> {
        options.check()?;
        let truncation = options.truncation();
        let rules = MoveRules {
            allow_tadpoles: options.allow_tadpoles,
            tangencies: truncation.uses_tangencies(),
        };
        Ok(Transfer {
            degrees: truncation.max_tangencies() + 1,
            options,
            truncation,
            rules,
            arith,
        })
    }

    pub fn options(&self) -> &EnumerationOptions {
        &self.options
    }

    pub fn arith(&self) -> &W {
        &self.arith
    }

    pub fn total_steps(&self) -> usize {
        2 * self.options.max_order
    }

    pub fn initial(&self) -> WeightedStateMap<W::Elem> {
        let mut w: Weights<W::Elem> = (0..self.degrees).map(|_| self.arith.zero()).collect();
        w[0] = self.arith.one();
        let mut states = FxHashMap::default();
        let key = ArchState::vacuum().encode_unchecked().expect("vacuum fits");
        states.insert(key, w);
        WeightedStateMap {
            states,
            step_index: 0,
        }
    }

    /// Whether a state reached at `step` may still contribute.
    fn keep(&self, step: usize, other_lines: usize, degree: usize) -> bool {
        let half = other_lines / 2;
        if half > self.total_steps().saturating_sub(step) {
            return false;
        }
        let created = (step + half) / 2;
        degree <= created && self.truncation.admissible(created - degree, degree)
    }

    fn expand_into(
        &self,
        key: &StateKey,
        w: &Weights<W::Elem>,
        step: usize,
        acc: &mut FxHashMap<StateKey, Weights<W::Elem>>,
    ) {
        let s = ArchState::decode_key(key).expect("keys in the map decode");
        for d in descendants(&s, self.rules) {
            let l = d.state.other_lines();
            let shift = d.tangency_shift();
            let mut key = None;
            for (i, x) in w.iter().enumerate() {
                let deg = i + shift;
                if deg >= self.degrees || self.arith.is_zero(x) || !self.keep(step, l, deg) {
                    continue;
                }
                let k = key.get_or_insert_with(|| {
                    d.state.encode_unchecked().expect("order bounded by MAX_ORDER")
                });
                let slot = acc
                    .entry(k.clone())
                    .or_insert_with(|| (0..self.degrees).map(|_| self.arith.zero()).collect());
                self.arith.add_assign(&mut slot[deg], x);
            }
        }
    }

    pub fn step(&self, map: &WeightedStateMap<W::Elem>) -> WeightedStateMap<W::Elem> {
        let step = map.step_index + 1;
        let states = map
            .states
            .par_iter()
            .fold(FxHashMap::default, |mut acc, (key, w)| {
                self.expand_into(key, w, step, &mut acc);
                acc
            })
            .reduce(FxHashMap::default, |a, b| {
                let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
                for (k, w) in small {
                    match big.entry(k) {
                        std::collections::hash_map::Entry::Occupied(mut e) => {
                            for (x, y) in e.get_mut().iter_mut().zip(&w) {
                                self.arith.add_assign(x, y);
                            }
                        }
                        std::collections::hash_map::Entry::Vacant(e) => {
                            e.insert(w);
                        }
                    }
                }
                big
            });
        WeightedStateMap {
            states,
            step_index: step,
        }
    }
}

/// Run controls that do not affect the result.
#[derive(Clone, Debug, Default)]
pub struct RunControl {
    /// Abort once a step holds more states than this.
    pub max_states: Option<usize>,
    pub checkpoint: Option<CheckpointConfig>,
}

#[derive(Clone, Debug)]
pub struct CheckpointConfig {
    pub path: PathBuf,
    /// Write a checkpoint after every this many steps.
    pub every: usize,
    /// Continue from `path` if it exists.
    pub resume: bool,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint<E> {
    // JSON: the tagged option enums do not round-trip through bincode
    options: String,
    vacuum: Vec<((usize, usize), E)>,
    peak_states: Vec<usize>,
    map: WeightedStateMap<E>,
}

fn checkpoint_err(path: &Path, e: impl std::fmt::Display) -> TransferError {
    TransferError::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn save_checkpoint<E: Serialize>(path: &Path, cp: &Checkpoint<E>) -> Result<(), TransferError> {
    let tmp = path.with_extension("tmp");
    let f = fs::File::create(&tmp).map_err(|e| checkpoint_err(path, e))?;
    bincode::serialize_into(BufWriter::new(f), cp).map_err(|e| checkpoint_err(path, e))?;
    fs::rename(&tmp, path).map_err(|e| checkpoint_err(path, e))
}

fn load_checkpoint<E: DeserializeOwned>(path: &Path) -> Result<Checkpoint<E>, TransferError> {
    let f = fs::File::open(path).map_err(|e| checkpoint_err(path, e))?;
    bincode::deserialize_from(BufReader::new(f)).map_err(|e| checkpoint_err(path, e))
}

fn options_text(o: &EnumerationOptions) -> String {
    serde_json::to_string(o).expect("options serialize")
}

struct RawRun<E> {
    vacuum: FxHashMap<(usize, usize), E>,
    peak_states: Vec<usize>,
}

fn run<W>(transfer: &Transfer<W>, control: &RunControl) -> Result<RawRun<W::Elem>, TransferError>
where
    W: WeightArith,
    W::Elem: Serialize + DeserializeOwned,
{
    let opts = transfer.options().clone();
    let arith = transfer.arith();
    let vacuum_key = ArchState::vacuum().encode_unchecked()?;
    let mut vacuum: FxHashMap<(usize, usize), W::Elem> = FxHashMap::default();
    let mut peak_states = Vec::new();
    let mut map = transfer.initial();

    if let Some(cp) = control.checkpoint.as_ref().filter(|c| c.resume && c.path.exists()) {
        let saved: Checkpoint<W::Elem> = load_checkpoint(&cp.path)?;
        if saved.options != options_text(&opts) {
            return Err(checkpoint_err(&cp.path, "written for different options"));
        }
        vacuum = saved.vacuum.into_iter().collect();
        peak_states = saved.peak_states;
        map = saved.map;
    }

    while map.step_index < transfer.total_steps() {
        map = transfer.step(&map);
        let k = map.step_index;
        if k.is_multiple_of(2) {
            let n = k / 2;
            let read = if opts.first_return {
                map.states.remove(&vacuum_key)
            } else {
                map.states.get(&vacuum_key).cloned()
            };
            if let Some(w) = read {
                for (d, x) in w.into_iter().enumerate() {
                    if d <= n && !arith.is_zero(&x) {
                        let slot = vacuum.entry((n - d, d)).or_insert_with(|| arith.zero());
                        arith.add_assign(slot, &x);
                    }
                }
            }
        }
        peak_states.push(map.len());
        if let Some(limit) = control.max_states {
            if map.len() > limit {
                return Err(TransferError::ResourceLimit {
                    step: k,
                    states: map.len(),
                    limit,
                    peak_states,
                });
            }
        }
        if let Some(cp) = &control.checkpoint {
            if cp.every > 0 && k.is_multiple_of(cp.every) && k < transfer.total_steps() {
                let mut saved: Vec<_> = vacuum.iter().map(|(i, x)| (*i, x.clone())).collect();
                saved.sort_by_key(|(i, _)| *i);
                save_checkpoint(
                    &cp.path,
                    &Checkpoint {
                        options: options_text(&opts),
                        vacuum: saved,
                        peak_states: peak_states.clone(),
                        map: map.clone(),
                    },
                )?;
            }
        }
    }
    Ok(RawRun {
        vacuum,
        peak_states,
    })
}

fn assemble<E>(
    options: &EnumerationOptions,
    raw: RawRun<E>,
    convert: impl Fn(&E) -> Count,
    zero: Count,
    one: Count,
) -> CoefficientTable {
    let entries = options
        .truncation()
        .indices()
        .into_iter()
        .map(|idx| {
            let c = if idx == (0, 0) {
                if options.first_return {
                    zero.clone()
                } else {
                    one.clone()
                }
            } else {
                raw.vacuum.get(&idx).map(&convert).unwrap_or_else(|| zero.clone())
            };
            (idx, c)
        })
        .collect();
    CoefficientTable {
        options: options.clone(),
        tadpole_free: !options.allow_tadpoles,
        entries,
        peak_states: raw.peak_states,
    }
}

/// Runs the transfer loop and returns the vacuum reads as they are. With
/// tadpoles excluded the counts are tadpole-free.
pub fn enumerate_raw(
    options: &EnumerationOptions,
    control: &RunControl,
) -> Result<CoefficientTable, TransferError> {
    options.check()?;
    match &options.arithmetic {
        Arithmetic::Exact => {
            let t = Transfer::new(options.clone(), Exact)?;
            let raw = run(&t, control)?;
            Ok(assemble(
                options,
                raw,
                |x| Count::Exact(x.to_biguint()),
                Count::Exact(0u32.into()),
                Count::Exact(1u32.into()),
            ))
        }
        Arithmetic::Residues { moduli } => {
            let t = Transfer::new(options.clone(), Residues::new(moduli.clone()))?;
            let raw = run(&t, control)?;
            Ok(assemble(
                options,
                raw,
                |x| Count::Residues(x.to_vec()),
                Count::Residues(vec![0; moduli.len()]),
                Count::Residues(vec![1; moduli.len()]),
            ))
        }
    }
}

/// Counts of all diagrams. Runs without tadpoles are restored afterwards.
pub fn enumerate(
    options: &EnumerationOptions,
    control: &RunControl,
) -> Result<CoefficientTable, TransferError> {
    let raw = enumerate_raw(options, control)?;
    if raw.tadpole_free {
        Ok(tadpoles::restore_table(&raw))
    } else {
        Ok(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(s: &str) -> ArchState {
        s.parse().unwrap()
    }

    const ALL: MoveRules = MoveRules {
        allow_tadpoles: true,
        tangencies: false,
    };

    #[test]
    fn vacuum_has_one_descendant() {
        let d = descendants(&ArchState::vacuum(), ALL);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].state.to_string(), "110:1");
    }

    #[test]
    fn first_closures() {
        let d = descendants(&st("110:1"), ALL);
        let mut names: Vec<String> = d.iter().map(|d| d.state.to_string()).collect();
        names.sort();
        assert_eq!(names, ["11100:2", "1:0", "1:0"]);
    }

    #[test]
    fn tadpole_rule_skips_adjacent_return() {
        let rules = MoveRules {
            allow_tadpoles: false,
            tangencies: false,
        };
        let s = descendants(&ArchState::vacuum(), rules).remove(0).state;
        assert!(s.last_was_type1());
        let d = descendants(&s, rules);
        assert!(d.iter().all(|d| d.kind == MoveKind::Type1));
    }

    #[test]
    fn tangency_sides() {
        let [up, down] = descendants_tangency(&ArchState::vacuum());
        assert_eq!(up.to_string(), "101:2");
        assert_eq!(down.to_string(), "110:0");
    }

    #[test]
    fn small_orders_match_known_counts() {
        let t = enumerate(&EnumerationOptions::crossings(4), &RunControl::default()).unwrap();
        let got: Vec<u64> = (0..=4).map(|p| t.exact(p, 0).unwrap().try_into().unwrap()).collect();
        assert_eq!(got, [1, 2, 8, 42, 260]);
    }

    #[test]
    fn limit_aborts_with_diagnostics() {
        let control = RunControl {
            max_states: Some(5),
            checkpoint: None,
        };
        match enumerate(&EnumerationOptions::crossings(6), &control) {
            Err(TransferError::ResourceLimit {
                step, peak_states, ..
            }) => assert_eq!(peak_states.len(), step),
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn rejects_huge_order() {
        let o = EnumerationOptions::crossings(MAX_ORDER + 1);
        assert!(matches!(
            enumerate(&o, &RunControl::default()),
            Err(TransferError::Options(_))
        ));
    }
}

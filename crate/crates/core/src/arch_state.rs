//! Slice states of a partially drawn two-leg diagram.
//!
//! A state is read top to bottom along the cut. Every point is either an open
//! line (a `Left*` role, paired into left arches by Dyck matching) or a
//! delimiter of a right arch (a `Right*` role). Exactly one open line is the
//! active line; it is stored as an index into the open lines and is written
//! with the `LeftOpen` digit, while the remaining open lines form a balanced
//! Dyck word on their own.
//!
//! Right arches partition the open lines into blocks. Two lines of the same
//! block may still be joined in the undrawn region, lines of different blocks
//! may not. Only that partition matters for the future evolution, so the
//! canonical representative draws every arch as tightly as possible around
//! the lines it screens: its opening is immediately followed by a line of its
//! own block and its closing immediately preceded by one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Width of the active-index field in a [`StateKey`].
pub const ACTIVE_BITS: u32 = 8;
const MAX_ACTIVE: usize = (1 << ACTIVE_BITS) - 1;
const LOW_BITS: u32 = ACTIVE_BITS + 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateError {
    #[error("a state needs at least the active line")]
    Empty,
    #[error("open lines (other than the active line) do not form a Dyck word")]
    UnbalancedLeft,
    #[error("right arches do not form a Dyck word")]
    UnbalancedRight,
    #[error("active index {index} out of range ({lines} open lines)")]
    ActiveOutOfRange { index: usize, lines: usize },
    #[error("the active line must carry the LeftOpen digit")]
    ActiveRole,
    #[error("state is not canonical; reduce it before encoding")]
    NotCanonical,
    #[error("state has {0} open lines; keys hold at most {MAX_ACTIVE} + 1")]
    TooWide(usize),
    #[error("invalid digit {0:?}")]
    BadDigit(char),
    #[error("malformed state text {0:?}")]
    BadText(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    LeftOpen,
    LeftClose,
    RightOpen,
    RightClose,
}

impl Role {
    pub fn digit(self) -> u8 {
        match self {
            Role::LeftOpen => 1,
            Role::LeftClose => 0,
            Role::RightOpen => 3,
            Role::RightClose => 2,
        }
    }

    pub fn from_digit(d: u8) -> Option<Role> {
        match d {
            1 => Some(Role::LeftOpen),
            0 => Some(Role::LeftClose),
            3 => Some(Role::RightOpen),
            2 => Some(Role::RightClose),
            _ => None,
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, Role::LeftOpen | Role::LeftClose)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArchState {
    points: Vec<Role>,
    active: usize,
    last_was_type1: bool,
}

/// Derived structure of a state: arch pairings and block membership.
#[derive(Clone, Debug)]
pub struct Layout {
    /// Position of the active line.
    pub active_pos: usize,
    /// For each position: the left-arch partner (open lines other than the
    /// active line only).
    pub partner: Vec<Option<usize>>,
    /// For each position holding an open line: the innermost enclosing arch
    /// (index into `arches`), `None` for the outermost block.
    pub block: Vec<Option<usize>>,
    /// Right arches as (opening, closing) positions, ordered by opening.
    pub arches: Vec<(usize, usize)>,
}

impl ArchState {
    /// Builds a state after checking both Dyck conditions and the active index.
    pub fn new(points: Vec<Role>, active: usize, last_was_type1: bool) -> Result<Self, StateError> {
        let s = ArchState {
            points,
            active,
            last_was_type1,
        };
        s.check_structure()?;
        Ok(s)
    }

    pub(crate) fn from_parts_unchecked(points: Vec<Role>, active: usize, last_was_type1: bool) -> Self {
        let s = ArchState {
            points,
            active,
            last_was_type1,
        };
        debug_assert_eq!(s.check_structure(), Ok(()));
        s
    }

    /// The state holding the active line only.
    pub fn vacuum() -> Self {
        ArchState {
            points: vec![Role::LeftOpen],
            active: 0,
            last_was_type1: false,
        }
    }

    pub fn points(&self) -> &[Role] {
        &self.points
    }

    /// Index of the active line among the open lines.
    pub fn active_index(&self) -> usize {
        self.active
    }

    pub fn last_was_type1(&self) -> bool {
        self.last_was_type1
    }

    pub fn with_type1_flag(mut self, flag: bool) -> Self {
        self.last_was_type1 = flag;
        self
    }

    pub fn is_vacuum(&self) -> bool {
        self.points.len() == 1
    }

    /// Number of open lines, the active line included.
    pub fn line_count(&self) -> usize {
        self.points.iter().filter(|r| r.is_left()).count()
    }

    /// Number of open lines other than the active line (written `l`).
    pub fn other_lines(&self) -> usize {
        self.line_count() - 1
    }

    pub fn active_position(&self) -> usize {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_left())
            .nth(self.active)
            .map(|(i, _)| i)
            .expect("active index checked at construction")
    }

    fn check_structure(&self) -> Result<(), StateError> {
        if self.points.is_empty() {
            return Err(StateError::Empty);
        }
        let lines = self.line_count();
        if self.active >= lines {
            return Err(StateError::ActiveOutOfRange {
                index: self.active,
                lines,
            });
        }
        let mut left_depth = 0i64;
        let mut right_depth = 0i64;
        let mut seen_left = 0usize;
        for &r in &self.points {
            match r {
                Role::LeftOpen | Role::LeftClose => {
                    let is_active = seen_left == self.active;
                    seen_left += 1;
                    if is_active {
                        if r != Role::LeftOpen {
                            return Err(StateError::ActiveRole);
                        }
                        continue;
                    }
                    left_depth += if r == Role::LeftOpen { 1 } else { -1 };
                    if left_depth < 0 {
                        return Err(StateError::UnbalancedLeft);
                    }
                }
                Role::RightOpen => right_depth += 1,
                Role::RightClose => {
                    right_depth -= 1;
                    if right_depth < 0 {
                        return Err(StateError::UnbalancedRight);
                    }
                }
            }
        }
        if left_depth != 0 {
            return Err(StateError::UnbalancedLeft);
        }
        if right_depth != 0 {
            return Err(StateError::UnbalancedRight);
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        let n = self.points.len();
        let mut partner = vec![None; n];
        let mut block = vec![None; n];
        let mut arches = Vec::new();
        let mut left_stack: Vec<usize> = Vec::new();
        let mut arch_stack: Vec<usize> = Vec::new();
        let mut seen_left = 0usize;
        let mut active_pos = 0;
        for (i, &r) in self.points.iter().enumerate() {
            match r {
                Role::LeftOpen | Role::LeftClose => {
                    block[i] = arch_stack.last().copied();
                    let is_active = seen_left == self.active;
                    seen_left += 1;
                    if is_active {
                        active_pos = i;
                    } else if r == Role::LeftOpen {
                        left_stack.push(i);
                    } else {
                        let j = left_stack.pop().expect("balanced");
                        partner[i] = Some(j);
                        partner[j] = Some(i);
                    }
                }
                Role::RightOpen => {
                    arch_stack.push(arches.len());
                    arches.push((i, usize::MAX));
                }
                Role::RightClose => {
                    let a = arch_stack.pop().expect("balanced");
                    arches[a].1 = i;
                }
            }
        }
        Layout {
            active_pos,
            partner,
            block,
            arches,
        }
    }

    /// Classifies every right arch against the two forbidden patterns.
    pub fn validate(&self) -> ValidationReport {
        let layout = self.layout();
        let blocks = layout
            .arches
            .iter()
            .map(|&(open, close)| {
                let mut lines = 0usize;
                let mut exterior = false;
                for i in open + 1..close {
                    if !self.points[i].is_left() {
                        continue;
                    }
                    lines += 1;
                    match layout.partner[i] {
                        None => exterior = true, // the active line
                        Some(j) if j < open || j > close => exterior = true,
                        Some(_) => {}
                    }
                }
                BlockReport {
                    open,
                    close,
                    lines,
                    isolated: lines > 0 && !exterior,
                    odd: lines % 2 == 1,
                }
            })
            .collect();
        ValidationReport { blocks }
    }

    /// Canonical representative: empty arches dropped, all others tight.
    pub fn reduce(&self) -> ArchState {
        let layout = self.layout();
        let na = layout.arches.len();
        let mut first = vec![usize::MAX; na];
        let mut last = vec![usize::MAX; na];
        for (i, b) in layout.block.iter().enumerate() {
            if let Some(b) = *b {
                if first[b] == usize::MAX {
                    first[b] = i;
                }
                last[b] = i;
            }
        }
        let mut points = Vec::with_capacity(self.points.len());
        for (i, &r) in self.points.iter().enumerate() {
            if !r.is_left() {
                continue;
            }
            let b = layout.block[i];
            if let Some(b) = b {
                if first[b] == i {
                    points.push(Role::RightOpen);
                }
            }
            points.push(r);
            if let Some(b) = b {
                if last[b] == i {
                    points.push(Role::RightClose);
                }
            }
        }
        ArchState::from_parts_unchecked(points, self.active, self.last_was_type1)
    }

    pub fn is_canonical(&self) -> bool {
        self.simplifications().is_empty()
    }

    /// Every single rewrite that currently applies.
    pub fn simplifications(&self) -> Vec<Simplification> {
        let layout = self.layout();
        let mut out = Vec::new();
        for &(open, close) in &layout.arches {
            let direct = direct_lines(&self.points, open, close);
            if direct == 0 {
                out.push(Simplification::RemoveEmpty { open });
            }
            if self.points[open + 1] == Role::RightOpen {
                out.push(Simplification::SlideOpening { open });
            }
            if self.points[close - 1] == Role::RightClose {
                out.push(Simplification::SlideClosing { close });
            }
        }
        out
    }

    /// Applies one rewrite. Panics if `rule` does not apply to this state.
    pub fn apply(&self, rule: Simplification) -> ArchState {
        let layout = self.layout();
        let mut points = self.points.clone();
        match rule {
            Simplification::RemoveEmpty { open } => {
                let &(_, close) = layout
                    .arches
                    .iter()
                    .find(|a| a.0 == open)
                    .expect("rule applies to an existing arch");
                points.remove(close);
                points.remove(open);
            }
            Simplification::SlideOpening { open } => {
                let &(_, inner_close) = layout
                    .arches
                    .iter()
                    .find(|a| a.0 == open + 1)
                    .expect("inner arch starts right after");
                points.insert(inner_close + 1, Role::RightOpen);
                points.remove(open);
            }
            Simplification::SlideClosing { close } => {
                let &(inner_open, _) = layout
                    .arches
                    .iter()
                    .find(|a| a.1 == close - 1)
                    .expect("inner arch ends right before");
                points.remove(close);
                points.insert(inner_open, Role::RightClose);
            }
        }
        ArchState::from_parts_unchecked(points, self.active, self.last_was_type1)
    }

    /// Applies rewrites until none is left, letting `choose` pick which of
    /// the applicable ones goes next.
    pub fn reduce_by_rules<F>(&self, mut choose: F) -> ArchState
    where
        F: FnMut(&[Simplification]) -> usize,
    {
        let mut s = self.clone();
        loop {
            let rules = s.simplifications();
            if rules.is_empty() {
                return s;
            }
            let k = choose(&rules);
            s = s.apply(rules[k]);
        }
    }

    pub fn encode_key(&self) -> Result<StateKey, StateError> {
        if !self.is_canonical() {
            return Err(StateError::NotCanonical);
        }
        self.encode_unchecked()
    }

    /// Encodes without the canonical-form check. Callers in the transfer loop
    /// only hold reduced states.
    pub(crate) fn encode_unchecked(&self) -> Result<StateKey, StateError> {
        if self.active > MAX_ACTIVE {
            return Err(StateError::TooWide(self.line_count()));
        }
        let mut w = BitWriter::default();
        w.push(self.last_was_type1 as u64, 1);
        w.push(self.active as u64, ACTIVE_BITS);
        for r in self.points.iter().rev() {
            w.push(r.digit() as u64, 2);
        }
        Ok(StateKey(w.finish()))
    }

    pub fn decode_key(key: &StateKey) -> Result<ArchState, StateError> {
        let words = &key.0;
        let bit_len = words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| 64 * i as u32 + 64 - w.leading_zeros())
            .unwrap_or(0);
        if bit_len <= LOW_BITS {
            return Err(StateError::Empty);
        }
        let read = |pos: u32, width: u32| -> u64 {
            let mut v = 0u64;
            for b in 0..width {
                let p = pos + b;
                let bit = (words[(p / 64) as usize] >> (p % 64)) & 1;
                v |= bit << b;
            }
            v
        };
        let flag = read(0, 1) == 1;
        let active = read(1, ACTIVE_BITS) as usize;
        let ndigits = (bit_len - LOW_BITS).div_ceil(2);
        let mut points = Vec::with_capacity(ndigits as usize);
        for k in (0..ndigits).rev() {
            let d = read(LOW_BITS + 2 * k, 2) as u8;
            points.push(Role::from_digit(d).expect("two-bit digit"));
        }
        ArchState::new(points, active, flag)
    }

    /// Digit string over {1,0,3,2}.
    pub fn digits(&self) -> String {
        self.points.iter().map(|r| (b'0' + r.digit()) as char).collect()
    }
}

fn direct_lines(points: &[Role], open: usize, close: usize) -> usize {
    let mut depth = 0usize;
    let mut n = 0;
    for r in &points[open + 1..close] {
        match r {
            Role::RightOpen => depth += 1,
            Role::RightClose => depth -= 1,
            _ if depth == 0 => n += 1,
            _ => {}
        }
    }
    n
}

/// Text form `<digits>:<active index>`, with a trailing `*` when the previous
/// move inserted a crossing.
impl fmt::Display for ArchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.digits(), self.active)?;
        if self.last_was_type1 {
            f.write_str("*")?;
        }
        Ok(())
    }
}

impl FromStr for ArchState {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (body, flag) = match s.strip_suffix('*') {
            Some(b) => (b, true),
            None => (s, false),
        };
        let (digits, active) = body
            .split_once(':')
            .ok_or_else(|| StateError::BadText(s.to_string()))?;
        let active: usize = active
            .parse()
            .map_err(|_| StateError::BadText(s.to_string()))?;
        let points = digits
            .chars()
            .map(|c| {
                c.to_digit(4)
                    .and_then(|d| Role::from_digit(d as u8))
                    .ok_or(StateError::BadDigit(c))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ArchState::new(points, active, flag)
    }
}

/// One local rewrite of the right-arch layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Simplification {
    /// Drop an arch that screens no open line of its own.
    RemoveEmpty { open: usize },
    /// An arch opening directly onto an inner arch: move the opening past it.
    SlideOpening { open: usize },
    /// An arch closing directly after an inner arch: move the closing before it.
    SlideClosing { close: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockReport {
    pub open: usize,
    pub close: usize,
    /// Open lines enclosed by the arch, nested ones included.
    pub lines: usize,
    /// No enclosed line is the active line or joined to a line outside.
    pub isolated: bool,
    /// Odd number of enclosed lines.
    pub odd: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub blocks: Vec<BlockReport>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.blocks.iter().all(|b| !b.isolated && !b.odd)
    }

    pub fn has_isolated(&self) -> bool {
        self.blocks.iter().any(|b| b.isolated)
    }

    pub fn has_odd(&self) -> bool {
        self.blocks.iter().any(|b| b.odd)
    }
}

/// Injective integer key of a canonical state, little-endian 64-bit words.
///
/// Bit 0 holds the crossing flag, the next [`ACTIVE_BITS`] bits the active
/// index, and above that the base-4 digits with the top point most
/// significant. The top digit is never 0 or 2, so the length is implied.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey(pub SmallVec<[u64; 2]>);

impl StateKey {
    pub fn bit_len(&self) -> u32 {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| 64 * i as u32 + 64 - w.leading_zeros())
            .unwrap_or(0)
    }
}

#[derive(Default)]
struct BitWriter {
    words: SmallVec<[u64; 2]>,
    len: u32,
}

impl BitWriter {
    fn push(&mut self, value: u64, width: u32) {
        for b in 0..width {
            let bit = (value >> b) & 1;
            let p = self.len;
            if p.is_multiple_of(64) {
                self.words.push(0);
            }
            self.words[(p / 64) as usize] |= bit << (p % 64);
            self.len += 1;
        }
    }

    fn finish(mut self) -> SmallVec<[u64; 2]> {
        while self.words.len() > 1 && *self.words.last().unwrap() == 0 {
            self.words.pop();
        }
        self.words
    }
}

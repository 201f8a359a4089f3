//! Which coefficients `(p1, p2)` a run computes.
//!
//! `p1` counts crossings, `p2` counts tangency pairs. A run of order `p`
//! keeps `p1 + p2 <= p`; tangencies may be capped further.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum TangencyCutoff {
    /// Crossings only.
    Off,
    /// At most this many tangency pairs.
    Max(usize),
    /// `p2 == 0`, or `p1 + 3 p2 <= p + slack`.
    ///
    /// Slack 0 keeps exactly the terms that can matter at order `p` after
    /// substituting `g2 = O(g^3)`. Renormalising to order `p` reads `G` at
    /// order `p + 1` and needs slack 2.
    PowerCounting { slack: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub max_order: usize,
    pub tangencies: TangencyCutoff,
}

impl Truncation {
    pub fn new(max_order: usize, tangencies: TangencyCutoff) -> Self {
        Truncation {
            max_order,
            tangencies,
        }
    }

    pub fn admissible(&self, p1: usize, p2: usize) -> bool {
        if p1 + p2 > self.max_order {
            return false;
        }
        match self.tangencies {
            TangencyCutoff::Off => p2 == 0,
            TangencyCutoff::Max(m) => p2 <= m,
            TangencyCutoff::PowerCounting { slack } => {
                p2 == 0 || p1 + 3 * p2 <= self.max_order + slack
            }
        }
    }

    /// Largest tangency count kept at any order.
    pub fn max_tangencies(&self) -> usize {
        (0..=self.max_order)
            .rev()
            .find(|&p2| self.admissible(0, p2))
            .unwrap_or(0)
    }

    /// All admissible indices, by total order then `p2`.
    pub fn indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for n in 0..=self.max_order {
            for p2 in 0..=n {
                if self.admissible(n - p2, p2) {
                    out.push((n - p2, p2));
                }
            }
        }
        out
    }

    pub fn uses_tangencies(&self) -> bool {
        self.max_tangencies() > 0
    }
}

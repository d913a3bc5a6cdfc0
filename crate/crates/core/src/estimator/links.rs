use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Whether the two directions of a node pair are separate links or merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    Directed,
    Reciprocal,
}

/// A link between nodes `a` and `b`. For reciprocal links `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub a: usize,
    pub b: usize,
}

/// Ordered set of links; position in the set is the link's row in `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkIndex {
    mode: LinkMode,
    links: Vec<Link>,
    rows: HashMap<(usize, usize), usize>,
}

impl LinkIndex {
    /// Links in the given order. For reciprocal mode each pair is stored
    /// with `a < b`; duplicates are dropped.
    pub fn new(mode: LinkMode, links: impl IntoIterator<Item = Link>) -> Self {
        let mut out = Self {
            mode,
            links: Vec::new(),
            rows: HashMap::new(),
        };
        for l in links {
            let l = match mode {
                LinkMode::Directed => l,
                LinkMode::Reciprocal => Link {
                    a: l.a.min(l.b),
                    b: l.a.max(l.b),
                },
            };
            if l.a == l.b || out.rows.contains_key(&(l.a, l.b)) {
                continue;
            }
            out.rows.insert((l.a, l.b), out.links.len());
            out.links.push(l);
        }
        out
    }

    /// Every link among `n` nodes, ordered by `(a, b)`.
    pub fn all_pairs(n: usize, mode: LinkMode) -> Self {
        let pairs = (0..n).flat_map(|a| (0..n).map(move |b| Link { a, b }));
        match mode {
            LinkMode::Directed => Self::new(mode, pairs.filter(|l| l.a != l.b)),
            LinkMode::Reciprocal => Self::new(mode, pairs.filter(|l| l.a < l.b)),
        }
    }

    pub fn mode(&self) -> LinkMode {
        self.mode
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Row for a measurement on `tx -> rx`.
    pub fn row_of(&self, tx: usize, rx: usize) -> Option<usize> {
        let key = match self.mode {
            LinkMode::Directed => (tx, rx),
            LinkMode::Reciprocal => (tx.min(rx), tx.max(rx)),
        };
        self.rows.get(&key).copied()
    }
}

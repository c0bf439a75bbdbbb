//! Small boolean matrices over DFA states, stored as one `u64` bitset per row.
//!
//! Rows index the source state and bits index the target state, so a row
//! vector of states multiplies on the left: `v · M = ⋃_{q ∈ v} M[q]`.

use std::fmt;

/// Largest state count a [`BoolMatrix`] can hold.
pub const MAX_STATES: usize = 64;

/// Bitset of DFA states.
pub type StateSet = u64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    n: usize,
    rows: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_STATES, "matrix dimension {n} exceeds {MAX_STATES}");
        BoolMatrix { n, rows: vec![0; n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for q in 0..n {
            m.rows[q] = 1 << q;
        }
        m
    }

    pub fn from_rows(n: usize, rows: Vec<u64>) -> Self {
        assert_eq!(rows.len(), n);
        let mask = full_mask(n);
        debug_assert!(rows.iter().all(|r| r & !mask == 0));
        BoolMatrix { n, rows }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn get(&self, from: usize, to: usize) -> bool {
        self.rows[from] >> to & 1 == 1
    }

    pub fn set(&mut self, from: usize, to: usize, value: bool) {
        if value {
            self.rows[from] |= 1 << to;
        } else {
            self.rows[from] &= !(1 << to);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Boolean product `self · rhs`.
    pub fn mul(&self, rhs: &BoolMatrix) -> BoolMatrix {
        debug_assert_eq!(self.n, rhs.n);
        let rows = self.rows.iter().map(|&r| apply(r, &rhs.rows)).collect();
        BoolMatrix { n: self.n, rows }
    }

    /// Element-wise OR.
    pub fn union_with(&mut self, rhs: &BoolMatrix) {
        for (a, b) in self.rows.iter_mut().zip(&rhs.rows) {
            *a |= b;
        }
    }

    /// Renders the matrix as a 0/1 grid, one row per line.
    pub fn to_grid(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            for q in 0..self.n {
                out.push(if r >> q & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<(usize, usize)> = (0..self.n)
            .flat_map(|a| (0..self.n).filter(move |&b| self.get(a, b)).map(move |b| (a, b)))
            .collect();
        write!(f, "BoolMatrix({}x{}, {:?})", self.n, self.n, pairs)
    }
}

/// Row vector times matrix: the union of the rows selected by `v`.
#[inline]
pub fn apply(v: StateSet, rows: &[u64]) -> StateSet {
    let mut out = 0;
    let mut bits = v;
    while bits != 0 {
        let q = bits.trailing_zeros() as usize;
        out |= rows[q];
        bits &= bits - 1;
    }
    out
}

pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

use std::collections::HashMap;

use crate::matrix::{apply, BoolMatrix, StateSet};

/// Beyond this many distinct powers of a full lap, lookups fall back to two
/// vector products instead of one.
const MAX_TABLE_POWERS: usize = 512;

#[derive(Clone, Debug)]
struct StartTable {
    /// Powers of the full-lap product are periodic from `prefix` on.
    prefix: usize,
    period: usize,
    /// `combined[q * len + m]` = lap^q · partial[m], for q < prefix + period.
    combined: Option<Vec<Vec<u64>>>,
    powers: Vec<Vec<u64>>,
    partial: Vec<Vec<u64>>,
}

/// Products of consecutive matrices of a cyclic sequence,
/// `X[r] · X[r+1] · … · X[r+n-1]` with indices taken mod the length,
/// answered by table lookup.
#[derive(Clone, Debug)]
pub struct PowerOracle {
    dim: usize,
    len: usize,
    starts: Vec<StartTable>,
}

fn mul(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().map(|&r| apply(r, b)).collect()
}

impl PowerOracle {
    pub fn new(seq: &[BoolMatrix]) -> PowerOracle {
        assert!(!seq.is_empty(), "cycle sequences are non-empty");
        let dim = seq[0].dim();
        let len = seq.len();
        let id = BoolMatrix::identity(dim).rows().to_vec();
        let starts = (0..len)
            .map(|r| {
                let mut partial = vec![id.clone()];
                for m in 1..=len {
                    let next = mul(&partial[m - 1], seq[(r + m - 1) % len].rows());
                    partial.push(next);
                }
                let lap = partial.pop().expect("len + 1 entries");
                let mut powers = vec![id.clone()];
                let mut seen: HashMap<Vec<u64>, usize> = HashMap::from([(id.clone(), 0)]);
                let (prefix, period) = loop {
                    let next = mul(powers.last().expect("non-empty"), &lap);
                    if let Some(&at) = seen.get(&next) {
                        break (at, powers.len() - at);
                    }
                    seen.insert(next.clone(), powers.len());
                    powers.push(next);
                };
                let combined = (prefix + period <= MAX_TABLE_POWERS).then(|| {
                    powers
                        .iter()
                        .flat_map(|f| partial.iter().map(move |p| mul(f, p)))
                        .collect()
                });
                StartTable {
                    prefix,
                    period,
                    combined,
                    powers,
                    partial,
                }
            })
            .collect();
        PowerOracle { dim, len, starts }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(prefix, period)` of the lap powers from start `r`.
    pub fn periodicity(&self, r: usize) -> (usize, usize) {
        (self.starts[r].prefix, self.starts[r].period)
    }

    fn reduce(&self, t: &StartTable, n: u64) -> (usize, usize) {
        let (q, m) = if self.len == 1 {
            (n, 0)
        } else {
            (n / self.len as u64, (n % self.len as u64) as usize)
        };
        let q = if q < t.prefix as u64 {
            q as usize
        } else if t.period == 1 {
            t.prefix
        } else {
            t.prefix + ((q - t.prefix as u64) % t.period as u64) as usize
        };
        (q, m)
    }

    fn start(&self, start: usize) -> &StartTable {
        &self.starts[if self.len == 1 { 0 } else { start % self.len }]
    }

    /// Row vector times the product of `n` consecutive matrices starting at
    /// offset `start`. Returns the vector and the number of vector-matrix
    /// products spent.
    pub fn apply(&self, v: StateSet, start: usize, n: u64) -> (StateSet, u32) {
        let t = self.start(start);
        let (q, m) = self.reduce(t, n);
        match &t.combined {
            Some(c) => (apply(v, &c[q * self.len + m]), 1),
            None => (apply(apply(v, &t.powers[q]), &t.partial[m]), 2),
        }
    }

    /// The product matrix itself.
    pub fn query(&self, start: usize, n: u64) -> BoolMatrix {
        let t = self.start(start);
        let (q, m) = self.reduce(t, n);
        let rows = match &t.combined {
            Some(c) => c[q * self.len + m].clone(),
            None => mul(&t.powers[q], &t.partial[m]),
        };
        BoolMatrix::from_rows(self.dim, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(seq: &[BoolMatrix], start: usize, n: usize) -> BoolMatrix {
        let mut m = BoolMatrix::identity(seq[0].dim());
        for s in 0..n {
            m = m.mul(&seq[(start + s) % seq.len()]);
        }
        m
    }

    #[test]
    fn zero_steps_is_identity() {
        let x = BoolMatrix::from_rows(2, vec![0b10, 0b01]);
        let o = PowerOracle::new(&[x]);
        assert_eq!(o.query(0, 0), BoolMatrix::identity(2));
    }

    #[test]
    fn two_by_two_fifth_power() {
        let x = BoolMatrix::from_rows(2, vec![0b11, 0b01]);
        let o = PowerOracle::new(std::slice::from_ref(&x));
        assert_eq!(o.query(0, 5), naive(&[x], 0, 5));
    }

    #[test]
    fn permutation_cycles_with_multiple_steps() {
        let rot = BoolMatrix::from_rows(3, vec![0b010, 0b100, 0b001]);
        let swap = BoolMatrix::from_rows(3, vec![0b010, 0b001, 0b100]);
        let seq = vec![rot.clone(), swap, rot];
        let o = PowerOracle::new(&seq);
        for start in 0..3 {
            let (a, p) = o.periodicity(start);
            for n in 0..3 * (a + p) * 3 + 5 {
                assert_eq!(o.query(start, n as u64), naive(&seq, start, n), "start {start} n {n}");
                let (v, _) = o.apply(0b001, start, n as u64);
                assert_eq!(v, naive(&seq, start, n).rows()[0]);
            }
        }
    }
}

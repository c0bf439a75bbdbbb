//! Pairwise decoding: whether `u` reaches `v` along a path matching a safe
//! query, computed from the two labels and the decode tables alone.

use std::cell::Cell;

use thiserror::Error;

use crate::derivation::{lcp_split, LabelEntry};
use crate::intersection::DecodeTables;
use crate::matrix::{apply, StateSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("label entry {0} does not exist in the spec")]
    UnknownEntry(LabelEntry),
    #[error("labels diverge at entries of different shape: {0} vs {1}")]
    Inconsistent(LabelEntry, LabelEntry),
    #[error("one label is a proper prefix of the other")]
    Prefix,
}

thread_local! {
    static MATRIX_OPS: Cell<u64> = const { Cell::new(0) };
}

/// Vector-matrix products performed by decoding on this thread so far.
pub fn matrix_ops() -> u64 {
    MATRIX_OPS.with(Cell::get)
}

pub fn reset_matrix_ops() {
    MATRIX_OPS.with(|c| c.set(0));
}

struct Fold<'t> {
    t: &'t DecodeTables,
    v: StateSet,
    ops: u32,
}

impl Fold<'_> {
    fn rows(&mut self, rows: &[u64]) {
        self.v = apply(self.v, rows);
        self.ops += 1;
    }

    fn check_prod(&self, k: u32, i: u32) -> Result<(usize, usize), DecodeError> {
        let k0 = (k as usize).wrapping_sub(1);
        let i0 = (i as usize).wrapping_sub(1);
        if k0 >= self.t.num_productions() || i0 >= self.t.rhs_len(k0) {
            return Err(DecodeError::UnknownEntry(LabelEntry::Prod { k, i }));
        }
        Ok((k0, i0))
    }

    fn check_rec(&self, s: u32, t: u32, i: u32) -> Result<(usize, usize), DecodeError> {
        let c = (s as usize).wrapping_sub(1);
        if c >= self.t.num_cycles() || t == 0 || t as usize > self.t.cycle_len(c) || i == 0 {
            return Err(DecodeError::UnknownEntry(LabelEntry::Rec { s, t, i }));
        }
        Ok((c, t as usize - 1))
    }

    /// From the out-ports of the node below `entries` to the out-ports of the
    /// node above them, deepest entry first.
    fn up(&mut self, entries: &[LabelEntry]) -> Result<(), DecodeError> {
        for &e in entries.iter().rev() {
            match e {
                LabelEntry::Prod { k, i } => {
                    let (k0, i0) = self.check_prod(k, i)?;
                    let t = self.t;
                    self.rows(t.up(k0, i0));
                }
                LabelEntry::Rec { s, t, i } => {
                    let (c, t0) = self.check_rec(s, t, i)?;
                    if i > 1 {
                        let (v, ops) = self.t.ascend(c, self.v, t0 + i as usize - 2, i as u64 - 1);
                        self.v = v;
                        self.ops += ops;
                    }
                }
            }
        }
        Ok(())
    }

    /// From the in-ports of the node above `entries` to the in-ports of the
    /// node below them.
    fn down(&mut self, entries: &[LabelEntry]) -> Result<(), DecodeError> {
        for &e in entries {
            match e {
                LabelEntry::Prod { k, i } => {
                    let (k0, i0) = self.check_prod(k, i)?;
                    let t = self.t;
                    self.rows(t.down(k0, i0));
                }
                LabelEntry::Rec { s, t, i } => {
                    let (c, t0) = self.check_rec(s, t, i)?;
                    if i > 1 {
                        let (v, ops) = self.t.descend(c, self.v, t0, i as u64 - 1);
                        self.v = v;
                        self.ops += ops;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Whether some path from `u` to `v` spells a word of the query. Equal labels
/// denote the same node and match iff the query accepts the empty word.
pub fn answer_pairwise(
    u: &[LabelEntry],
    v: &[LabelEntry],
    t: &DecodeTables,
) -> Result<bool, DecodeError> {
    let (_, a, b) = lcp_split(u, v);
    if a.is_empty() && b.is_empty() {
        return Ok(t.start_set() & t.accept_mask() != 0);
    }
    if a.is_empty() || b.is_empty() {
        return Err(DecodeError::Prefix);
    }
    let mut f = Fold {
        t,
        v: t.start_set(),
        ops: 0,
    };
    match (a[0], b[0]) {
        (LabelEntry::Prod { k, i }, LabelEntry::Prod { k: k2, i: j }) if k == k2 => {
            let (k0, i0) = f.check_prod(k, i)?;
            let (_, j0) = f.check_prod(k, j)?;
            if !t.reach(k0, i0, j0) {
                return Ok(false);
            }
            f.up(&a[1..])?;
            f.rows(t.cross(k0, i0, j0));
            f.down(&b[1..])?;
        }
        (LabelEntry::Rec { s, t: tt, i }, LabelEntry::Rec { s: s2, t: t2, i: j })
            if s == s2 && tt == t2 =>
        {
            let (c, t0) = f.check_rec(s, tt, i)?;
            f.check_rec(s, tt, j)?;
            let len = t.cycle_len(c);
            if i < j {
                // u sits inside child i; leave it through the continuation.
                let (kc, p) = t.cycle_step(c, t0 + i as usize - 1);
                let (x, rest) = match a.get(1) {
                    Some(&LabelEntry::Prod { k, i: x }) if k as usize == kc + 1 => {
                        (f.check_prod(k, x)?.1, &a[2..])
                    }
                    Some(&other) => return Err(DecodeError::Inconsistent(a[0], other)),
                    None => return Err(DecodeError::Prefix),
                };
                if !t.reach(kc, x, p) {
                    return Ok(false);
                }
                f.up(rest)?;
                f.rows(t.cross(kc, x, p));
                let (nv, ops) = t.descend(c, f.v, t0 + i as usize, (j - i - 1) as u64);
                f.v = nv;
                f.ops += ops;
                f.down(&b[1..])?;
            } else {
                // v sits inside child j; enter it from the continuation.
                let (kc, p) = t.cycle_step(c, t0 + j as usize - 1);
                let (y, rest) = match b.get(1) {
                    Some(&LabelEntry::Prod { k, i: y }) if k as usize == kc + 1 => {
                        (f.check_prod(k, y)?.1, &b[2..])
                    }
                    Some(&other) => return Err(DecodeError::Inconsistent(b[0], other)),
                    None => return Err(DecodeError::Prefix),
                };
                if !t.reach(kc, p, y) {
                    return Ok(false);
                }
                f.up(&a[1..])?;
                let (nv, ops) =
                    t.ascend(c, f.v, t0 + i as usize + len - 2, (i - j - 1) as u64);
                f.v = nv;
                f.ops += ops;
                f.rows(t.cross(kc, p, y));
                f.down(rest)?;
            }
        }
        (x, y) => return Err(DecodeError::Inconsistent(x, y)),
    }
    MATRIX_OPS.with(|c| c.set(c.get() + f.ops as u64));
    Ok(f.v & t.accept_mask() != 0)
}

/// Plain reachability; `t` must come from the one-state universal query.
pub fn decode_reach(
    u: &[LabelEntry],
    v: &[LabelEntry],
    t: &DecodeTables,
) -> Result<bool, DecodeError> {
    debug_assert_eq!(t.num_states(), 1);
    answer_pairwise(u, v, t)
}

/// Reusable handle bundling the decode tables of one query.
#[derive(Clone, Debug)]
pub struct PairwiseDecoder {
    tables: DecodeTables,
}

impl PairwiseDecoder {
    pub fn new(tables: DecodeTables) -> Self {
        PairwiseDecoder { tables }
    }

    pub fn tables(&self) -> &DecodeTables {
        &self.tables
    }

    pub fn query(&self, u: &[LabelEntry], v: &[LabelEntry]) -> Result<bool, DecodeError> {
        answer_pairwise(u, v, &self.tables)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::NodeLabel;
    use crate::fixtures;
    use crate::intersection::FineGrainedSpec;
    use crate::regex::parse_regex;
    use crate::safety::is_safe_query;

    fn tables(q: &str) -> DecodeTables {
        let g = fixtures::paper_grammar();
        let (safe, report, dfa) = is_safe_query(g.spec(), &parse_regex(q).unwrap());
        assert!(safe, "{q}");
        DecodeTables::compute(&FineGrainedSpec::intersect(&g, &dfa, &report).unwrap())
    }

    fn ask(q: &str, u: &str, v: &str) -> bool {
        let g = fixtures::paper_grammar();
        let run = fixtures::paper_run(&g);
        let t = tables(q);
        let lu = run.label(run.resolve(u).unwrap());
        let lv = run.label(run.resolve(v).unwrap());
        answer_pairwise(&lu.0, &lv.0, &t).unwrap()
    }

    #[test]
    fn fixture_pairs() {
        assert!(ask("_*.e._*", "c:1", "b:1"));
        assert!(!ask("_*.e._*", "c:1", "b:3"));
        assert!(ask("A+", "d:2", "b:1"));
        assert!(ask("_*", "c:1", "b:1"));
        assert!(!ask("_*", "b:1", "c:1"));
        assert!(ask("_*", "a:1", "a:1"));
        assert!(!ask("A+", "a:1", "a:1"));
        assert!(ask("_*", "a:1", "d:1"));
        assert!(ask("_*", "a:2", "d:1"));
        assert!(!ask("_*", "d:2", "a:2"));
        assert!(ask("_*", "a:1", "e:2"));
        assert!(ask("_*", "e:1", "d:1"));
    }

    #[test]
    fn malformed_labels_are_rejected() {
        let t = tables("_*");
        let l = |s: &str| s.parse::<NodeLabel>().unwrap().0;
        assert!(matches!(
            answer_pairwise(&l("(1,9)"), &l("(1,1)"), &t),
            Err(DecodeError::UnknownEntry(_))
        ));
        assert!(matches!(
            answer_pairwise(&l("(1,1)"), &l("(1,1)(2,1)"), &t),
            Err(DecodeError::Prefix)
        ));
        assert!(answer_pairwise(&l("(1,1)"), &l("(1,1,1)(2,1)"), &t).is_err());
        assert!(answer_pairwise(&l("(9,1)"), &l("(1,1)"), &t).is_err());
    }
}

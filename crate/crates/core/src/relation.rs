use rustc_hash::{FxHashMap, FxHashSet};

use crate::derivation::Run;

/// A deduplicated set of `(source, target)` node-id pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairRelation {
    pairs: FxHashSet<(u32, u32)>,
}

impl PairRelation {
    pub fn new() -> Self {
        Self::default()
    }

    /// `(v, v)` for every node id below `n`.
    pub fn identity(n: usize) -> Self {
        (0..n as u32).map(|v| (v, v)).collect()
    }

    pub fn insert(&mut self, u: u32, v: u32) -> bool {
        self.pairs.insert((u, v))
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        self.pairs.contains(&(u, v))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn sorted(&self) -> Vec<(u32, u32)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_unstable();
        v
    }

    pub fn union_with(&mut self, other: &PairRelation) {
        self.pairs.extend(other.iter());
    }

    /// Pairs `(u, w)` with `(u, v)` in `self` and `(v, w)` in `other`.
    pub fn compose(&self, other: &PairRelation) -> PairRelation {
        let by_src = other.successor_map();
        let mut out = PairRelation::new();
        for (u, v) in self.iter() {
            if let Some(ws) = by_src.get(&v) {
                for &w in ws {
                    out.insert(u, w);
                }
            }
        }
        out
    }

    pub fn successor_map(&self) -> FxHashMap<u32, Vec<u32>> {
        let mut m: FxHashMap<u32, Vec<u32>> = FxHashMap::default();
        for (u, v) in self.iter() {
            m.entry(u).or_default().push(v);
        }
        m
    }

    /// Keeps pairs whose source is in `sources` and target in `targets`.
    pub fn restrict(&self, sources: &[u32], targets: &[u32]) -> PairRelation {
        let s: FxHashSet<u32> = sources.iter().copied().collect();
        let t: FxHashSet<u32> = targets.iter().copied().collect();
        self.iter()
            .filter(|(u, v)| s.contains(u) && t.contains(v))
            .collect()
    }

    pub fn sources(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.iter().map(|p| p.0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn targets(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.iter().map(|p| p.1).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Pairs as `name:occ` strings, sorted.
    pub fn named(&self, run: &Run) -> Vec<(String, String)> {
        let mut v: Vec<_> = self
            .iter()
            .map(|(u, w)| (run.display_name(u), run.display_name(w)))
            .collect();
        v.sort();
        v
    }
}

impl FromIterator<(u32, u32)> for PairRelation {
    fn from_iter<I: IntoIterator<Item = (u32, u32)>>(iter: I) -> Self {
        PairRelation {
            pairs: iter.into_iter().collect(),
        }
    }
}

impl Extend<(u32, u32)> for PairRelation {
    fn extend<I: IntoIterator<Item = (u32, u32)>>(&mut self, iter: I) {
        self.pairs.extend(iter);
    }
}

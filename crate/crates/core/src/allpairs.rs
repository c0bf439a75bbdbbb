//! All-pairs evaluation of safe queries over two node lists.
//!
//! Both lists are turned into label tries. Walking the tries in lockstep finds
//! every reachable pair without visiting unreachable ones; each candidate is
//! then confirmed by pairwise decoding.

use thiserror::Error;

use crate::decoder::{answer_pairwise, DecodeError};
use crate::derivation::{LabelEntry, NodeLabel, Run};
use crate::intersection::DecodeTables;
use crate::relation::PairRelation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AllPairsError {
    #[error("labels are not sorted at position {0}")]
    Unsorted(usize),
    #[error("label {0} is a proper prefix of another label")]
    PrefixLabel(NodeLabel),
    #[error("nodes {0} and {1} share a label")]
    SharedLabel(u32, u32),
    #[error("trees disagree below {0}: they do not come from the same run")]
    Mismatch(NodeLabel),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Marks a child of a recursion level that reaches (red) or is reached
/// from (blue) the deeper levels of the same unfolding.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum EdgeColor {
    None,
    Red,
    Blue,
}

#[derive(Clone, Debug)]
struct TrieNode {
    entry: Option<LabelEntry>,
    children: Vec<u32>,
    start: u32,
    end: u32,
    leaf: bool,
    color: EdgeColor,
    red: Vec<u32>,
    blue: Vec<u32>,
}

/// Trie over a sorted label list; every subtree covers a contiguous range
/// of the list.
#[derive(Clone, Debug)]
pub struct LabelTree {
    nodes: Vec<TrieNode>,
    ids: Vec<u32>,
    labels: Vec<NodeLabel>,
}

fn color_for(parent: Option<LabelEntry>, entry: LabelEntry, t: &DecodeTables) -> EdgeColor {
    let (Some(LabelEntry::Rec { s, t: off, i }), LabelEntry::Prod { k, i: x }) = (parent, entry)
    else {
        return EdgeColor::None;
    };
    let c = s as usize - 1;
    if c >= t.num_cycles() || off as usize > t.cycle_len(c) {
        return EdgeColor::None;
    }
    let (kc, p) = t.cycle_step(c, off as usize - 1 + i as usize - 1);
    let x0 = x as usize - 1;
    if k as usize - 1 != kc || x0 >= t.rhs_len(kc) {
        EdgeColor::None
    } else if t.reach(kc, x0, p) {
        EdgeColor::Red
    } else if t.reach(kc, p, x0) {
        EdgeColor::Blue
    } else {
        EdgeColor::None
    }
}

impl LabelTree {
    /// Builds the trie from `(label, node id)` pairs sorted by label.
    pub fn build(sorted: &[(NodeLabel, u32)], tables: &DecodeTables) -> Result<Self, AllPairsError> {
        let mut tree = LabelTree {
            nodes: vec![TrieNode {
                entry: None,
                children: Vec::new(),
                start: 0,
                end: 0,
                leaf: false,
                color: EdgeColor::None,
                red: Vec::new(),
                blue: Vec::new(),
            }],
            ids: Vec::with_capacity(sorted.len()),
            labels: Vec::with_capacity(sorted.len()),
        };
        let mut stack: Vec<u32> = vec![0];
        for (pos, (label, id)) in sorted.iter().enumerate() {
            let lcp = match tree.labels.last() {
                None => 0,
                Some(prev) => {
                    if prev > label {
                        return Err(AllPairsError::Unsorted(pos));
                    }
                    if prev == label {
                        let prev_id = *tree.ids.last().expect("parallel to labels");
                        if prev_id == *id {
                            continue;
                        }
                        return Err(AllPairsError::SharedLabel(prev_id, *id));
                    }
                    let n = prev.0.iter().zip(&label.0).take_while(|(a, b)| a == b).count();
                    if n == prev.len() {
                        return Err(AllPairsError::PrefixLabel(prev.clone()));
                    }
                    n
                }
            };
            let leaf_index = tree.ids.len() as u32;
            while stack.len() > lcp + 1 {
                let done = stack.pop().expect("non-empty");
                tree.nodes[done as usize].end = leaf_index;
            }
            for &e in &label.0[lcp..] {
                let parent = *stack.last().expect("root stays");
                let color = color_for(tree.nodes[parent as usize].entry, e, tables);
                let id = tree.nodes.len() as u32;
                tree.nodes.push(TrieNode {
                    entry: Some(e),
                    children: Vec::new(),
                    start: leaf_index,
                    end: leaf_index,
                    leaf: false,
                    color,
                    red: Vec::new(),
                    blue: Vec::new(),
                });
                let p = &mut tree.nodes[parent as usize];
                p.children.push(id);
                match color {
                    EdgeColor::Red => p.red.push(id),
                    EdgeColor::Blue => p.blue.push(id),
                    EdgeColor::None => {}
                }
                stack.push(id);
            }
            if label.is_empty() {
                return Err(AllPairsError::PrefixLabel(label.clone()));
            }
            let last = *stack.last().expect("label is non-empty");
            tree.nodes[last as usize].leaf = true;
            tree.ids.push(*id);
            tree.labels.push(label.clone());
        }
        let total = tree.ids.len() as u32;
        for n in stack {
            tree.nodes[n as usize].end = total;
        }
        Ok(tree)
    }

    /// Sorts the given run nodes by label and builds their trie.
    pub fn from_run(run: &Run, ids: &[u32], tables: &DecodeTables) -> Result<Self, AllPairsError> {
        let mut v: Vec<(NodeLabel, u32)> = ids.iter().map(|&id| (run.label(id).clone(), id)).collect();
        v.sort();
        v.dedup();
        Self::build(&v, tables)
    }

    /// Number of distinct leaves.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Leaf node ids in label order.
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Trie node reached by following `path` from the root.
    pub fn node_at(&self, path: &[LabelEntry]) -> Option<usize> {
        let mut cur = 0usize;
        for e in path {
            cur = *self.nodes[cur]
                .children
                .iter()
                .find(|&&c| self.nodes[c as usize].entry == Some(*e))? as usize;
        }
        Some(cur)
    }

    /// Color of the edge entering `node`.
    pub fn color(&self, node: usize) -> EdgeColor {
        self.nodes[node].color
    }

    /// Node ids of the leaves below `node`.
    pub fn leaves(&self, node: usize) -> &[u32] {
        let n = &self.nodes[node];
        &self.ids[n.start as usize..n.end as usize]
    }

    fn label_of_node(&self, node: u32) -> NodeLabel {
        let n = &self.nodes[node as usize];
        if n.start < n.end {
            let full = &self.labels[n.start as usize];
            let depth = self.depth_of(node);
            NodeLabel(full.0[..depth].to_vec())
        } else {
            NodeLabel::default()
        }
    }

    fn depth_of(&self, node: u32) -> usize {
        let n = &self.nodes[node as usize];
        if n.entry.is_none() {
            return 0;
        }
        let full = &self.labels[n.start as usize];
        (1..=full.len())
            .find(|&d| self.node_at(&full.0[..d]) == Some(node as usize))
            .unwrap_or(0)
    }
}

/// Counters collected while merging two tries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AllPairsStats {
    /// Candidate pairs produced by the merge.
    pub candidates: u64,
    /// Pairwise decodings run on candidates.
    pub filter_calls: u64,
    /// Merge work excluding emitted pairs, per trie depth.
    pub level_work: Vec<u64>,
}

impl AllPairsStats {
    fn work(&mut self, depth: usize, amount: u64) {
        if self.level_work.len() <= depth {
            self.level_work.resize(depth + 1, 0);
        }
        self.level_work[depth] += amount;
    }

    pub fn max_level_work(&self) -> u64 {
        self.level_work.iter().copied().max().unwrap_or(0)
    }
}

/// Module-level reachability rows as bitsets, one per production position.
struct ReachBits {
    words: Vec<usize>,
    rows: Vec<Vec<Vec<u64>>>,
}

impl ReachBits {
    fn new(t: &DecodeTables) -> Self {
        let mut words = Vec::new();
        let mut rows = Vec::new();
        for k0 in 0..t.num_productions() {
            let n = t.rhs_len(k0);
            let w = n.div_ceil(64);
            words.push(w);
            rows.push(
                (0..n)
                    .map(|i| {
                        let mut r = vec![0u64; w];
                        for j in 0..n {
                            if t.reach(k0, i, j) {
                                r[j / 64] |= 1 << (j % 64);
                            }
                        }
                        r
                    })
                    .collect(),
            );
        }
        ReachBits { words, rows }
    }
}

struct Merge<'a, F: FnMut(u32, u32)> {
    t1: &'a LabelTree,
    t2: &'a LabelTree,
    bits: ReachBits,
    stats: AllPairsStats,
    emit: F,
    /// Leaves present in both tries, as node ids.
    shared: Vec<u32>,
}

impl<F: FnMut(u32, u32)> Merge<'_, F> {
    fn emit_ranges(&mut self, a: u32, b: u32) {
        let (na, nb) = (&self.t1.nodes[a as usize], &self.t2.nodes[b as usize]);
        for x in na.start..na.end {
            for y in nb.start..nb.end {
                (self.emit)(x, y);
            }
        }
        self.stats.candidates += (na.end - na.start) as u64 * (nb.end - nb.start) as u64;
    }

    fn mismatch(&self, a: u32) -> AllPairsError {
        AllPairsError::Mismatch(self.t1.label_of_node(a))
    }

    fn run(&mut self, a: u32, b: u32, depth: usize) -> Result<(), AllPairsError> {
        let (t1, t2) = (self.t1, self.t2);
        let (na, nb) = (&t1.nodes[a as usize], &t2.nodes[b as usize]);
        self.stats
            .work(depth, 1 + na.children.len() as u64 + nb.children.len() as u64);
        if na.leaf || nb.leaf {
            if na.leaf && nb.leaf {
                self.shared.push(t1.ids[na.start as usize]);
                return Ok(());
            }
            return Err(self.mismatch(a));
        }
        if na.children.is_empty() || nb.children.is_empty() {
            return Ok(());
        }
        let first = |t: &LabelTree, n: &TrieNode| t.nodes[n.children[0] as usize].entry;
        match (first(t1, na), first(t2, nb)) {
            (Some(LabelEntry::Prod { k, .. }), Some(LabelEntry::Prod { k: k2, .. })) if k == k2 => {
                self.same_production(a, b, k as usize - 1, depth)
            }
            (Some(LabelEntry::Rec { s, t, .. }), Some(LabelEntry::Rec { s: s2, t: t2, .. }))
                if s == s2 && t == t2 =>
            {
                self.same_recursion(a, b, depth)
            }
            _ => Err(self.mismatch(a)),
        }
    }

    /// Children are positions of one production: recurse on equal
    /// positions, emit whole subtrees for reachable position pairs.
    fn same_production(&mut self, a: u32, b: u32, k0: usize, depth: usize) -> Result<(), AllPairsError> {
        let (t1, t2) = (self.t1, self.t2);
        let (na, nb) = (&t1.nodes[a as usize], &t2.nodes[b as usize]);
        if k0 >= self.bits.rows.len() {
            return Err(self.mismatch(a));
        }
        let w = self.bits.words[k0];
        let n = self.bits.rows[k0].len();
        let mut present = vec![0u64; w];
        for &c in &nb.children {
            match t2.nodes[c as usize].entry {
                Some(LabelEntry::Prod { k, i }) if k as usize == k0 + 1 && (i as usize) <= n => {
                    let j = i as usize - 1;
                    present[j / 64] |= 1 << (j % 64);
                }
                _ => return Err(self.mismatch(a)),
            }
        }
        self.stats.work(depth, w as u64);
        let rank = |j: usize| -> usize {
            let mut r = (present[j / 64] & ((1u64 << (j % 64)) - 1)).count_ones() as usize;
            for word in &present[..j / 64] {
                r += word.count_ones() as usize;
            }
            r
        };
        for &c1 in &na.children {
            let i = match t1.nodes[c1 as usize].entry {
                Some(LabelEntry::Prod { k, i }) if k as usize == k0 + 1 && (i as usize) <= n => {
                    i as usize - 1
                }
                _ => return Err(self.mismatch(a)),
            };
            self.stats.work(depth, w as u64);
            if present[i / 64] >> (i % 64) & 1 == 1 {
                let c2 = nb.children[rank(i)];
                self.run(c1, c2, depth + 1)?;
            }
            for wi in 0..w {
                let mut m = self.bits.rows[k0][i][wi] & present[wi];
                while m != 0 {
                    let j = wi * 64 + m.trailing_zeros() as usize;
                    m &= m - 1;
                    self.emit_ranges(c1, nb.children[rank(j)]);
                }
            }
        }
        Ok(())
    }

    /// Children are levels of one recursive unfolding.
    fn same_recursion(&mut self, a: u32, b: u32, depth: usize) -> Result<(), AllPairsError> {
        let (t1, t2) = (self.t1, self.t2);
        let (na, nb) = (&t1.nodes[a as usize], &t2.nodes[b as usize]);
        let ord = |t: &LabelTree, c: u32| t.nodes[c as usize].entry.map_or(0, |e| e.position());
        let (mut x, mut y) = (0, 0);
        while x < na.children.len() && y < nb.children.len() {
            let (c1, c2) = (na.children[x], nb.children[y]);
            let (i, j) = (ord(t1, c1), ord(t2, c2));
            if i == j {
                if t1.nodes[c1 as usize].entry != t2.nodes[c2 as usize].entry {
                    return Err(self.mismatch(a));
                }
                self.run(c1, c2, depth + 1)?;
                x += 1;
                y += 1;
            } else if i < j {
                x += 1;
            } else {
                y += 1;
            }
        }
        let reds: Vec<u32> = na
            .children
            .iter()
            .copied()
            .filter(|&c| !t1.nodes[c as usize].red.is_empty())
            .collect();
        let blues: Vec<u32> = nb
            .children
            .iter()
            .copied()
            .filter(|&c| !t2.nodes[c as usize].blue.is_empty())
            .collect();
        for &c2 in &nb.children {
            let j = ord(t2, c2);
            for &r in reds.iter().take_while(|&&r| ord(t1, r) < j) {
                for &g in &t1.nodes[r as usize].red {
                    self.emit_ranges(g, c2);
                }
            }
        }
        for &c1 in &na.children {
            let i = ord(t1, c1);
            for &r in blues.iter().take_while(|&&r| ord(t2, r) < i) {
                for &g in &t2.nodes[r as usize].blue {
                    self.emit_ranges(c1, g);
                }
            }
        }
        Ok(())
    }
}

fn merge<F: FnMut(u32, u32)>(
    t1: &LabelTree,
    t2: &LabelTree,
    tables: &DecodeTables,
    emit: F,
) -> Result<(AllPairsStats, Vec<u32>), AllPairsError> {
    let mut m = Merge {
        t1,
        t2,
        bits: ReachBits::new(tables),
        stats: AllPairsStats::default(),
        emit,
        shared: Vec::new(),
    };
    if !t1.is_empty() && !t2.is_empty() {
        m.run(0, 0, 0)?;
    }
    Ok((m.stats, m.shared))
}

/// Pairs of distinct leaves where the first reaches the second by a
/// non-empty path.
pub fn all_pairs_reach(
    t1: &LabelTree,
    t2: &LabelTree,
    tables: &DecodeTables,
) -> Result<(Vec<(u32, u32)>, AllPairsStats), AllPairsError> {
    let mut out = Vec::new();
    let (stats, _) = merge(t1, t2, tables, |x, y| {
        out.push((t1.ids[x as usize], t2.ids[y as usize]))
    })?;
    Ok((out, stats))
}

/// Reachability including the empty path; no pairwise decoding involved.
pub fn reach_relation(
    t1: &LabelTree,
    t2: &LabelTree,
    tables: &DecodeTables,
) -> Result<PairRelation, AllPairsError> {
    let mut out = PairRelation::new();
    let (_, shared) = merge(t1, t2, tables, |x, y| {
        out.insert(t1.ids[x as usize], t2.ids[y as usize]);
    })?;
    out.extend(shared.into_iter().map(|x| (x, x)));
    Ok(out)
}

/// Leaf pairs matching the query: reachable candidates from the trie merge,
/// each confirmed by pairwise decoding. A node shared by both lists pairs
/// with itself iff the query accepts the empty word.
pub fn answer_all_pairs(
    t1: &LabelTree,
    t2: &LabelTree,
    tables: &DecodeTables,
) -> Result<(PairRelation, AllPairsStats), AllPairsError> {
    let mut hits = Vec::new();
    let mut calls = 0u64;
    let mut failure = None;
    let (mut stats, shared) = merge(t1, t2, tables, |x, y| {
        calls += 1;
        let (u, v) = (t1.ids[x as usize], t2.ids[y as usize]);
        let (lu, lv) = (&t1.labels[x as usize], &t2.labels[y as usize]);
        match answer_pairwise(&lu.0, &lv.0, tables) {
            Ok(true) => hits.push((u, v)),
            Ok(false) => {}
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    if tables.start_set() & tables.accept_mask() != 0 {
        hits.extend(shared.into_iter().map(|x| (x, x)));
    }
    let result: PairRelation = hits.into_iter().collect();
    stats.filter_calls = calls;
    Ok((result, stats))
}

/// Decodes every pair of the two lists.
pub fn nested_loop_all_pairs(
    run: &Run,
    l1: &[u32],
    l2: &[u32],
    tables: &DecodeTables,
) -> Result<PairRelation, DecodeError> {
    let mut out = PairRelation::new();
    for &u in l1 {
        for &v in l2 {
            if answer_pairwise(&run.label(u).0, &run.label(v).0, tables)? {
                out.insert(u, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::intersection::FineGrainedSpec;
    use crate::regex::parse_regex;
    use crate::safety::is_safe_query;

    fn setup(q: &str) -> (Run, DecodeTables) {
        let g = fixtures::paper_grammar();
        let run = fixtures::paper_run(&g);
        let (safe, report, dfa) = is_safe_query(g.spec(), &parse_regex(q).unwrap());
        assert!(safe);
        let t = DecodeTables::compute(&FineGrainedSpec::intersect(&g, &dfa, &report).unwrap());
        (run, t)
    }

    fn ids(run: &Run, names: &[&str]) -> Vec<u32> {
        names.iter().map(|n| run.resolve(n).unwrap()).collect()
    }

    #[test]
    fn coloring_of_the_first_recursion_level() {
        let (run, t) = setup("_*");
        let l1 = ids(&run, &["a:1", "d:1", "b:3"]);
        let tree = LabelTree::from_run(&run, &l1, &t).unwrap();
        let a1 = tree.node_at(&run.label(l1[0]).0).unwrap();
        let d1 = tree.node_at(&run.label(l1[1]).0).unwrap();
        assert_eq!(tree.color(a1), EdgeColor::Red);
        assert_eq!(tree.color(d1), EdgeColor::Blue);
        assert_eq!(tree.len(), 3);
    }

    #[test]
    fn unsorted_and_shared_labels_are_rejected() {
        let (run, t) = setup("_*");
        let b1 = run.resolve("b:1").unwrap();
        let c1 = run.resolve("c:1").unwrap();
        let bad = vec![(run.label(b1).clone(), b1), (run.label(c1).clone(), c1)];
        assert_eq!(LabelTree::build(&bad, &t).unwrap_err(), AllPairsError::Unsorted(1));
        let shared = vec![(run.label(c1).clone(), c1), (run.label(c1).clone(), b1)];
        assert!(matches!(
            LabelTree::build(&shared, &t),
            Err(AllPairsError::SharedLabel(..))
        ));
    }

    #[test]
    fn singleton_and_disjoint_trees() {
        let (run, t) = setup("_*");
        let one = LabelTree::from_run(&run, &ids(&run, &["e:1"]), &t).unwrap();
        assert_eq!(one.num_nodes(), 1 + run.label(run.resolve("e:1").unwrap()).len());
        let two = LabelTree::from_run(&run, &ids(&run, &["c:1", "b:1"]), &t).unwrap();
        assert_eq!(two.leaves(0).len(), 2);
        assert_eq!(two.num_nodes(), 3);
    }

    #[test]
    fn fixture_all_pairs() {
        let (run, t) = setup("A+");
        let l1 = ids(&run, &["d:1", "d:2", "e:2"]);
        let l2 = ids(&run, &["b:1", "b:2"]);
        let t1 = LabelTree::from_run(&run, &l1, &t).unwrap();
        let t2 = LabelTree::from_run(&run, &l2, &t).unwrap();
        let (res, stats) = answer_all_pairs(&t1, &t2, &t).unwrap();
        let mut want: Vec<_> = ids(&run, &["d:1", "d:2", "e:2"])
            .into_iter()
            .map(|u| (u, run.resolve("b:1").unwrap()))
            .collect();
        want.sort();
        assert_eq!(res.sorted(), want);
        assert_eq!(stats.filter_calls, stats.candidates);
        assert_eq!(nested_loop_all_pairs(&run, &l1, &l2, &t).unwrap(), res);

        let (run, t) = setup("A");
        let t1 = LabelTree::from_run(&run, &l1, &t).unwrap();
        let t2 = LabelTree::from_run(&run, &l2, &t).unwrap();
        let (res, _) = answer_all_pairs(&t1, &t2, &t).unwrap();
        assert_eq!(res.sorted(), vec![(run.resolve("d:1").unwrap(), run.resolve("b:1").unwrap())]);
    }

    #[test]
    fn reach_from_mixed_list() {
        let (run, t) = setup("_*");
        let t1 = LabelTree::from_run(&run, &ids(&run, &["a:1", "d:1", "b:3"]), &t).unwrap();
        let t2 = LabelTree::from_run(&run, &ids(&run, &["b:1", "b:2", "b:3"]), &t).unwrap();
        let (mut pairs, _) = all_pairs_reach(&t1, &t2, &t).unwrap();
        pairs.sort();
        let mut want = vec![
            (run.resolve("a:1").unwrap(), run.resolve("b:1").unwrap()),
            (run.resolve("d:1").unwrap(), run.resolve("b:1").unwrap()),
            (run.resolve("b:3").unwrap(), run.resolve("b:1").unwrap()),
        ];
        want.sort();
        assert_eq!(pairs, want);

        let (all, _) = answer_all_pairs(&t1, &t2, &t).unwrap();
        assert!(all.contains(run.resolve("b:3").unwrap(), run.resolve("b:3").unwrap()));
        assert_eq!(all.len(), 4);
    }
}

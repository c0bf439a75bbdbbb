use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::Regex;
use crate::grammar::TagId;
use crate::matrix::{BoolMatrix, StateSet, MAX_STATES};

/// Minimal total DFA over a tag alphabet.
///
/// Tags the query never names behave identically, so the alphabet is split
/// into classes: one per mentioned tag plus a shared class for everything
/// else. A state's move on the shared class is its default target; explicit
/// entries exist only for mentioned tags.
#[derive(Clone, PartialEq, Eq)]
pub struct Dfa {
    num_states: usize,
    num_classes: usize,
    /// `class_of[tag]` for every tag of the alphabet.
    class_of: Vec<u32>,
    /// Representative tag for each class.
    class_rep: Vec<TagId>,
    /// The class holding the unmentioned tags, if any tag is unmentioned.
    other_class: Option<u32>,
    trans: Vec<u32>,
    accepting: Vec<bool>,
    dead: Option<usize>,
}

struct Nfa {
    eps: Vec<Vec<usize>>,
    moves: Vec<Vec<(u32, usize)>>,
}

impl Nfa {
    fn add(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.moves.push(Vec::new());
        self.eps.len() - 1
    }

    /// Thompson fragment for `r`; returns (entry, exit).
    fn build(&mut self, r: &Regex, classes: &HashMap<&str, u32>, nc: u32) -> (usize, usize) {
        match r {
            Regex::Epsilon => {
                let s = self.add();
                let t = self.add();
                self.eps[s].push(t);
                (s, t)
            }
            Regex::Wildcard => {
                let s = self.add();
                let t = self.add();
                for c in 0..nc {
                    self.moves[s].push((c, t));
                }
                (s, t)
            }
            Regex::Symbol(name) => {
                let s = self.add();
                let t = self.add();
                if let Some(&c) = classes.get(name.as_str()) {
                    self.moves[s].push((c, t));
                }
                (s, t)
            }
            Regex::Concat(a, b) => {
                let (s1, t1) = self.build(a, classes, nc);
                let (s2, t2) = self.build(b, classes, nc);
                self.eps[t1].push(s2);
                (s1, t2)
            }
            Regex::Alt(a, b) => {
                let s = self.add();
                let (s1, t1) = self.build(a, classes, nc);
                let (s2, t2) = self.build(b, classes, nc);
                let t = self.add();
                self.eps[s].extend([s1, s2]);
                self.eps[t1].push(t);
                self.eps[t2].push(t);
                (s, t)
            }
            Regex::Star(a) | Regex::Plus(a) => {
                let s = self.add();
                let (s1, t1) = self.build(a, classes, nc);
                let t = self.add();
                self.eps[s].push(s1);
                self.eps[t1].extend([s1, t]);
                if matches!(r, Regex::Star(_)) {
                    self.eps[s].push(t);
                }
                (s, t)
            }
        }
    }

    fn closure(&self, set: &mut Vec<usize>) {
        let mut mark = vec![false; self.eps.len()];
        for &q in set.iter() {
            mark[q] = true;
        }
        let mut stack = set.clone();
        while let Some(q) = stack.pop() {
            for &r in &self.eps[q] {
                if !mark[r] {
                    mark[r] = true;
                    set.push(r);
                    stack.push(r);
                }
            }
        }
        set.sort_unstable();
    }
}

/// Partition refinement; returns the block of every state.
fn hopcroft(n: usize, nc: usize, trans: &[usize], accepting: &[bool]) -> Vec<usize> {
    let mut inv: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; nc];
    for p in 0..n {
        for c in 0..nc {
            inv[c][trans[p * nc + c]].push(p);
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let acc: Vec<usize> = (0..n).filter(|&q| accepting[q]).collect();
    let rej: Vec<usize> = (0..n).filter(|&q| !accepting[q]).collect();
    for b in [acc, rej] {
        if !b.is_empty() {
            blocks.push(b);
        }
    }
    let mut block_of = vec![0; n];
    for (b, members) in blocks.iter().enumerate() {
        for &q in members {
            block_of[q] = b;
        }
    }
    let mut work: Vec<usize> = (0..blocks.len()).collect();
    let mut in_work = vec![true; blocks.len()];
    let mut hit = vec![false; n];
    while let Some(a) = work.pop() {
        in_work[a] = false;
        let splitter = blocks[a].clone();
        for c in 0..nc {
            let mut preds = Vec::new();
            for &q in &splitter {
                for &p in &inv[c][q] {
                    if !hit[p] {
                        hit[p] = true;
                        preds.push(p);
                    }
                }
            }
            let mut touched: Vec<usize> = preds.iter().map(|&p| block_of[p]).collect();
            touched.sort_unstable();
            touched.dedup();
            for b in touched {
                let (inside, outside): (Vec<usize>, Vec<usize>) =
                    blocks[b].iter().partition(|&&q| hit[q]);
                if outside.is_empty() {
                    continue;
                }
                let nb = blocks.len();
                for &q in &inside {
                    block_of[q] = nb;
                }
                let smaller_is_new = inside.len() <= outside.len();
                blocks[b] = outside;
                blocks.push(inside);
                in_work.push(false);
                if in_work[b] {
                    work.push(nb);
                    in_work[nb] = true;
                } else {
                    let pick = if smaller_is_new { nb } else { b };
                    work.push(pick);
                    in_work[pick] = true;
                }
            }
            for p in preds {
                hit[p] = false;
            }
        }
    }
    block_of
}

impl Dfa {
    /// Thompson construction, subset construction and Hopcroft minimization.
    /// `gamma` is the tag alphabet; tag ids index into it.
    pub fn compile(ast: &Regex, gamma: &[String]) -> Dfa {
        let mut classes: HashMap<&str, u32> = HashMap::new();
        let mut class_rep = Vec::new();
        let mut class_of = vec![u32::MAX; gamma.len()];
        let tag_index: HashMap<&str, usize> =
            gamma.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        for sym in ast.symbols() {
            if let Some(&t) = tag_index.get(sym) {
                let c = class_rep.len() as u32;
                classes.insert(sym, c);
                class_rep.push(TagId(t as u32));
                class_of[t] = c;
            }
        }
        let mut other_class = None;
        if let Some(first) = class_of.iter().position(|&c| c == u32::MAX) {
            let c = class_rep.len() as u32;
            other_class = Some(c);
            class_rep.push(TagId(first as u32));
            for slot in class_of.iter_mut().filter(|c| **c == u32::MAX) {
                *slot = c;
            }
        }
        let nc = class_rep.len();

        let mut nfa = Nfa {
            eps: Vec::new(),
            moves: Vec::new(),
        };
        let (entry, exit) = nfa.build(ast, &classes, nc as u32);

        // Subset construction; the empty set becomes the dead state.
        let mut start = vec![entry];
        nfa.closure(&mut start);
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut sets = vec![start.clone()];
        ids.insert(start, 0);
        let mut trans: Vec<usize> = Vec::new();
        let mut i = 0;
        while i < sets.len() {
            for c in 0..nc as u32 {
                let mut next: Vec<usize> = Vec::new();
                for &q in &sets[i] {
                    for &(mc, r) in &nfa.moves[q] {
                        if mc == c {
                            next.push(r);
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                nfa.closure(&mut next);
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = sets.len();
                        ids.insert(next.clone(), id);
                        sets.push(next);
                        id
                    }
                };
                trans.push(id);
            }
            i += 1;
        }
        let n = sets.len();
        let accepting: Vec<bool> = sets.iter().map(|s| s.binary_search(&exit).is_ok()).collect();

        let block_of = hopcroft(n, nc, &trans, &accepting);

        // Renumber blocks breadth-first from the start; the dead block goes last.
        let nblocks = block_of.iter().max().map_or(0, |m| m + 1);
        let mut rep = vec![usize::MAX; nblocks];
        for q in 0..n {
            if rep[block_of[q]] == usize::MAX {
                rep[block_of[q]] = q;
            }
        }
        let is_dead_block = |b: usize| {
            let q = rep[b];
            !accepting[q] && (0..nc).all(|c| block_of[trans[q * nc + c]] == b)
        };
        let mut order = vec![usize::MAX; nblocks];
        let mut seq = Vec::new();
        let mut dead_block = None;
        let mut queue = VecDeque::from([block_of[0]]);
        let mut seen = vec![false; nblocks];
        seen[block_of[0]] = true;
        while let Some(b) = queue.pop_front() {
            if is_dead_block(b) && b != block_of[0] {
                dead_block = Some(b);
            } else {
                order[b] = seq.len();
                seq.push(b);
            }
            for c in 0..nc {
                let nb = block_of[trans[rep[b] * nc + c]];
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        if let Some(d) = dead_block {
            order[d] = seq.len();
            seq.push(d);
        }
        let num_states = seq.len();
        let mut out_trans = vec![0u32; num_states * nc];
        let mut out_acc = vec![false; num_states];
        for (q, &b) in seq.iter().enumerate() {
            out_acc[q] = accepting[rep[b]];
            for c in 0..nc {
                out_trans[q * nc + c] = order[block_of[trans[rep[b] * nc + c]]] as u32;
            }
        }
        let dead = (0..num_states).find(|&q| {
            !out_acc[q] && (0..nc).all(|c| out_trans[q * nc + c] as usize == q)
        });
        Dfa {
            num_states,
            num_classes: nc,
            class_of,
            class_rep,
            other_class,
            trans: out_trans,
            accepting: out_acc,
            dead,
        }
    }

    /// State count including the dead state, if there is one.
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// State count excluding the dead state.
    pub fn live_states(&self) -> usize {
        self.num_states - usize::from(self.dead.is_some())
    }

    pub fn dead_state(&self) -> Option<usize> {
        self.dead
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepts_empty(&self) -> bool {
        self.accepting[0]
    }

    pub fn alphabet_len(&self) -> usize {
        self.class_of.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_of(&self, tag: TagId) -> usize {
        self.class_of[tag.index()] as usize
    }

    pub fn class_rep(&self, class: usize) -> TagId {
        self.class_rep[class]
    }

    #[inline]
    pub fn step(&self, q: usize, tag: TagId) -> usize {
        self.trans[q * self.num_classes + self.class_of[tag.index()] as usize] as usize
    }

    #[inline]
    pub fn step_class(&self, q: usize, class: usize) -> usize {
        self.trans[q * self.num_classes + class] as usize
    }

    /// Target for tags without an explicit entry.
    pub fn default_target(&self, q: usize) -> Option<usize> {
        self.other_class.map(|c| self.step_class(q, c as usize))
    }

    /// Explicit `(tag, target)` entries of state `q` that differ from its
    /// default target.
    pub fn explicit(&self, q: usize) -> Vec<(TagId, usize)> {
        let default = self.default_target(q);
        (0..self.num_classes)
            .filter(|&c| Some(c as u32) != self.other_class)
            .map(|c| (self.class_rep[c], self.step_class(q, c)))
            .filter(|&(_, t)| Some(t) != default)
            .collect()
    }

    pub fn accepts(&self, word: &[TagId]) -> bool {
        let q = word.iter().fold(0, |q, &t| self.step(q, t));
        self.accepting[q]
    }

    pub fn fits_matrix(&self) -> bool {
        self.num_states <= MAX_STATES
    }

    pub fn accept_mask(&self) -> StateSet {
        assert!(self.fits_matrix());
        (0..self.num_states)
            .filter(|&q| self.accepting[q])
            .fold(0, |m, q| m | 1 << q)
    }

    /// Transition relation of one alphabet class as a matrix.
    pub fn class_matrix(&self, class: usize) -> BoolMatrix {
        let rows = (0..self.num_states)
            .map(|q| 1u64 << self.step_class(q, class))
            .collect();
        BoolMatrix::from_rows(self.num_states, rows)
    }

    pub fn tag_matrix(&self, tag: TagId) -> BoolMatrix {
        self.class_matrix(self.class_of(tag))
    }

    /// Human-readable transition listing with tag names from `gamma`.
    pub fn describe(&self, gamma: &[String]) -> String {
        let mut out = String::new();
        for q in 0..self.num_states {
            let mut line = format!("q{q}");
            if q == 0 {
                line.push_str(" start");
            }
            if self.accepting[q] {
                line.push_str(" accept");
            }
            if self.dead == Some(q) {
                line.push_str(" dead");
            }
            line.push(':');
            for (t, to) in self.explicit(q) {
                line.push_str(&format!(" {}->q{to}", gamma[t.index()]));
            }
            if let Some(d) = self.default_target(q) {
                line.push_str(&format!(" _->q{d}"));
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for Dfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dfa")
            .field("states", &self.num_states)
            .field("classes", &self.num_classes)
            .field("accepting", &self.accepting)
            .field("dead", &self.dead)
            .field("trans", &self.trans)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regex::parse_regex;

    fn gamma() -> Vec<String> {
        ["c", "A", "B", "a", "e", "b"].iter().map(|s| s.to_string()).collect()
    }

    fn word(g: &[String], w: &str) -> Vec<TagId> {
        w.split_whitespace()
            .map(|t| TagId(g.iter().position(|x| x == t).unwrap() as u32))
            .collect()
    }

    #[test]
    fn r3_has_two_live_states_and_no_dead_state() {
        let g = gamma();
        let dfa = Dfa::compile(&parse_regex("_*.e._*").unwrap(), &g);
        assert_eq!(dfa.num_states(), 2);
        assert_eq!(dfa.live_states(), 2);
        let e = word(&g, "e")[0];
        let qf = dfa.step(0, e);
        assert_eq!(qf, 1);
        assert!(dfa.is_accepting(qf) && !dfa.is_accepting(0));
        for t in word(&g, "c A B a b") {
            assert_eq!(dfa.step(0, t), 0);
        }
        for t in word(&g, "c A B a e b") {
            assert_eq!(dfa.step(qf, t), qf);
        }
        assert!(dfa.accepts(&word(&g, "c e A")));
        assert!(!dfa.accepts(&word(&g, "c b")));
    }

    #[test]
    fn r4_has_explicit_dead_state() {
        let g = gamma();
        let dfa = Dfa::compile(&parse_regex("e").unwrap(), &g);
        assert_eq!(dfa.num_states(), 3);
        assert_eq!(dfa.live_states(), 2);
        let dead = dfa.dead_state().unwrap();
        assert_eq!(dead, 2);
        let qf = dfa.step(0, word(&g, "e")[0]);
        assert!(dfa.is_accepting(qf));
        assert_eq!(dfa.step(0, word(&g, "a")[0]), dead);
        assert_eq!(dfa.step(qf, word(&g, "e")[0]), dead);
    }

    #[test]
    fn universal_language_is_one_state() {
        let g = gamma();
        let dfa = Dfa::compile(&parse_regex("_*").unwrap(), &g);
        assert_eq!(dfa.num_states(), 1);
        assert!(dfa.accepts(&[]));
        assert!(dfa.accepts(&word(&g, "a b c")));
        assert_eq!(dfa.default_target(0), Some(0));
        assert!(dfa.explicit(0).is_empty());
    }

    #[test]
    fn unknown_symbol_matches_nothing() {
        let g = gamma();
        let dfa = Dfa::compile(&parse_regex("zz|eps").unwrap(), &g);
        assert!(dfa.accepts(&[]));
        assert!(!dfa.accepts(&word(&g, "a")));
    }

    #[test]
    fn explicit_entries_override_default() {
        let g = gamma();
        let dfa = Dfa::compile(&parse_regex("_*.e._*").unwrap(), &g);
        assert_eq!(dfa.default_target(0), Some(0));
        assert_eq!(dfa.explicit(0), vec![(TagId(4), 1)]);
        let text = dfa.describe(&g);
        assert!(text.contains("q0 start: e->q1 _->q0"), "{text}");
    }

    #[test]
    fn all_tags_mentioned_has_no_default() {
        let g: Vec<String> = vec!["x".into(), "y".into()];
        let dfa = Dfa::compile(&parse_regex("x.y").unwrap(), &g);
        assert_eq!(dfa.default_target(0), None);
        assert_eq!(dfa.num_classes(), 2);
    }
}

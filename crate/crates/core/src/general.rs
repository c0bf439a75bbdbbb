//! Evaluation of arbitrary queries, safe or not.
//!
//! [`eval_join_tree`] runs the query as relational algebra over an edge
//! index. [`eval_general`] first carves out the largest safe subexpressions,
//! answers those from labels, and combines the pieces with the same
//! relational operators. [`dfs_oracle`] is the reference semantics.

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::allpairs::{answer_all_pairs, reach_relation, AllPairsError, LabelTree};
use crate::derivation::Run;
use crate::grammar::{Grammar, WorkflowSpec};
use crate::intersection::{tables_for_query, DecodeTables};
use crate::regex::{compile_minimal_dfa, Dfa, Regex};
use crate::relation::PairRelation;
use crate::safety::is_safe_query;

/// Tag name to the node pairs of every edge carrying it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TagIndex {
    lists: BTreeMap<String, Vec<(u32, u32)>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("index line {line}: {message}")]
pub struct IndexParseError {
    pub line: usize,
    pub message: String,
}

impl TagIndex {
    pub fn build(run: &Run) -> TagIndex {
        let mut lists: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for e in run.edges() {
            lists
                .entry(run.tag_names()[e.tag.index()].clone())
                .or_default()
                .push((e.src, e.dst));
        }
        TagIndex { lists }
    }

    /// Pairs for `tag`; empty when the tag never occurs.
    pub fn pairs(&self, tag: &str) -> &[(u32, u32)] {
        self.lists.get(tag).map_or(&[], Vec::as_slice)
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.lists.values().flatten().copied()
    }

    /// One line per tag: `tag u,v u,v ...` with `name:occ` node names.
    pub fn persist(&self, run: &Run) -> String {
        let mut out = String::new();
        for (tag, pairs) in &self.lists {
            out.push_str(tag);
            for &(u, v) in pairs {
                out.push(' ');
                out.push_str(&run.display_name(u));
                out.push(',');
                out.push_str(&run.display_name(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn load(text: &str, run: &Run) -> Result<TagIndex, IndexParseError> {
        let mut lists = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let fail = |message: String| IndexParseError {
                line: n + 1,
                message,
            };
            let mut words = line.split_whitespace();
            let Some(tag) = words.next() else { continue };
            let mut pairs = Vec::new();
            for w in words {
                let (a, b) = w
                    .split_once(',')
                    .ok_or_else(|| fail(format!("expected `u,v`, got `{w}`")))?;
                let resolve = |r: &str| run.resolve(r).ok_or_else(|| fail(format!("unknown node `{r}`")));
                pairs.push((resolve(a)?, resolve(b)?));
            }
            lists.insert(tag.to_string(), pairs);
        }
        Ok(TagIndex { lists })
    }
}

/// Relational evaluation of a query tree over a tag index.
pub struct JoinEvaluator<'r> {
    run: &'r Run,
    index: &'r TagIndex,
    /// Largest number of productive rounds any closure needed.
    pub max_rounds: usize,
}

impl<'r> JoinEvaluator<'r> {
    pub fn new(run: &'r Run, index: &'r TagIndex) -> Self {
        JoinEvaluator {
            run,
            index,
            max_rounds: 0,
        }
    }

    pub fn eval(&mut self, ast: &Regex) -> PairRelation {
        match ast {
            Regex::Epsilon => PairRelation::identity(self.run.num_nodes()),
            Regex::Wildcard => self.index.all_pairs().collect(),
            Regex::Symbol(a) => self.index.pairs(a).iter().copied().collect(),
            Regex::Concat(a, b) => {
                let (x, y) = (self.eval(a), self.eval(b));
                x.compose(&y)
            }
            Regex::Alt(a, b) => {
                let mut x = self.eval(a);
                x.union_with(&self.eval(b));
                x
            }
            Regex::Plus(a) => {
                let base = self.eval(a);
                self.closure(base)
            }
            Regex::Star(a) => self.star(a),
        }
    }

    fn star(&mut self, a: &Regex) -> PairRelation {
        let base = self.eval(a);
        let mut out = self.closure(base);
        out.union_with(&PairRelation::identity(self.run.num_nodes()));
        out
    }

    /// Transitive closure by semi-naive iteration.
    pub fn closure(&mut self, base: PairRelation) -> PairRelation {
        let step = base.successor_map();
        let mut result = base.clone();
        let mut delta: Vec<(u32, u32)> = base.iter().collect();
        let mut rounds = 0;
        while !delta.is_empty() {
            let mut next = Vec::new();
            for (u, v) in delta {
                if let Some(ws) = step.get(&v) {
                    for &w in ws {
                        if result.insert(u, w) {
                            next.push((u, w));
                        }
                    }
                }
            }
            if !next.is_empty() {
                rounds += 1;
            }
            delta = next;
        }
        self.max_rounds = self.max_rounds.max(rounds);
        result
    }
}

/// Option G1: the query as a tree of joins, unions and closures.
pub fn eval_join_tree(ast: &Regex, run: &Run, index: &TagIndex) -> PairRelation {
    JoinEvaluator::new(run, index).eval(ast)
}

fn all_nodes(run: &Run) -> Vec<u32> {
    (0..run.num_nodes() as u32).collect()
}

fn sources(pairs: &[(u32, u32)]) -> Vec<u32> {
    let mut v: Vec<u32> = pairs.iter().map(|p| p.0).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Option G3 for `_*.a1._*. ... .ak._*`: the indexed edge lists chained
/// by reachability between consecutive endpoints.
pub fn eval_ifq(
    symbols: &[String],
    run: &Run,
    index: &TagIndex,
    reach: &DecodeTables,
) -> Result<PairRelation, AllPairsError> {
    let everything = LabelTree::from_run(run, &all_nodes(run), reach)?;
    let Some((first, rest)) = symbols.split_first() else {
        return reach_relation(&everything, &everything, reach);
    };
    let edges = index.pairs(first);
    if edges.is_empty() {
        return Ok(PairRelation::new());
    }
    let into_first = LabelTree::from_run(run, &sources(edges), reach)?;
    let mut acc = reach_relation(&everything, &into_first, reach)?
        .compose(&edges.iter().copied().collect());
    for sym in rest {
        let edges = index.pairs(sym);
        if edges.is_empty() || acc.is_empty() {
            return Ok(PairRelation::new());
        }
        let from = LabelTree::from_run(run, &acc.targets(), reach)?;
        let to = LabelTree::from_run(run, &sources(edges), reach)?;
        let hop = reach_relation(&from, &to, reach)?.compose(&edges.iter().copied().collect());
        acc = acc.compose(&hop);
    }
    let from = LabelTree::from_run(run, &acc.targets(), reach)?;
    Ok(acc.compose(&reach_relation(&from, &everything, reach)?))
}

/// A query tree whose maximal safe subexpressions are opaque units.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Skeleton {
    Safe(Regex),
    Epsilon,
    Wildcard,
    Symbol(String),
    Concat(Box<Skeleton>, Box<Skeleton>),
    Alt(Box<Skeleton>, Box<Skeleton>),
    Star(Box<Skeleton>),
    Plus(Box<Skeleton>),
}

impl Skeleton {
    pub fn safe_units(&self) -> Vec<&Regex> {
        let mut out = Vec::new();
        self.collect_units(&mut out);
        out
    }

    fn collect_units<'a>(&'a self, out: &mut Vec<&'a Regex>) {
        match self {
            Skeleton::Safe(r) => out.push(r),
            Skeleton::Concat(a, b) | Skeleton::Alt(a, b) => {
                a.collect_units(out);
                b.collect_units(out);
            }
            Skeleton::Star(a) | Skeleton::Plus(a) => a.collect_units(out),
            _ => {}
        }
    }

    /// Reassembles the original expression.
    pub fn to_regex(&self) -> Regex {
        match self {
            Skeleton::Safe(r) => r.clone(),
            Skeleton::Epsilon => Regex::Epsilon,
            Skeleton::Wildcard => Regex::Wildcard,
            Skeleton::Symbol(s) => Regex::Symbol(s.clone()),
            Skeleton::Concat(a, b) => Regex::concat(a.to_regex(), b.to_regex()),
            Skeleton::Alt(a, b) => Regex::alt(a.to_regex(), b.to_regex()),
            Skeleton::Star(a) => Regex::star(a.to_regex()),
            Skeleton::Plus(a) => Regex::plus(a.to_regex()),
        }
    }
}

impl fmt::Display for Skeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Skeleton::Safe(r) => write!(f, "[{r}]"),
            Skeleton::Epsilon => f.write_str("eps"),
            Skeleton::Wildcard => f.write_str("_"),
            Skeleton::Symbol(s) => f.write_str(s),
            Skeleton::Concat(a, b) => write!(f, "({a}.{b})"),
            Skeleton::Alt(a, b) => write!(f, "({a}|{b})"),
            Skeleton::Star(a) => write!(f, "({a})*"),
            Skeleton::Plus(a) => write!(f, "({a})+"),
        }
    }
}

/// Top-down: a subtree that is safe becomes a unit and is not entered.
pub fn largest_safe_subtrees(ast: &Regex, spec: &WorkflowSpec) -> Skeleton {
    if is_safe_query(spec, ast).0 {
        return Skeleton::Safe(ast.clone());
    }
    let go = |r: &Regex| Box::new(largest_safe_subtrees(r, spec));
    match ast {
        Regex::Epsilon => Skeleton::Epsilon,
        Regex::Wildcard => Skeleton::Wildcard,
        Regex::Symbol(s) => Skeleton::Symbol(s.clone()),
        Regex::Concat(a, b) => Skeleton::Concat(go(a), go(b)),
        Regex::Alt(a, b) => Skeleton::Alt(go(a), go(b)),
        Regex::Star(a) => Skeleton::Star(go(a)),
        Regex::Plus(a) => Skeleton::Plus(go(a)),
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneralOptions {
    /// Restrict a safe unit's node lists to the endpoints produced by its
    /// neighbour under a concatenation.
    pub narrowing: bool,
}

struct Hybrid<'a> {
    grammar: &'a Grammar,
    joins: JoinEvaluator<'a>,
    opts: GeneralOptions,
    tables: FxHashMap<Regex, DecodeTables>,
}

impl Hybrid<'_> {
    fn unit(&mut self, r: &Regex, l1: Option<Vec<u32>>, l2: Option<Vec<u32>>) -> Result<PairRelation, AllPairsError> {
        let run = self.joins.run;
        if !self.tables.contains_key(r) {
            let t = tables_for_query(self.grammar, r).expect("units are safe");
            self.tables.insert(r.clone(), t);
        }
        let t = &self.tables[r];
        let l1 = l1.unwrap_or_else(|| all_nodes(run));
        let l2 = l2.unwrap_or_else(|| all_nodes(run));
        let t1 = LabelTree::from_run(run, &l1, t)?;
        let t2 = LabelTree::from_run(run, &l2, t)?;
        Ok(answer_all_pairs(&t1, &t2, t)?.0)
    }

    fn eval(&mut self, s: &Skeleton) -> Result<PairRelation, AllPairsError> {
        Ok(match s {
            Skeleton::Safe(r) => self.unit(r, None, None)?,
            Skeleton::Epsilon => self.joins.eval(&Regex::Epsilon),
            Skeleton::Wildcard => self.joins.eval(&Regex::Wildcard),
            Skeleton::Symbol(a) => self.joins.eval(&Regex::Symbol(a.clone())),
            Skeleton::Concat(a, b) if self.opts.narrowing => match (&**a, &**b) {
                (Skeleton::Safe(ra), rb) if !matches!(rb, Skeleton::Safe(_)) => {
                    let right = self.eval(rb)?;
                    let left = self.unit(ra, None, Some(right.sources()))?;
                    left.compose(&right)
                }
                (la, Skeleton::Safe(rb)) => {
                    let left = self.eval(la)?;
                    let right = self.unit(rb, Some(left.targets()), None)?;
                    left.compose(&right)
                }
                _ => self.eval(a)?.compose(&self.eval(b)?),
            },
            Skeleton::Concat(a, b) => {
                let left = self.eval(a)?;
                left.compose(&self.eval(b)?)
            }
            Skeleton::Alt(a, b) => {
                let mut x = self.eval(a)?;
                x.union_with(&self.eval(b)?);
                x
            }
            Skeleton::Plus(a) => {
                let base = self.eval(a)?;
                self.joins.closure(base)
            }
            Skeleton::Star(a) => {
                let base = self.eval(a)?;
                let mut out = self.joins.closure(base);
                out.union_with(&PairRelation::identity(self.joins.run.num_nodes()));
                out
            }
        })
    }
}

/// Safe units answered from labels, the remainder by relational operators.
pub fn eval_general(
    ast: &Regex,
    run: &Run,
    grammar: &Grammar,
    index: &TagIndex,
    opts: GeneralOptions,
) -> Result<PairRelation, AllPairsError> {
    let skeleton = largest_safe_subtrees(ast, grammar.spec());
    let mut h = Hybrid {
        grammar,
        joins: JoinEvaluator::new(run, index),
        opts,
        tables: FxHashMap::default(),
    };
    h.eval(&skeleton)
}

/// Compiles `ast` against the run's tag alphabet.
pub fn run_dfa(ast: &Regex, run: &Run) -> Dfa {
    compile_minimal_dfa(ast, run.tag_names())
}

/// Reference semantics: search of the run crossed with the DFA from every
/// node. A node pairs with itself iff the empty word is accepted.
pub fn dfs_oracle(ast: &Regex, run: &Run) -> PairRelation {
    let dfa = run_dfa(ast, run);
    let n = run.num_nodes();
    let nq = dfa.num_states();
    let dead = dfa.dead_state();
    let mut seen = vec![u32::MAX; n * nq];
    let mut out = PairRelation::new();
    let mut stack = Vec::new();
    for u in 0..n as u32 {
        stack.push((u, dfa.start()));
        seen[u as usize * nq + dfa.start()] = u;
        while let Some((v, q)) = stack.pop() {
            if dfa.is_accepting(q) {
                out.insert(u, v);
            }
            for &(w, tag) in run.successors(v) {
                let q2 = dfa.step(q, tag);
                if Some(q2) == dead {
                    continue;
                }
                let slot = &mut seen[w as usize * nq + q2];
                if *slot != u {
                    *slot = u;
                    stack.push((w, q2));
                }
            }
        }
    }
    out
}

/// Single-pair search of the run crossed with the DFA, stopping early.
pub fn dfs_pair(dfa: &Dfa, run: &Run, u: u32, v: u32) -> bool {
    let nq = dfa.num_states();
    let dead = dfa.dead_state();
    let mut seen = vec![false; run.num_nodes() * nq];
    let mut stack = vec![(u, dfa.start())];
    seen[u as usize * nq + dfa.start()] = true;
    while let Some((x, q)) = stack.pop() {
        if x == v && dfa.is_accepting(q) {
            return true;
        }
        for &(w, tag) in run.successors(x) {
            let q2 = dfa.step(q, tag);
            if Some(q2) == dead || seen[w as usize * nq + q2] {
                continue;
            }
            seen[w as usize * nq + q2] = true;
            stack.push((w, q2));
        }
    }
    false
}

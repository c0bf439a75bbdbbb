//! Reference implementations used only by tests. None of them share code
//! with the library paths they check.

use std::collections::{BTreeSet, HashSet, VecDeque};

use provq_core::derivation::DerivationState;
use provq_core::grammar::{Grammar, ModuleKind, Production, TagId, WorkflowSpec};
use provq_core::intersection::FineGrainedSpec;
use provq_core::regex::{Dfa, Regex};
use rand::Rng;

/// Dense boolean matrix as nested rows.
pub type Grid = Vec<Vec<bool>>;

fn identity(n: usize) -> Grid {
    (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect()
}

/// Transfer matrix of one production for fixed child matrices, found by
/// breadth-first search over the explicit port graph of its right-hand side.
pub fn production_grid(p: &Production, dfa: &Dfa, children: &[&Grid]) -> Grid {
    let nq = dfa.num_states();
    let rhs = &p.rhs;
    let n = rhs.nodes.len();
    let mut out = vec![vec![false; nq]; nq];
    for q0 in 0..nq {
        // Port ids: `pos * 2 * nq + side * nq + q`, side 0 = in, 1 = out.
        let id = |pos: usize, side: usize, q: usize| pos * 2 * nq + side * nq + q;
        let mut seen = vec![false; n * 2 * nq];
        let mut queue = VecDeque::new();
        seen[id(rhs.source, 0, q0)] = true;
        queue.push_back((rhs.source, 0, q0));
        while let Some((pos, side, q)) = queue.pop_front() {
            let mut next = Vec::new();
            if side == 0 {
                for (q2, &b) in children[pos][q].iter().enumerate() {
                    if b {
                        next.push((pos, 1, q2));
                    }
                }
            } else {
                for e in rhs.edges.iter().filter(|e| e.src == pos) {
                    next.push((e.dst, 0, dfa.step(q, e.tag)));
                }
            }
            for (p2, s2, q2) in next {
                if !seen[id(p2, s2, q2)] {
                    seen[id(p2, s2, q2)] = true;
                    queue.push_back((p2, s2, q2));
                }
            }
        }
        for q in 0..nq {
            out[q0][q] = seen[id(rhs.sink, 1, q)];
        }
    }
    out
}

#[derive(Debug, PartialEq, Eq)]
pub enum EnumVerdict {
    /// One matrix per module.
    Safe(Vec<Grid>),
    Unsafe,
    Unproductive,
}

/// Transfer matrices of all executions, grouped by height: round `h`
/// collects the matrices of every execution whose derivation tree has height
/// at most `h`, so every cycle is unrolled as often as the round count
/// allows. Rounds continue until no set changes or some module shows two
/// matrices. Returns the verdict and the number of rounds run.
pub fn enumerate_transfer(spec: &WorkflowSpec, dfa: &Dfa) -> (EnumVerdict, usize) {
    let nq = dfa.num_states();
    let mut sets: Vec<BTreeSet<Grid>> = spec
        .modules
        .iter()
        .map(|m| match m.kind {
            ModuleKind::Atomic => BTreeSet::from([identity(nq)]),
            ModuleKind::Composite => BTreeSet::new(),
        })
        .collect();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut next = sets.clone();
        for p in &spec.productions {
            let choices: Vec<Vec<&Grid>> = p.rhs.nodes.iter().map(|m| sets[m.index()].iter().collect()).collect();
            if choices.iter().any(Vec::is_empty) {
                continue;
            }
            let mut idx = vec![0usize; choices.len()];
            loop {
                let pick: Vec<&Grid> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
                next[p.lhs.index()].insert(production_grid(p, dfa, &pick));
                let mut d = 0;
                while d < idx.len() {
                    idx[d] += 1;
                    if idx[d] < choices[d].len() {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == idx.len() {
                    break;
                }
            }
        }
        if next.iter().any(|s| s.len() > 1) {
            return (EnumVerdict::Unsafe, rounds);
        }
        if next == sets {
            break;
        }
        sets = next;
    }
    if sets.iter().any(BTreeSet::is_empty) {
        return (EnumVerdict::Unproductive, rounds);
    }
    let grids = sets.into_iter().map(|s| s.into_iter().next().expect("non-empty")).collect();
    (EnumVerdict::Safe(grids), rounds)
}

/// Regular expressions with an explicit empty language, for derivatives.
#[derive(Clone, PartialEq, Eq, Debug)]
enum Re {
    Empty,
    Eps,
    Any,
    Sym(String),
    Cat(Box<Re>, Box<Re>),
    Or(Box<Re>, Box<Re>),
    Star(Box<Re>),
}

fn lower(r: &Regex) -> Re {
    match r {
        Regex::Epsilon => Re::Eps,
        Regex::Wildcard => Re::Any,
        Regex::Symbol(s) => Re::Sym(s.clone()),
        Regex::Concat(a, b) => Re::Cat(Box::new(lower(a)), Box::new(lower(b))),
        Regex::Alt(a, b) => Re::Or(Box::new(lower(a)), Box::new(lower(b))),
        Regex::Star(a) => Re::Star(Box::new(lower(a))),
        Regex::Plus(a) => Re::Cat(Box::new(lower(a)), Box::new(Re::Star(Box::new(lower(a))))),
    }
}

fn nullable(r: &Re) -> bool {
    match r {
        Re::Empty | Re::Any | Re::Sym(_) => false,
        Re::Eps | Re::Star(_) => true,
        Re::Cat(a, b) => nullable(a) && nullable(b),
        Re::Or(a, b) => nullable(a) || nullable(b),
    }
}

fn cat(a: Re, b: Re) -> Re {
    match (a, b) {
        (Re::Empty, _) | (_, Re::Empty) => Re::Empty,
        (Re::Eps, x) | (x, Re::Eps) => x,
        (a, b) => Re::Cat(Box::new(a), Box::new(b)),
    }
}

fn or(a: Re, b: Re) -> Re {
    match (a, b) {
        (Re::Empty, x) | (x, Re::Empty) => x,
        (a, b) if a == b => a,
        (a, b) => Re::Or(Box::new(a), Box::new(b)),
    }
}

fn derive(r: &Re, sym: &str) -> Re {
    match r {
        Re::Empty | Re::Eps => Re::Empty,
        Re::Any => Re::Eps,
        Re::Sym(s) => {
            if s == sym {
                Re::Eps
            } else {
                Re::Empty
            }
        }
        Re::Cat(a, b) => {
            let left = cat(derive(a, sym), (**b).clone());
            if nullable(a) {
                or(left, derive(b, sym))
            } else {
                left
            }
        }
        Re::Or(a, b) => or(derive(a, sym), derive(b, sym)),
        Re::Star(a) => cat(derive(a, sym), r.clone()),
    }
}

/// Word membership by repeated derivatives.
pub fn derivative_matches(r: &Regex, word: &[&str]) -> bool {
    let mut cur = lower(r);
    for sym in word {
        cur = derive(&cur, sym);
        if cur == Re::Empty {
            return false;
        }
    }
    nullable(&cur)
}

/// Every word over `gamma` of length at most `max_len`.
pub fn all_words(gamma: &[String], max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<usize>| {
                (0..gamma.len()).map(move |a| {
                    let mut w2 = w.clone();
                    w2.push(a);
                    w2
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// A random expression of depth at most `depth` over `gamma`.
pub fn random_regex(rng: &mut impl Rng, gamma: &[String], depth: usize) -> Regex {
    let leaf = depth <= 1 || rng.gen_bool(0.25);
    if leaf {
        return match rng.gen_range(0..6) {
            0 => Regex::Epsilon,
            1 => Regex::Wildcard,
            _ => Regex::sym(&gamma[rng.gen_range(0..gamma.len())]),
        };
    }
    match rng.gen_range(0..5) {
        0 | 1 => Regex::concat(random_regex(rng, gamma, depth - 1), random_regex(rng, gamma, depth - 1)),
        2 => Regex::alt(random_regex(rng, gamma, depth - 1), random_regex(rng, gamma, depth - 1)),
        3 => Regex::star(random_regex(rng, gamma, depth - 1)),
        _ => Regex::plus(random_regex(rng, gamma, depth - 1)),
    }
}

/// Whether every state is reachable from the start and every two states are
/// told apart by some word over the first `gamma_len` tags, by table
/// filling.
pub fn is_minimal(dfa: &Dfa, gamma_len: usize) -> Result<(), String> {
    let n = dfa.num_states();
    let step = |q: usize, a: usize| dfa.step(q, TagId(a as u32));
    let mut seen = vec![false; n];
    seen[dfa.start()] = true;
    let mut stack = vec![dfa.start()];
    while let Some(q) = stack.pop() {
        for a in 0..gamma_len {
            let t = step(q, a);
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    if let Some(q) = seen.iter().position(|&s| !s) {
        return Err(format!("state {q} is unreachable"));
    }
    let mut marked = vec![vec![false; n]; n];
    for p in 0..n {
        for q in 0..n {
            marked[p][q] = dfa.is_accepting(p) != dfa.is_accepting(q);
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for p in 0..n {
            for q in 0..n {
                if !marked[p][q] && (0..gamma_len).any(|a| marked[step(p, a)][step(q, a)]) {
                    marked[p][q] = true;
                    changed = true;
                }
            }
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            if !marked[p][q] {
                return Err(format!("states {p} and {q} are equivalent"));
            }
        }
    }
    Ok(())
}

/// Height of the lowest complete derivation below each module.
pub fn completion_heights(spec: &WorkflowSpec) -> Vec<usize> {
    let mut h: Vec<usize> = spec
        .modules
        .iter()
        .map(|m| if m.kind == ModuleKind::Atomic { 0 } else { usize::MAX })
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for p in &spec.productions {
            let worst = p.rhs.nodes.iter().map(|m| h[m.index()]).max().unwrap_or(0);
            if worst != usize::MAX && worst + 1 < h[p.lhs.index()] {
                h[p.lhs.index()] = worst + 1;
                changed = true;
            }
        }
    }
    h
}

/// A complete derivation replayed on the coarse graph and, in lockstep, on
/// the fine-grained port graph of the intersected spec.
pub struct FineReplay {
    /// Coarse edges between final atomic nodes, as run ids.
    pub coarse: Vec<(u32, u32, TagId)>,
    pub num_nodes: usize,
    /// Port adjacency: port `v * 2 * nq + side * nq + q` with side 0 = in.
    pub ports: Vec<Vec<usize>>,
    pub nq: usize,
    /// State id to run id for atomic nodes.
    pub run_id: Vec<Option<u32>>,
}

impl FineReplay {
    pub fn port(&self, v: usize, side: usize, q: usize) -> usize {
        v * 2 * self.nq + side * self.nq + q
    }

    /// Ports reachable from `from`.
    pub fn reach(&self, from: usize) -> HashSet<usize> {
        let mut seen = HashSet::from([from]);
        let mut stack = vec![from];
        while let Some(p) = stack.pop() {
            for &t in &self.ports[p] {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    }
}

/// Runs a random derivation of at most about `fires` replacements. Each
/// composite node is first given ports joined by its module's transfer
/// matrix; firing it removes those links, wires its in-ports to the new
/// source's in-ports and the new sink's out-ports to its out-ports, and adds
/// the fine-grained right-hand side edges of the production.
pub fn fine_replay(g: &Grammar, fg: &FineGrainedSpec<'_>, fires: usize, rng: &mut impl Rng) -> FineReplay {
    let spec = g.spec();
    let nq = fg.num_states();
    let heights = completion_heights(spec);
    let mut st = DerivationState::init(g);
    let mut ports: Vec<Vec<usize>> = Vec::new();
    let port = |v: usize, side: usize, q: usize| v * 2 * nq + side * nq + q;
    let grow = |ports: &mut Vec<Vec<usize>>, upto: usize| {
        if ports.len() < upto * 2 * nq {
            ports.resize(upto * 2 * nq, Vec::new());
        }
    };
    let link_module = |ports: &mut Vec<Vec<usize>>, v: usize, m| {
        let lam = fg.lambda(m);
        for q in 0..nq {
            for q2 in 0..nq {
                if lam.get(q, q2) {
                    ports[port(v, 0, q)].push(port(v, 1, q2));
                }
            }
        }
    };
    grow(&mut ports, 1);
    link_module(&mut ports, 0, st.module_of(0));
    let mut count = 0;
    while let Some(&v) = st.frontier().first() {
        let m = st.module_of(v);
        let options: Vec<u32> = (1..=spec.productions.len() as u32)
            .filter(|&k| spec.productions[k as usize - 1].lhs == m)
            .collect();
        let k = if count < fires {
            options[rng.gen_range(0..options.len())]
        } else {
            *options
                .iter()
                .min_by_key(|&&k| {
                    let p = &spec.productions[k as usize - 1];
                    p.rhs.nodes.iter().map(|c| heights[c.index()]).max().unwrap_or(0)
                })
                .expect("productive module")
        };
        count += 1;
        let created = st.fire(v, k).expect("frontier node");
        let top = created.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        grow(&mut ports, top);
        let vi = v as usize;
        for q in 0..nq {
            ports[port(vi, 0, q)].clear();
        }
        let prod = &spec.productions[k as usize - 1];
        let src = created[prod.rhs.source] as usize;
        let sink = created[prod.rhs.sink] as usize;
        for q in 0..nq {
            ports[port(vi, 0, q)].push(port(src, 0, q));
            ports[port(sink, 1, q)].push(port(vi, 1, q));
        }
        for (pos, &c) in created.iter().enumerate() {
            link_module(&mut ports, c as usize, prod.rhs.nodes[pos]);
        }
        for e in &prod.rhs.edges {
            let (a, b) = (created[e.src] as usize, created[e.dst] as usize);
            for q in 0..nq {
                ports[port(a, 1, q)].push(port(b, 0, fg.dfa().step(q, e.tag)));
            }
        }
    }
    let total = ports.len() / (2 * nq);
    let mut run_id = vec![None; total];
    let mut next = 0u32;
    for (v, slot) in run_id.iter_mut().enumerate() {
        if !spec.is_composite(st.module_of(v as u32)) {
            *slot = Some(next);
            next += 1;
        }
    }
    let coarse = st
        .edges()
        .iter()
        .map(|&(a, b, t)| (run_id[a as usize].expect("atomic"), run_id[b as usize].expect("atomic"), t))
        .collect();
    FineReplay {
        coarse,
        num_nodes: next as usize,
        ports,
        nq,
        run_id,
    }
}

/// Whether some coarse path from `u` to `v` drives the DFA from its start
/// to an accepting state.
pub fn coarse_accepts(r: &FineReplay, dfa: &Dfa, u: u32, v: u32) -> bool {
    let mut succ = vec![Vec::new(); r.num_nodes];
    for &(a, b, t) in &r.coarse {
        succ[a as usize].push((b, t));
    }
    let mut seen = HashSet::from([(u, dfa.start())]);
    let mut stack = vec![(u, dfa.start())];
    while let Some((x, q)) = stack.pop() {
        if x == v && dfa.is_accepting(q) {
            return true;
        }
        for &(y, t) in &succ[x as usize] {
            if seen.insert((y, dfa.step(q, t))) {
                stack.push((y, dfa.step(q, t)));
            }
        }
    }
    false
}

//! The query-intersected grammar and the port-level tables used to decode
//! label pairs.
//!
//! Every module gets one input and one output port per DFA state. Inside a
//! right-hand side, an atomic node links `in[q]` to `out[q]`, a composite node
//! links `in[q]` to `out[q']` where its transfer matrix allows it, and an edge
//! with tag `a` links `out(x, q)` to `in(y, δ(q, a))`. A module's ports are
//! those of its right-hand side's source (inputs) and sink (outputs).

mod power;

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

pub use power::PowerOracle;

use crate::grammar::{Grammar, ModuleId};
use crate::matrix::{apply, BoolMatrix, StateSet};
use crate::regex::{Dfa, Regex};
use crate::safety::{class_rows, is_safe_query, SafetyReport, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntersectError {
    #[error("query is {0} for this spec; cannot intersect")]
    NotSafe(Verdict),
}

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum Port {
    In { pos: usize, q: usize },
    Out { pos: usize, q: usize },
}

/// The grammar intersected with a safe DFA.
#[derive(Clone, Debug)]
pub struct FineGrainedSpec<'a> {
    grammar: &'a Grammar,
    dfa: &'a Dfa,
    lambdas: Vec<BoolMatrix>,
}

impl<'a> FineGrainedSpec<'a> {
    /// Refuses anything but a safe report.
    pub fn intersect(
        grammar: &'a Grammar,
        dfa: &'a Dfa,
        report: &SafetyReport,
    ) -> Result<Self, IntersectError> {
        if !report.is_safe() {
            return Err(IntersectError::NotSafe(report.verdict));
        }
        let lambdas = report
            .lambdas
            .iter()
            .map(|l| l.clone().expect("safe reports define every module"))
            .collect();
        Ok(FineGrainedSpec {
            grammar,
            dfa,
            lambdas,
        })
    }

    pub fn grammar(&self) -> &'a Grammar {
        self.grammar
    }

    pub fn dfa(&self) -> &'a Dfa {
        self.dfa
    }

    pub fn num_states(&self) -> usize {
        self.dfa.num_states()
    }

    pub fn lambda(&self, m: ModuleId) -> &BoolMatrix {
        &self.lambdas[m.index()]
    }

    /// Explicit port edges of the augmented right-hand side of production
    /// `k0` (0-based).
    pub fn port_edges(&self, k0: usize) -> Vec<(Port, Port)> {
        let rhs = &self.grammar.spec().productions[k0].rhs;
        let nq = self.num_states();
        let mut out = Vec::new();
        for (pos, m) in rhs.nodes.iter().enumerate() {
            let lam = self.lambda(*m);
            for q in 0..nq {
                for q2 in 0..nq {
                    if lam.get(q, q2) {
                        out.push((Port::In { pos, q }, Port::Out { pos, q: q2 }));
                    }
                }
            }
        }
        for e in &rhs.edges {
            for q in 0..nq {
                out.push((
                    Port::Out { pos: e.src, q },
                    Port::In {
                        pos: e.dst,
                        q: self.dfa.step(q, e.tag),
                    },
                ));
            }
        }
        out
    }

    /// Ports reachable from `from` inside the augmented right-hand side of
    /// production `k0`, by breadth-first search over [`port_edges`](Self::port_edges).
    pub fn port_reach(&self, k0: usize, from: Port) -> HashSet<Port> {
        let edges = self.port_edges(k0);
        let mut seen = HashSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            for (a, b) in &edges {
                if *a == p && seen.insert(*b) {
                    queue.push_back(*b);
                }
            }
        }
        seen
    }
}

#[derive(Clone, Debug)]
struct ProdTables {
    n: usize,
    cross: Vec<u64>,
    up: Vec<u64>,
    down: Vec<u64>,
    reach: Vec<bool>,
}

#[derive(Clone, Debug)]
struct CycleTables {
    /// `(production, continuation position)` for each cycle offset, 0-based.
    steps: Vec<(usize, usize)>,
    /// In-ports of a cycle module's execution to in-ports of its
    /// continuation child, one matrix per offset.
    asc: PowerOracle,
    /// Out-ports of a continuation child to out-ports of its parent, in
    /// reverse offset order.
    desc: PowerOracle,
}

/// Port-level reachability tables for every production and cycle.
#[derive(Clone, Debug)]
pub struct DecodeTables {
    nq: usize,
    accept: StateSet,
    lambdas: Vec<BoolMatrix>,
    prods: Vec<ProdTables>,
    cycles: Vec<CycleTables>,
}

fn mul(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().map(|&r| apply(r, b)).collect()
}

impl DecodeTables {
    pub fn compute(fg: &FineGrainedSpec<'_>) -> DecodeTables {
        let g = fg.grammar;
        let spec = g.spec();
        let nq = fg.num_states();
        let tag_rows = class_rows(fg.dfa);
        let id = BoolMatrix::identity(nq).rows().to_vec();
        let zero = vec![0u64; nq];

        let prods = spec
            .productions
            .iter()
            .enumerate()
            .map(|(k0, p)| {
                let rhs = &p.rhs;
                let n = rhs.len();
                let z = g.rhs_reach(k0);
                let lam = |pos: usize| fg.lambda(rhs.nodes[pos]).rows();
                let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
                for (e, edge) in rhs.edges.iter().enumerate() {
                    incoming[edge.dst].push(e);
                }
                let mut cross = vec![0u64; n * n * nq];
                for i in 0..n {
                    let mut out_of: Vec<Option<Vec<u64>>> = vec![None; n];
                    out_of[i] = Some(id.clone());
                    for j in i + 1..n {
                        if !z.reaches(i, j) {
                            continue;
                        }
                        let mut acc = zero.clone();
                        for &e in &incoming[j] {
                            let edge = rhs.edges[e];
                            if let Some(o) = &out_of[edge.src] {
                                let step = mul(o, &tag_rows[fg.dfa.class_of(edge.tag)]);
                                for (a, b) in acc.iter_mut().zip(step) {
                                    *a |= b;
                                }
                            }
                        }
                        out_of[j] = Some(mul(&acc, lam(j)));
                        cross[(i * n + j) * nq..(i * n + j + 1) * nq].copy_from_slice(&acc);
                    }
                }
                let mut up = vec![0u64; n * nq];
                let mut down = vec![0u64; n * nq];
                for i in 0..n {
                    let u = if i == rhs.sink {
                        id.clone()
                    } else {
                        let c = &cross[(i * n + rhs.sink) * nq..(i * n + rhs.sink + 1) * nq];
                        mul(c, lam(rhs.sink))
                    };
                    up[i * nq..(i + 1) * nq].copy_from_slice(&u);
                    let d = if i == rhs.source {
                        id.clone()
                    } else {
                        let c = &cross[(rhs.source * n + i) * nq..(rhs.source * n + i + 1) * nq];
                        mul(lam(rhs.source), c)
                    };
                    down[i * nq..(i + 1) * nq].copy_from_slice(&d);
                }
                let reach = (0..n * n).map(|x| z.reaches(x / n, x % n)).collect();
                ProdTables {
                    n,
                    cross,
                    up,
                    down,
                    reach,
                }
            })
            .collect::<Vec<_>>();

        let cycles = g
            .cycles()
            .iter()
            .map(|c| {
                let steps: Vec<(usize, usize)> = c
                    .edges
                    .iter()
                    .map(|e| (e.k as usize - 1, e.i as usize - 1))
                    .collect();
                let xin: Vec<BoolMatrix> = steps
                    .iter()
                    .map(|&(k0, p)| {
                        BoolMatrix::from_rows(nq, prods[k0].down[p * nq..(p + 1) * nq].to_vec())
                    })
                    .collect();
                let mut xout_rev: Vec<BoolMatrix> = steps
                    .iter()
                    .map(|&(k0, p)| {
                        BoolMatrix::from_rows(nq, prods[k0].up[p * nq..(p + 1) * nq].to_vec())
                    })
                    .collect();
                xout_rev.reverse();
                CycleTables {
                    steps,
                    asc: PowerOracle::new(&xin),
                    desc: PowerOracle::new(&xout_rev),
                }
            })
            .collect();

        DecodeTables {
            nq,
            accept: fg.dfa.accept_mask(),
            lambdas: fg.lambdas.clone(),
            prods,
            cycles,
        }
    }

    pub fn num_states(&self) -> usize {
        self.nq
    }

    pub fn accept_mask(&self) -> StateSet {
        self.accept
    }

    /// The start state as a singleton set.
    pub fn start_set(&self) -> StateSet {
        1
    }

    pub fn num_productions(&self) -> usize {
        self.prods.len()
    }

    pub fn num_cycles(&self) -> usize {
        self.cycles.len()
    }

    /// Right-hand side length of the 0-based production `k0`.
    pub fn rhs_len(&self, k0: usize) -> usize {
        self.prods[k0].n
    }

    pub fn lambda(&self, m: ModuleId) -> &BoolMatrix {
        &self.lambdas[m.index()]
    }

    /// Out-ports of position `i` to in-ports of position `j` (0-based).
    #[inline]
    pub fn cross(&self, k0: usize, i: usize, j: usize) -> &[u64] {
        let p = &self.prods[k0];
        let at = (i * p.n + j) * self.nq;
        &p.cross[at..at + self.nq]
    }

    /// Out-ports of position `i` to the production's out-ports.
    #[inline]
    pub fn up(&self, k0: usize, i: usize) -> &[u64] {
        &self.prods[k0].up[i * self.nq..(i + 1) * self.nq]
    }

    /// The production's in-ports to in-ports of position `j`.
    #[inline]
    pub fn down(&self, k0: usize, j: usize) -> &[u64] {
        &self.prods[k0].down[j * self.nq..(j + 1) * self.nq]
    }

    /// Module-level reachability between positions `i` and `j`.
    #[inline]
    pub fn reach(&self, k0: usize, i: usize, j: usize) -> bool {
        let p = &self.prods[k0];
        p.reach[i * p.n + j]
    }

    pub fn cycle_len(&self, c: usize) -> usize {
        self.cycles[c].steps.len()
    }

    /// `(production, continuation position)` of cycle `c` at `offset`.
    pub fn cycle_step(&self, c: usize, offset: usize) -> (usize, usize) {
        let steps = &self.cycles[c].steps;
        steps[if steps.len() == 1 { 0 } else { offset % steps.len() }]
    }

    /// Descends `n` recursion levels starting at cycle offset `start`.
    pub fn descend(&self, c: usize, v: StateSet, start: usize, n: u64) -> (StateSet, u32) {
        self.cycles[c].asc.apply(v, start, n)
    }

    /// Ascends `n` recursion levels; `start` is the offset of the innermost
    /// parent being exited into.
    pub fn ascend(&self, c: usize, v: StateSet, start: usize, n: u64) -> (StateSet, u32) {
        let cy = &self.cycles[c];
        let len = cy.steps.len();
        let back = if len == 1 { 0 } else { len - 1 - start % len };
        cy.desc.apply(v, back, n)
    }

    pub fn descend_matrix(&self, c: usize, start: usize, n: u64) -> BoolMatrix {
        self.cycles[c].asc.query(start, n)
    }

    pub fn ascend_matrix(&self, c: usize, start: usize, n: u64) -> BoolMatrix {
        let len = self.cycles[c].steps.len();
        self.cycles[c].desc.query(len - 1 - start % len, n)
    }

    /// Text dump of transfer matrices and per-production tables.
    pub fn render(&self, g: &Grammar) -> String {
        let spec = g.spec();
        let nq = self.nq;
        let grid = |rows: &[u64]| BoolMatrix::from_rows(nq, rows.to_vec()).to_grid();
        let mut out = String::new();
        for (m, sym) in spec.modules.iter().enumerate() {
            if spec.is_composite(ModuleId(m as u32)) {
                let _ = write!(out, "lambda {}:\n{}", sym.name, self.lambdas[m].to_grid());
            }
        }
        for k0 in 0..self.prods.len() {
            let n = self.prods[k0].n;
            let _ = writeln!(out, "production {}:", k0 + 1);
            for i in 0..n {
                let _ = write!(out, "  up[{}]:\n{}", i + 1, indent(&grid(self.up(k0, i))));
                let _ = write!(out, "  down[{}]:\n{}", i + 1, indent(&grid(self.down(k0, i))));
            }
            for i in 0..n {
                for j in 0..n {
                    if self.reach(k0, i, j) {
                        let _ = write!(
                            out,
                            "  cross[{}][{}]:\n{}",
                            i + 1,
                            j + 1,
                            indent(&grid(self.cross(k0, i, j)))
                        );
                    }
                }
            }
            let z: Vec<String> = (0..n)
                .map(|i| (0..n).map(|j| if self.reach(k0, i, j) { '1' } else { '0' }).collect())
                .collect();
            let _ = writeln!(out, "  reach:\n{}", indent(&(z.join("\n") + "\n")));
        }
        out
    }
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("    {l}\n")).collect()
}

/// Safety check, intersection and table computation in one step.
pub fn tables_for_query(g: &Grammar, ast: &Regex) -> Result<DecodeTables, IntersectError> {
    let (_, report, dfa) = is_safe_query(g.spec(), ast);
    Ok(DecodeTables::compute(&FineGrainedSpec::intersect(g, &dfa, &report)?))
}

/// Tables of the universal query, which decode plain reachability.
pub fn reach_tables(g: &Grammar) -> DecodeTables {
    tables_for_query(g, &Regex::star(Regex::Wildcard)).expect("the universal query is safe")
}

//! Safety of a query DFA with respect to a grammar.
//!
//! A module's transfer matrix maps the DFA state on entry to the states
//! reachable on exit along some source-to-sink path of an execution. The DFA
//! is safe when every module has a single transfer matrix across all of its
//! executions.

use std::collections::VecDeque;
use std::fmt;

use crate::grammar::{ModuleId, ModuleKind, Production, WorkflowSpec};
use crate::matrix::{apply, BoolMatrix};
use crate::regex::{compile_minimal_dfa, Dfa, Regex};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Safe,
    Unsafe,
    /// Some composite module never derives an all-atomic execution.
    Unproductive,
    /// The DFA has more states than a matrix row can hold.
    TooManyStates,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe => "unsafe",
            Verdict::Unproductive => "unproductive",
            Verdict::TooManyStates => "too-many-states",
        })
    }
}

/// Two productions of one module that induce different transfer matrices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UnsafeWitness {
    pub module: ModuleId,
    /// 1-based production that bound the module's matrix first.
    pub bound_by: usize,
    pub bound: BoolMatrix,
    /// 1-based production that disagrees.
    pub conflicting: usize,
    pub conflict: BoolMatrix,
}

#[derive(Clone, Debug)]
pub struct SafetyReport {
    pub verdict: Verdict,
    /// Transfer matrix per module id; total over modules when safe.
    pub lambdas: Vec<Option<BoolMatrix>>,
    pub witness: Option<UnsafeWitness>,
    pub unproductive: Vec<ModuleId>,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.verdict == Verdict::Safe
    }

    pub fn lambda(&self, m: ModuleId) -> Option<&BoolMatrix> {
        self.lambdas[m.index()].as_ref()
    }

    /// Verdict, composite matrices as 0/1 grids, and the witness if any.
    pub fn render(&self, spec: &WorkflowSpec) -> String {
        let mut out = format!("verdict: {}\n", self.verdict);
        for (m, lam) in self.lambdas.iter().enumerate() {
            if spec.modules[m].kind != ModuleKind::Composite {
                continue;
            }
            if let Some(lam) = lam {
                out.push_str(&format!("lambda {}:\n{}", spec.modules[m].name, lam.to_grid()));
            }
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!(
                "witness: module {} production {} gives\n{}but production {} gives\n{}",
                spec.module_name(w.module),
                w.bound_by,
                w.bound.to_grid(),
                w.conflicting,
                w.conflict.to_grid()
            ));
        }
        for m in &self.unproductive {
            out.push_str(&format!("unproductive module {}\n", spec.module_name(*m)));
        }
        out
    }
}

/// Per-tag transition rows, indexed by alphabet class.
pub(crate) fn class_rows(dfa: &Dfa) -> Vec<Vec<u64>> {
    (0..dfa.num_classes())
        .map(|c| dfa.class_matrix(c).rows().to_vec())
        .collect()
}

fn mul_rows(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().map(|&r| apply(r, b)).collect()
}

/// Transfer matrix of one production given matrices for every module on its
/// right-hand side.
pub fn lambda_of_production(
    prod: &Production,
    dfa: &Dfa,
    lambdas: &[Option<BoolMatrix>],
) -> BoolMatrix {
    let rows = class_rows(dfa);
    lambda_with_rows(prod, dfa, &rows, lambdas)
}

fn lambda_with_rows(
    prod: &Production,
    dfa: &Dfa,
    class_rows: &[Vec<u64>],
    lambdas: &[Option<BoolMatrix>],
) -> BoolMatrix {
    let n = dfa.num_states();
    let rhs = &prod.rhs;
    let lam = |pos: usize| {
        lambdas[rhs.nodes[pos].index()]
            .as_ref()
            .expect("right-hand side matrices are defined")
    };
    // reach_in[j]: entry states of the source to entry states of node j.
    let mut reach_in: Vec<Vec<u64>> = vec![vec![0; n]; rhs.len()];
    reach_in[rhs.source] = BoolMatrix::identity(n).rows().to_vec();
    let mut reach_out: Vec<Option<Vec<u64>>> = vec![None; rhs.len()];
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); rhs.len()];
    for (e, edge) in rhs.edges.iter().enumerate() {
        incoming[edge.dst].push(e);
    }
    for j in 0..rhs.len() {
        for &e in &incoming[j] {
            let edge = rhs.edges[e];
            let out_x = reach_out[edge.src]
                .get_or_insert_with(|| mul_rows(&reach_in[edge.src], lam(edge.src).rows()))
                .clone();
            let step = mul_rows(&out_x, &class_rows[dfa.class_of(edge.tag)]);
            for (a, b) in reach_in[j].iter_mut().zip(step) {
                *a |= b;
            }
        }
    }
    let sink = mul_rows(&reach_in[rhs.sink], lam(rhs.sink).rows());
    BoolMatrix::from_rows(n, sink)
}

/// Worklist fixpoint: a production is evaluated once all of its right-hand
/// side matrices are known; the first result binds the module and every
/// later production of that module must agree with it.
pub fn check_safety(spec: &WorkflowSpec, dfa: &Dfa) -> SafetyReport {
    let nm = spec.modules.len();
    let mut report = SafetyReport {
        verdict: Verdict::Safe,
        lambdas: vec![None; nm],
        witness: None,
        unproductive: Vec::new(),
    };
    if !dfa.fits_matrix() {
        report.verdict = Verdict::TooManyStates;
        return report;
    }
    let n = dfa.num_states();
    let rows = class_rows(dfa);
    let mut bound_by = vec![0usize; nm];
    let mut remaining = vec![0usize; spec.productions.len()];
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); nm];
    for (m, sym) in spec.modules.iter().enumerate() {
        if sym.kind == ModuleKind::Atomic {
            report.lambdas[m] = Some(BoolMatrix::identity(n));
        }
    }
    let mut ready = VecDeque::new();
    for (k0, p) in spec.productions.iter().enumerate() {
        for m in &p.rhs.nodes {
            if report.lambdas[m.index()].is_none() {
                remaining[k0] += 1;
                uses[m.index()].push(k0);
            }
        }
        if remaining[k0] == 0 {
            ready.push_back(k0);
        }
    }
    while let Some(k0) = ready.pop_front() {
        let prod = &spec.productions[k0];
        let lam = lambda_with_rows(prod, dfa, &rows, &report.lambdas);
        let m = prod.lhs.index();
        match &report.lambdas[m] {
            None => {
                report.lambdas[m] = Some(lam);
                bound_by[m] = k0 + 1;
                for &k in &uses[m] {
                    remaining[k] -= 1;
                    if remaining[k] == 0 {
                        ready.push_back(k);
                    }
                }
            }
            Some(bound) if *bound != lam => {
                report.verdict = Verdict::Unsafe;
                report.witness = Some(UnsafeWitness {
                    module: prod.lhs,
                    bound_by: bound_by[m],
                    bound: bound.clone(),
                    conflicting: k0 + 1,
                    conflict: lam,
                });
                return report;
            }
            Some(_) => {}
        }
    }
    report.unproductive = (0..nm)
        .filter(|&m| report.lambdas[m].is_none())
        .map(|m| ModuleId(m as u32))
        .collect();
    if !report.unproductive.is_empty() {
        report.verdict = Verdict::Unproductive;
    }
    report
}

/// Compiles the minimal DFA of `ast` over the spec's tags and checks it.
pub fn is_safe_query(spec: &WorkflowSpec, ast: &Regex) -> (bool, SafetyReport, Dfa) {
    let dfa = compile_minimal_dfa(ast, &spec.tags);
    let report = check_safety(spec, &dfa);
    (report.is_safe(), report, dfa)
}

use std::collections::HashSet;
use std::fmt;

use super::{build_production_graph, check_strictly_linear_recursive, ModuleKind, WorkflowSpec};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    StartNotComposite { module: String },
    EmptyRhs { prod: usize },
    UnknownModule { prod: usize, pos: usize },
    EdgeOutOfRange { prod: usize, src: usize, dst: usize },
    NotTopological { prod: usize, src: usize, dst: usize },
    DuplicateEdge { prod: usize, src: usize, dst: usize, tag: String },
    MultipleSources { prod: usize, positions: Vec<usize> },
    MultipleSinks { prod: usize, positions: Vec<usize> },
    SourceMismatch { prod: usize, declared: usize, actual: usize },
    SinkMismatch { prod: usize, declared: usize, actual: usize },
    AtomicLhs { prod: usize, module: String },
    NoProduction { module: String },
    Unproductive { module: String },
    UnusedTag { tag: String },
    UnknownTag { prod: usize, tag: u32 },
    SharedCycleVertex { module: String, first: String, second: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            StartNotComposite { module } => write!(f, "start module {module} is not composite"),
            EmptyRhs { prod } => write!(f, "empty right-hand side in production {prod}"),
            UnknownModule { prod, pos } => {
                write!(f, "unknown module at node {pos} in production {prod}")
            }
            EdgeOutOfRange { prod, src, dst } => {
                write!(f, "edge {src}->{dst} out of range in production {prod}")
            }
            NotTopological { prod, src, dst } => write!(
                f,
                "edge {src}->{dst} in production {prod} breaks the topological node order"
            ),
            DuplicateEdge { prod, src, dst, tag } => write!(
                f,
                "parallel edge {src}->{dst} with repeated tag {tag} in production {prod}"
            ),
            MultipleSources { prod, positions } => {
                write!(f, "multiple sources in production {prod}: {positions:?}")
            }
            MultipleSinks { prod, positions } => {
                write!(f, "multiple sinks in production {prod}: {positions:?}")
            }
            SourceMismatch {
                prod,
                declared,
                actual,
            } => write!(
                f,
                "production {prod} declares source {declared} but its source is {actual}"
            ),
            SinkMismatch {
                prod,
                declared,
                actual,
            } => write!(
                f,
                "production {prod} declares sink {declared} but its sink is {actual}"
            ),
            AtomicLhs { prod, module } => {
                write!(f, "production {prod} rewrites atomic module {module}")
            }
            NoProduction { module } => {
                write!(f, "unproductive module {module}: composite without productions")
            }
            Unproductive { module } => write!(f, "unproductive module {module}"),
            UnusedTag { tag } => write!(f, "tag {tag} is declared but never used"),
            UnknownTag { prod, tag } => write!(f, "unknown tag id {tag} in production {prod}"),
            SharedCycleVertex {
                module,
                first,
                second,
            } => write!(
                f,
                "not strictly linear-recursive: cycles through {first} and {second} share module {module}"
            ),
        }
    }
}

/// Outcome of validation; production and node numbers in violations are
/// 1-based.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

pub(super) fn validate(spec: &WorkflowSpec) -> ValidationReport {
    let mut out = Vec::new();
    let nmod = spec.modules.len();

    if spec.start.index() >= nmod || spec.modules[spec.start.index()].kind != ModuleKind::Composite
    {
        let module = spec
            .modules
            .get(spec.start.index())
            .map(|m| m.name.clone())
            .unwrap_or_else(|| format!("#{}", spec.start.0));
        out.push(Violation::StartNotComposite { module });
    }

    let mut used_tags = HashSet::new();
    let mut structurally_ok = true;
    for (k0, p) in spec.productions.iter().enumerate() {
        let prod = k0 + 1;
        let rhs = &p.rhs;
        let n = rhs.len();
        if p.lhs.index() >= nmod || spec.modules[p.lhs.index()].kind != ModuleKind::Composite {
            out.push(Violation::AtomicLhs {
                prod,
                module: spec
                    .modules
                    .get(p.lhs.index())
                    .map(|m| m.name.clone())
                    .unwrap_or_default(),
            });
            structurally_ok = false;
        }
        if n == 0 {
            out.push(Violation::EmptyRhs { prod });
            structurally_ok = false;
            continue;
        }
        for (pos, m) in rhs.nodes.iter().enumerate() {
            if m.index() >= nmod {
                out.push(Violation::UnknownModule { prod, pos: pos + 1 });
                structurally_ok = false;
            }
        }
        let mut indeg = vec![0usize; n];
        let mut outdeg = vec![0usize; n];
        let mut seen = HashSet::new();
        for e in &rhs.edges {
            if e.src >= n || e.dst >= n {
                out.push(Violation::EdgeOutOfRange {
                    prod,
                    src: e.src + 1,
                    dst: e.dst + 1,
                });
                structurally_ok = false;
                continue;
            }
            if e.tag.index() >= spec.tags.len() {
                out.push(Violation::UnknownTag { prod, tag: e.tag.0 });
                structurally_ok = false;
                continue;
            }
            used_tags.insert(e.tag);
            if e.src >= e.dst {
                out.push(Violation::NotTopological {
                    prod,
                    src: e.src + 1,
                    dst: e.dst + 1,
                });
                structurally_ok = false;
            }
            if !seen.insert((e.src, e.dst, e.tag)) {
                out.push(Violation::DuplicateEdge {
                    prod,
                    src: e.src + 1,
                    dst: e.dst + 1,
                    tag: spec.tags[e.tag.index()].clone(),
                });
            }
            outdeg[e.src] += 1;
            indeg[e.dst] += 1;
        }
        let sources: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let sinks: Vec<usize> = (0..n).filter(|&i| outdeg[i] == 0).collect();
        if sources.len() > 1 {
            out.push(Violation::MultipleSources {
                prod,
                positions: sources.iter().map(|p| p + 1).collect(),
            });
            structurally_ok = false;
        } else if sources.len() == 1 && sources[0] != rhs.source {
            out.push(Violation::SourceMismatch {
                prod,
                declared: rhs.source + 1,
                actual: sources[0] + 1,
            });
            structurally_ok = false;
        }
        if sinks.len() > 1 {
            out.push(Violation::MultipleSinks {
                prod,
                positions: sinks.iter().map(|p| p + 1).collect(),
            });
            structurally_ok = false;
        } else if sinks.len() == 1 && sinks[0] != rhs.sink {
            out.push(Violation::SinkMismatch {
                prod,
                declared: rhs.sink + 1,
                actual: sinks[0] + 1,
            });
            structurally_ok = false;
        }
    }

    for (t, name) in spec.tags.iter().enumerate() {
        if !used_tags.contains(&super::TagId(t as u32)) {
            out.push(Violation::UnusedTag { tag: name.clone() });
        }
    }

    let mut has_prod = vec![false; nmod];
    for p in &spec.productions {
        if p.lhs.index() < nmod {
            has_prod[p.lhs.index()] = true;
        }
    }
    for (m, sym) in spec.modules.iter().enumerate() {
        if sym.kind == ModuleKind::Composite && !has_prod[m] {
            out.push(Violation::NoProduction {
                module: sym.name.clone(),
            });
        }
    }

    if !structurally_ok {
        return ValidationReport { violations: out };
    }

    // Emptiness fixpoint for context-free grammars.
    let mut productive: Vec<bool> = spec
        .modules
        .iter()
        .map(|m| m.kind == ModuleKind::Atomic)
        .collect();
    loop {
        let mut changed = false;
        for p in &spec.productions {
            if !productive[p.lhs.index()] && p.rhs.nodes.iter().all(|m| productive[m.index()]) {
                productive[p.lhs.index()] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (m, sym) in spec.modules.iter().enumerate() {
        if sym.kind == ModuleKind::Composite && has_prod[m] && !productive[m] {
            out.push(Violation::Unproductive {
                module: sym.name.clone(),
            });
        }
    }

    if let Err(shared) = check_strictly_linear_recursive(&build_production_graph(spec)) {
        out.push(Violation::SharedCycleVertex {
            module: spec.module_name(shared.module).to_string(),
            first: shared.first.to_string(),
            second: shared.second.to_string(),
        });
    }

    ValidationReport { violations: out }
}

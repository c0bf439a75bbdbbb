//! Workflow specifications as context-free graph grammars.
//!
//! A [`WorkflowSpec`] is the raw grammar as loaded from a file or built in
//! memory. [`Grammar`] wraps a spec that passed validation and carries the
//! derived structure everything else is parameterized by: the production
//! graph with its `(k,i)` edge numbering, the vertex-disjoint cycles with
//! their `(s,t)` numbering, and module-level reachability inside every
//! right-hand side.

mod parse;
mod validate;

use std::collections::HashMap;
use std::fmt;

pub use parse::{parse_spec, write_spec, ParseError};
pub use validate::{ValidationReport, Violation};

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ModuleId(pub u32);

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TagId(pub u32);

impl ModuleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TagId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum ModuleKind {
    Atomic,
    Composite,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModuleSym {
    pub name: String,
    pub kind: ModuleKind,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct WorkflowEdge {
    /// 0-based position of the source node in the right-hand side.
    pub src: usize,
    pub dst: usize,
    pub tag: TagId,
}

/// A simple workflow: the right-hand side of a production. Node positions are
/// 0-based here; labels and files use 1-based positions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SimpleWorkflow {
    pub nodes: Vec<ModuleId>,
    pub edges: Vec<WorkflowEdge>,
    pub source: usize,
    pub sink: usize,
}

impl SimpleWorkflow {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Production {
    pub lhs: ModuleId,
    pub rhs: SimpleWorkflow,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WorkflowSpec {
    pub name: String,
    pub modules: Vec<ModuleSym>,
    pub start: ModuleId,
    /// Production `k` (1-based) is `productions[k - 1]`.
    pub productions: Vec<Production>,
    pub tags: Vec<String>,
}

impl WorkflowSpec {
    pub fn module(&self, id: ModuleId) -> &ModuleSym {
        &self.modules[id.index()]
    }

    pub fn module_name(&self, id: ModuleId) -> &str {
        &self.modules[id.index()].name
    }

    pub fn is_composite(&self, id: ModuleId) -> bool {
        self.modules[id.index()].kind == ModuleKind::Composite
    }

    pub fn tag_name(&self, id: TagId) -> &str {
        &self.tags[id.index()]
    }

    pub fn module_id(&self, name: &str) -> Option<ModuleId> {
        self.modules
            .iter()
            .position(|m| m.name == name)
            .map(|p| ModuleId(p as u32))
    }

    pub fn tag_id(&self, name: &str) -> Option<TagId> {
        self.tags.iter().position(|t| t == name).map(|p| TagId(p as u32))
    }

    /// Sum over productions of one plus the right-hand side size.
    pub fn size(&self) -> usize {
        self.productions.iter().map(|p| 1 + p.rhs.len()).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }
}

/// Incremental construction of a [`WorkflowSpec`]. Modules and tags are
/// interned by name; every module used as a left-hand side becomes composite.
#[derive(Default, Debug)]
pub struct SpecBuilder {
    name: String,
    modules: Vec<ModuleSym>,
    module_ids: HashMap<String, ModuleId>,
    tags: Vec<String>,
    tag_ids: HashMap<String, TagId>,
    start: Option<ModuleId>,
    productions: Vec<Production>,
}

impl SpecBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        SpecBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn module(&mut self, name: &str) -> ModuleId {
        if let Some(&id) = self.module_ids.get(name) {
            return id;
        }
        let id = ModuleId(self.modules.len() as u32);
        self.modules.push(ModuleSym {
            name: name.to_string(),
            kind: ModuleKind::Atomic,
        });
        self.module_ids.insert(name.to_string(), id);
        id
    }

    pub fn tag(&mut self, name: &str) -> TagId {
        if let Some(&id) = self.tag_ids.get(name) {
            return id;
        }
        let id = TagId(self.tags.len() as u32);
        self.tags.push(name.to_string());
        self.tag_ids.insert(name.to_string(), id);
        id
    }

    /// Marks a module composite even if it never gets a production.
    pub fn declare_composite(&mut self, name: &str) -> ModuleId {
        let id = self.module(name);
        self.modules[id.index()].kind = ModuleKind::Composite;
        id
    }

    pub fn start(&mut self, name: &str) -> &mut Self {
        let id = self.module(name);
        self.start = Some(id);
        self
    }

    /// Adds a production. `edges` use 0-based positions into `nodes`.
    pub fn production(
        &mut self,
        lhs: &str,
        nodes: &[&str],
        edges: &[(usize, usize, &str)],
        source: usize,
        sink: usize,
    ) -> &mut Self {
        let lhs = self.declare_composite(lhs);
        let nodes: Vec<ModuleId> = nodes.iter().map(|n| self.module(n)).collect();
        let edges = edges
            .iter()
            .map(|&(src, dst, tag)| WorkflowEdge {
                src,
                dst,
                tag: self.tag(tag),
            })
            .collect();
        self.productions.push(Production {
            lhs,
            rhs: SimpleWorkflow {
                nodes,
                edges,
                source,
                sink,
            },
        });
        self
    }

    pub fn build(&self) -> WorkflowSpec {
        let start = self.start.unwrap_or(ModuleId(0));
        WorkflowSpec {
            name: self.name.clone(),
            modules: self.modules.clone(),
            start,
            productions: self.productions.clone(),
            tags: self.tags.clone(),
        }
    }
}

/// Edge of the production graph: module `from` has module `to` at
/// 1-based position `i` of production `k`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PgEdge {
    pub k: u32,
    pub i: u32,
    pub from: ModuleId,
    pub to: ModuleId,
}

#[derive(Clone, Debug)]
pub struct ProductionGraph {
    pub num_modules: usize,
    pub edges: Vec<PgEdge>,
}

pub fn build_production_graph(spec: &WorkflowSpec) -> ProductionGraph {
    let mut edges = Vec::new();
    for (k0, p) in spec.productions.iter().enumerate() {
        for (i0, &m) in p.rhs.nodes.iter().enumerate() {
            edges.push(PgEdge {
                k: k0 as u32 + 1,
                i: i0 as u32 + 1,
                from: p.lhs,
                to: m,
            });
        }
    }
    ProductionGraph {
        num_modules: spec.modules.len(),
        edges,
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CycleInfo {
    /// 1-based cycle number.
    pub index: u32,
    /// Cycle edges in walk order; `edges[0]` is the `t = 1` edge.
    pub edges: Vec<PgEdge>,
    /// `modules[j]` is the source module of `edges[j]`.
    pub modules: Vec<ModuleId>,
}

impl CycleInfo {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Two cycles of the production graph share `module`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SharedCycleVertex {
    pub module: ModuleId,
    pub first: PgEdge,
    pub second: PgEdge,
}

/// Finds every cycle of the production graph, or the first module shared by
/// two cycles. Strict linearity forces each non-trivial strongly connected
/// component to be a single simple cycle, so that is what gets checked.
pub fn check_strictly_linear_recursive(
    pg: &ProductionGraph,
) -> Result<Vec<CycleInfo>, SharedCycleVertex> {
    use petgraph::graph::{DiGraph, NodeIndex};

    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(pg.num_modules, pg.edges.len());
    for _ in 0..pg.num_modules {
        g.add_node(());
    }
    for e in &pg.edges {
        g.add_edge(NodeIndex::new(e.from.index()), NodeIndex::new(e.to.index()), ());
    }
    let mut comp = vec![usize::MAX; pg.num_modules];
    for (c, scc) in petgraph::algo::tarjan_scc(&g).iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }

    let mut out_edge: Vec<Option<PgEdge>> = vec![None; pg.num_modules];
    let mut in_edge: Vec<Option<PgEdge>> = vec![None; pg.num_modules];
    let mut sorted = pg.edges.clone();
    sorted.sort();
    for e in &sorted {
        if comp[e.from.index()] != comp[e.to.index()] {
            continue;
        }
        if let Some(prev) = out_edge[e.from.index()] {
            return Err(SharedCycleVertex {
                module: e.from,
                first: prev,
                second: *e,
            });
        }
        out_edge[e.from.index()] = Some(*e);
        if let Some(prev) = in_edge[e.to.index()] {
            return Err(SharedCycleVertex {
                module: e.to,
                first: prev,
                second: *e,
            });
        }
        in_edge[e.to.index()] = Some(*e);
    }

    // Every module with an internal out-edge lies on exactly one simple cycle.
    let mut seen = vec![false; pg.num_modules];
    let mut cycles = Vec::new();
    for e in &sorted {
        if out_edge[e.from.index()] != Some(*e) || seen[e.from.index()] {
            continue;
        }
        let mut walk = vec![*e];
        seen[e.from.index()] = true;
        let mut cur = e.to;
        while cur != e.from {
            seen[cur.index()] = true;
            let next = out_edge[cur.index()].expect("strongly connected member has an out-edge");
            walk.push(next);
            cur = next.to;
        }
        // `sorted` is visited in (k,i) order, so the first edge seen on each
        // cycle is its smallest one.
        let modules = walk.iter().map(|e| e.from).collect();
        cycles.push(CycleInfo {
            index: 0,
            edges: walk,
            modules,
        });
    }
    // Number cycles by their smallest production index; the first edge is the
    // smallest (k,i), which is already the walk start.
    cycles.sort_by_key(|c| c.edges.iter().map(|e| e.k).min());
    for (s, c) in cycles.iter_mut().enumerate() {
        c.index = s as u32 + 1;
    }
    Ok(cycles)
}

/// Where a module sits on its cycle: 0-based cycle index and 0-based offset
/// of the cycle edge leaving the module.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct CyclePos {
    pub cycle: usize,
    pub offset: usize,
}

/// Cycle metadata of a production that continues a recursion: it belongs to
/// cycle `cycle` at edge `offset`, and its right-hand side holds the next
/// cycle module at 0-based position `cont`.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct CycleStep {
    pub cycle: usize,
    pub offset: usize,
    pub cont: usize,
}

/// Module-level reachability inside one right-hand side (paths of length ≥ 1).
#[derive(Clone, Debug)]
pub struct RhsReach {
    n: usize,
    bits: Vec<bool>,
}

impl RhsReach {
    fn new(rhs: &SimpleWorkflow) -> Self {
        let n = rhs.len();
        let mut bits = vec![false; n * n];
        let mut succ = vec![Vec::new(); n];
        for e in &rhs.edges {
            succ[e.src].push(e.dst);
        }
        // Positions are topologically ordered, so sweep from the back.
        for i in (0..n).rev() {
            for &j in &succ[i] {
                bits[i * n + j] = true;
                for x in 0..n {
                    if bits[j * n + x] {
                        bits[i * n + x] = true;
                    }
                }
            }
        }
        RhsReach { n, bits }
    }

    /// Whether 0-based position `i` reaches position `j`.
    pub fn reaches(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }
}

/// A validated, strictly linear-recursive specification with its derived
/// numbering. Immutable; share freely.
#[derive(Clone, Debug)]
pub struct Grammar {
    spec: WorkflowSpec,
    graph: ProductionGraph,
    cycles: Vec<CycleInfo>,
    module_cycle: Vec<Option<CyclePos>>,
    prod_cycle: Vec<Option<CycleStep>>,
    prods_by_lhs: Vec<Vec<usize>>,
    reach: Vec<RhsReach>,
}

impl Grammar {
    pub fn new(spec: WorkflowSpec) -> Result<Grammar, ValidationReport> {
        let report = spec.validate();
        if !report.is_ok() {
            return Err(report);
        }
        let graph = build_production_graph(&spec);
        let cycles = check_strictly_linear_recursive(&graph)
            .expect("validation rejects non strictly linear-recursive specs");
        let mut module_cycle = vec![None; spec.modules.len()];
        let mut prod_cycle = vec![None; spec.productions.len()];
        for (s, c) in cycles.iter().enumerate() {
            for (t, e) in c.edges.iter().enumerate() {
                module_cycle[e.from.index()] = Some(CyclePos { cycle: s, offset: t });
                prod_cycle[e.k as usize - 1] = Some(CycleStep {
                    cycle: s,
                    offset: t,
                    cont: e.i as usize - 1,
                });
            }
        }
        let mut prods_by_lhs = vec![Vec::new(); spec.modules.len()];
        for (k0, p) in spec.productions.iter().enumerate() {
            prods_by_lhs[p.lhs.index()].push(k0);
        }
        let reach = spec.productions.iter().map(|p| RhsReach::new(&p.rhs)).collect();
        Ok(Grammar {
            spec,
            graph,
            cycles,
            module_cycle,
            prod_cycle,
            prods_by_lhs,
            reach,
        })
    }

    pub fn spec(&self) -> &WorkflowSpec {
        &self.spec
    }

    pub fn production_graph(&self) -> &ProductionGraph {
        &self.graph
    }

    pub fn cycles(&self) -> &[CycleInfo] {
        &self.cycles
    }

    /// Production by 1-based index.
    pub fn production(&self, k: u32) -> Option<&Production> {
        self.spec.productions.get((k as usize).wrapping_sub(1))
    }

    pub fn num_productions(&self) -> usize {
        self.spec.productions.len()
    }

    /// 0-based production indices whose left-hand side is `m`.
    pub fn productions_of(&self, m: ModuleId) -> &[usize] {
        &self.prods_by_lhs[m.index()]
    }

    pub fn module_cycle(&self, m: ModuleId) -> Option<CyclePos> {
        self.module_cycle[m.index()]
    }

    /// Cycle step of the 0-based production `k0`, if it continues a recursion.
    pub fn cycle_step(&self, k0: usize) -> Option<CycleStep> {
        self.prod_cycle[k0]
    }

    /// Module-level reachability inside the right-hand side of 0-based
    /// production `k0`.
    pub fn rhs_reach(&self, k0: usize) -> &RhsReach {
        &self.reach[k0]
    }

    pub fn size(&self) -> usize {
        self.spec.size()
    }

    /// Upper bound on the depth of any compressed parse tree: each composite
    /// module contributes at most one execution level plus one recursive
    /// node level.
    pub fn depth_bound(&self) -> usize {
        let composites = self
            .spec
            .modules
            .iter()
            .filter(|m| m.kind == ModuleKind::Composite)
            .count();
        2 * composites + 1
    }
}

impl fmt::Display for PgEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.i)
    }
}

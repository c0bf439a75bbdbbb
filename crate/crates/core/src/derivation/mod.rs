//! Derivations of workflow runs and their compressed-parse-tree labels.

mod io;
mod label;
mod random;
mod state;

pub use io::{deserialize_run, serialize_run, RunParseError};
pub use label::{lcp_split, LabelEntry, LabelParseError, NodeLabel};
pub use random::{random_run, RandomRun, RunConfig};
pub use state::{DerivationError, DerivationState};

use crate::grammar::{ModuleId, TagId};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RunNode {
    pub module: ModuleId,
    pub occ: u32,
    pub label: NodeLabel,
}

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct RunEdge {
    pub src: u32,
    pub dst: u32,
    pub tag: TagId,
}

/// A fully derived run: atomic nodes with labels, and tagged edges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Run {
    pub spec_name: String,
    pub seed: u64,
    module_names: Vec<String>,
    tag_names: Vec<String>,
    nodes: Vec<RunNode>,
    edges: Vec<RunEdge>,
    succ_start: Vec<u32>,
    succ: Vec<(u32, TagId)>,
}

impl Run {
    pub fn new(
        spec_name: String,
        seed: u64,
        module_names: Vec<String>,
        tag_names: Vec<String>,
        nodes: Vec<RunNode>,
        edges: Vec<RunEdge>,
    ) -> Run {
        let n = nodes.len();
        let mut succ_start = vec![0u32; n + 1];
        for e in &edges {
            succ_start[e.src as usize + 1] += 1;
        }
        for i in 0..n {
            succ_start[i + 1] += succ_start[i];
        }
        let mut fill = succ_start.clone();
        let mut succ = vec![(0, TagId(0)); edges.len()];
        for e in &edges {
            let slot = &mut fill[e.src as usize];
            succ[*slot as usize] = (e.dst, e.tag);
            *slot += 1;
        }
        Run {
            spec_name,
            seed,
            module_names,
            tag_names,
            nodes,
            edges,
            succ_start,
            succ,
        }
    }

    pub fn nodes(&self) -> &[RunNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RunEdge] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn module_names(&self) -> &[String] {
        &self.module_names
    }

    pub fn label(&self, id: u32) -> &NodeLabel {
        &self.nodes[id as usize].label
    }

    pub fn successors(&self, id: u32) -> &[(u32, TagId)] {
        &self.succ[self.succ_start[id as usize] as usize..self.succ_start[id as usize + 1] as usize]
    }

    pub fn node_name(&self, id: u32) -> &str {
        &self.module_names[self.nodes[id as usize].module.index()]
    }

    /// `name:occ`.
    pub fn display_name(&self, id: u32) -> String {
        format!("{}:{}", self.node_name(id), self.nodes[id as usize].occ)
    }

    pub fn find(&self, name: &str, occ: u32) -> Option<u32> {
        self.nodes
            .iter()
            .position(|n| n.occ == occ && self.module_names[n.module.index()] == name)
            .map(|p| p as u32)
    }

    /// Resolves a `NAME:OCC` reference.
    pub fn resolve(&self, reference: &str) -> Option<u32> {
        let (name, occ) = reference.trim().rsplit_once(':')?;
        self.find(name, occ.parse().ok()?)
    }

    /// Kahn order, or `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<u32>> {
        let n = self.nodes.len();
        let mut indeg = vec![0u32; n];
        for e in &self.edges {
            indeg[e.dst as usize] += 1;
        }
        let mut order: Vec<u32> = (0..n as u32).filter(|&v| indeg[v as usize] == 0).collect();
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &(w, _) in self.successors(v) {
                indeg[w as usize] -= 1;
                if indeg[w as usize] == 0 {
                    order.push(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Nodes without incoming edges, then nodes without outgoing edges.
    pub fn sources_and_sinks(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.nodes.len();
        let mut has_in = vec![false; n];
        for e in &self.edges {
            has_in[e.dst as usize] = true;
        }
        let sources = (0..n as u32).filter(|&v| !has_in[v as usize]).collect();
        let sinks = (0..n as u32).filter(|&v| self.successors(v).is_empty()).collect();
        (sources, sinks)
    }
}

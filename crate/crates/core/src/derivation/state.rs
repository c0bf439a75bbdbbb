use thiserror::Error;

use super::{LabelEntry, NodeLabel, Run, RunEdge, RunNode};
use crate::grammar::{Grammar, ModuleId, TagId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DerivationError {
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error("node {0} is not a composite frontier node")]
    NotFrontier(u32),
    #[error("unknown production {0}")]
    UnknownProduction(u32),
    #[error("production {k} rewrites {expected}, not {got}")]
    LhsMismatch { k: u32, expected: String, got: String },
    #[error("derivation incomplete: {0} composite nodes remain")]
    Incomplete(usize),
}

/// Bookkeeping for a composite node created as the continuation of a
/// recursion: it will become child `m + 1` of the recursive node whose label
/// is its own label minus the last entry.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(super) struct Continuation {
    pub cycle: u32,
    pub t: u32,
    pub m: u32,
    pub budget: u64,
}

#[derive(Clone, Debug)]
pub(super) struct StateNode {
    pub module: ModuleId,
    pub occ: u32,
    pub label: NodeLabel,
    pub tree: u32,
    pub cont: Option<Continuation>,
    pub frontier_slot: Option<usize>,
    pub replaced: bool,
}

#[derive(Copy, Clone, Debug)]
pub(super) struct TreeNode {
    pub parent: u32,
    pub entry: Option<LabelEntry>,
}

const NO_PARENT: u32 = u32::MAX;

/// A run under construction: the current graph, its frontier of composite
/// nodes, and the compressed parse tree that labels every created node.
#[derive(Clone, Debug)]
pub struct DerivationState<'g> {
    grammar: &'g Grammar,
    pub(super) nodes: Vec<StateNode>,
    edges: Vec<(u32, u32, TagId)>,
    out_edges: Vec<Vec<u32>>,
    in_edges: Vec<Vec<u32>>,
    pub(super) frontier: Vec<u32>,
    occ: Vec<u32>,
    tree: Vec<TreeNode>,
}

impl<'g> DerivationState<'g> {
    /// A single composite node named after the start module.
    pub fn init(grammar: &'g Grammar) -> Self {
        let spec = grammar.spec();
        let mut st = DerivationState {
            grammar,
            nodes: Vec::new(),
            edges: Vec::new(),
            out_edges: Vec::new(),
            in_edges: Vec::new(),
            frontier: Vec::new(),
            occ: vec![0; spec.modules.len()],
            tree: vec![TreeNode {
                parent: NO_PARENT,
                entry: None,
            }],
        };
        st.add_node(spec.start, NodeLabel::default(), 0, None);
        st
    }

    pub fn grammar(&self) -> &'g Grammar {
        self.grammar
    }

    fn add_node(
        &mut self,
        module: ModuleId,
        label: NodeLabel,
        tree: u32,
        cont: Option<Continuation>,
    ) -> u32 {
        let id = self.nodes.len() as u32;
        self.occ[module.index()] += 1;
        let frontier_slot = if self.grammar.spec().is_composite(module) {
            self.frontier.push(id);
            Some(self.frontier.len() - 1)
        } else {
            None
        };
        self.nodes.push(StateNode {
            module,
            occ: self.occ[module.index()],
            label,
            tree,
            cont,
            frontier_slot,
            replaced: false,
        });
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        id
    }

    fn add_tree_node(&mut self, parent: u32, entry: LabelEntry) -> u32 {
        self.tree.push(TreeNode {
            parent,
            entry: Some(entry),
        });
        self.tree.len() as u32 - 1
    }

    fn remove_from_frontier(&mut self, id: u32) {
        let slot = self.nodes[id as usize].frontier_slot.take().expect("frontier node");
        self.frontier.swap_remove(slot);
        if let Some(&moved) = self.frontier.get(slot) {
            self.nodes[moved as usize].frontier_slot = Some(slot);
        }
    }

    /// Composite nodes still awaiting replacement.
    pub fn frontier(&self) -> &[u32] {
        &self.frontier
    }

    pub fn is_complete(&self) -> bool {
        self.frontier.is_empty()
    }

    /// Number of edges in the current graph.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn module_of(&self, id: u32) -> ModuleId {
        self.nodes[id as usize].module
    }

    pub fn label_of(&self, id: u32) -> &NodeLabel {
        &self.nodes[id as usize].label
    }

    /// Finds a live node by module name and occurrence number.
    pub fn find(&self, name: &str, occ: u32) -> Option<u32> {
        let m = self.grammar.spec().module_id(name)?;
        self.nodes
            .iter()
            .position(|n| n.module == m && n.occ == occ && !n.replaced)
            .map(|p| p as u32)
    }

    /// Current edges as `(src, dst, tag)` over state-internal node ids.
    pub fn edges(&self) -> &[(u32, u32, TagId)] {
        &self.edges
    }

    /// Replaces composite node `id` by the right-hand side of production `k`
    /// (1-based). Returns the ids of the created nodes in position order.
    pub fn fire(&mut self, id: u32, k: u32) -> Result<Vec<u32>, DerivationError> {
        self.fire_with_budget(id, k, 0)
    }

    /// Like [`fire`](Self::fire); when this starts a new recursion, the
    /// continuation child carries `budget - 1` further unfoldings.
    pub(super) fn fire_with_budget(
        &mut self,
        id: u32,
        k: u32,
        budget: u64,
    ) -> Result<Vec<u32>, DerivationError> {
        let grammar = self.grammar;
        let spec = grammar.spec();
        let node = self
            .nodes
            .get(id as usize)
            .ok_or(DerivationError::UnknownNode(id))?;
        if node.frontier_slot.is_none() {
            return Err(DerivationError::NotFrontier(id));
        }
        let prod = grammar
            .production(k)
            .ok_or(DerivationError::UnknownProduction(k))?;
        if prod.lhs != node.module {
            return Err(DerivationError::LhsMismatch {
                k,
                expected: spec.module_name(prod.lhs).to_string(),
                got: spec.module_name(node.module).to_string(),
            });
        }
        let k0 = k as usize - 1;
        let mut parent_label = node.label.clone();
        let mut parent_tree = node.tree;
        let cont_in = node.cont;
        let step = grammar.cycle_step(k0);

        // Where the continuation child goes, if this firing unfolds a cycle.
        let mut cont_child: Option<(usize, NodeLabel, u32, Continuation)> = None;
        if let Some(step) = step {
            let s = step.cycle as u32 + 1;
            match cont_in {
                Some(c) if c.cycle == step.cycle as u32 => {
                    let rec_tree = self.tree[parent_tree as usize].parent;
                    let mut lab = parent_label.0[..parent_label.len() - 1].to_vec();
                    lab.push(LabelEntry::Rec { s, t: c.t, i: c.m + 1 });
                    cont_child = Some((
                        step.cont,
                        NodeLabel(lab),
                        rec_tree,
                        Continuation {
                            cycle: c.cycle,
                            t: c.t,
                            m: c.m + 1,
                            budget: c.budget.saturating_sub(1),
                        },
                    ));
                }
                _ => {
                    // Insert a recursive node in this node's slot.
                    let t = step.offset as u32 + 1;
                    let slot = self.tree[parent_tree as usize];
                    self.tree.push(slot);
                    let rec_tree = self.tree.len() as u32 - 1;
                    self.tree[parent_tree as usize] = TreeNode {
                        parent: rec_tree,
                        entry: Some(LabelEntry::Rec { s, t, i: 1 }),
                    };
                    let mut lab = parent_label.0.clone();
                    lab.push(LabelEntry::Rec { s, t, i: 2 });
                    parent_label.0.push(LabelEntry::Rec { s, t, i: 1 });
                    self.nodes[id as usize].label = parent_label.clone();
                    cont_child = Some((
                        step.cont,
                        NodeLabel(lab),
                        rec_tree,
                        Continuation {
                            cycle: step.cycle as u32,
                            t,
                            m: 2,
                            budget: budget.saturating_sub(1),
                        },
                    ));
                }
            }
        }
        parent_tree = self.nodes[id as usize].tree;

        self.remove_from_frontier(id);
        self.nodes[id as usize].replaced = true;

        let rhs = &prod.rhs;
        let mut created = Vec::with_capacity(rhs.len());
        for (j, &m) in rhs.nodes.iter().enumerate() {
            let new_id = match &cont_child {
                Some((p, lab, rec_tree, c)) if *p == j => {
                    let entry = *lab.0.last().expect("continuation label is non-empty");
                    let tn = self.add_tree_node(*rec_tree, entry);
                    self.add_node(m, lab.clone(), tn, Some(*c))
                }
                _ => {
                    let entry = LabelEntry::Prod {
                        k,
                        i: j as u32 + 1,
                    };
                    let tn = self.add_tree_node(parent_tree, entry);
                    let mut lab = parent_label.0.clone();
                    lab.push(entry);
                    self.add_node(m, NodeLabel(lab), tn, None)
                }
            };
            created.push(new_id);
        }

        let source = created[rhs.source];
        let sink = created[rhs.sink];
        for e in std::mem::take(&mut self.in_edges[id as usize]) {
            self.edges[e as usize].1 = source;
            self.in_edges[source as usize].push(e);
        }
        for e in std::mem::take(&mut self.out_edges[id as usize]) {
            self.edges[e as usize].0 = sink;
            self.out_edges[sink as usize].push(e);
        }
        for e in &rhs.edges {
            let (a, b) = (created[e.src], created[e.dst]);
            let eid = self.edges.len() as u32;
            self.edges.push((a, b, e.tag));
            self.out_edges[a as usize].push(eid);
            self.in_edges[b as usize].push(eid);
        }
        Ok(created)
    }

    /// Recomputes a node's label by walking the parse tree to the root.
    pub fn label_from_tree(&self, id: u32) -> NodeLabel {
        let mut entries = Vec::new();
        let mut t = self.nodes[id as usize].tree;
        while t != NO_PARENT {
            let tn = self.tree[t as usize];
            if let Some(e) = tn.entry {
                entries.push(e);
            }
            t = tn.parent;
        }
        entries.reverse();
        NodeLabel(entries)
    }

    /// Budget bookkeeping for random derivations.
    pub(super) fn continuation(&self, id: u32) -> Option<Continuation> {
        self.nodes[id as usize].cont
    }

    /// The finished run: atomic nodes renumbered densely in creation order.
    pub fn finish(&self, seed: u64) -> Result<Run, DerivationError> {
        if !self.frontier.is_empty() {
            return Err(DerivationError::Incomplete(self.frontier.len()));
        }
        let spec = self.grammar.spec();
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.replaced {
                continue;
            }
            remap[i] = nodes.len() as u32;
            nodes.push(RunNode {
                module: n.module,
                occ: n.occ,
                label: n.label.clone(),
            });
        }
        let edges = self
            .edges
            .iter()
            .map(|&(a, b, tag)| RunEdge {
                src: remap[a as usize],
                dst: remap[b as usize],
                tag,
            })
            .collect();
        Ok(Run::new(
            spec.name.clone(),
            seed,
            spec.modules.iter().map(|m| m.name.clone()).collect(),
            spec.tags.clone(),
            nodes,
            edges,
        ))
    }
}

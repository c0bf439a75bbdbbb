use std::fmt::Write as _;

use thiserror::Error;

use super::{NodeLabel, Run, RunEdge, RunNode};
use crate::grammar::WorkflowSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct RunParseError {
    pub line: usize,
    pub message: String,
}

/// Writes `run <spec> <seed>`, then one `node` line per node and one `edge`
/// line per edge.
pub fn serialize_run(run: &Run) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run {} {}", run.spec_name, run.seed);
    for (id, n) in run.nodes().iter().enumerate() {
        let _ = writeln!(
            out,
            "node {id} {} {} {}",
            run.module_names()[n.module.index()],
            n.occ,
            n.label
        );
    }
    for e in run.edges() {
        let _ = writeln!(
            out,
            "edge {} {} {}",
            e.src,
            e.dst,
            run.tag_names()[e.tag.index()]
        );
    }
    out
}

pub fn deserialize_run(text: &str, spec: &WorkflowSpec) -> Result<Run, RunParseError> {
    let err = |line: usize, message: String| RunParseError { line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty run: missing `run` header".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (spec_name, seed) = match h[..] {
        ["run", name, seed] => (
            name.to_string(),
            seed.parse::<u64>()
                .map_err(|_| err(hl, format!("invalid seed `{seed}`")))?,
        ),
        _ => return Err(err(hl, "expected `run <specName> <seed>`".into())),
    };
    if spec_name != spec.name {
        return Err(err(
            hl,
            format!("run belongs to spec `{spec_name}`, not `{}`", spec.name),
        ));
    }
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[..] {
            ["node", id, name, occ, label] => {
                if !edges.is_empty() {
                    return Err(err(ln, "node line after edge lines".into()));
                }
                let id: usize = id
                    .parse()
                    .map_err(|_| err(ln, format!("invalid node id `{id}`")))?;
                if id != nodes.len() {
                    return Err(err(ln, format!("node id {id} out of order")));
                }
                let module = spec
                    .module_id(name)
                    .ok_or_else(|| err(ln, format!("unknown module `{name}`")))?;
                let occ = occ
                    .parse()
                    .map_err(|_| err(ln, format!("invalid occurrence `{occ}`")))?;
                let label: NodeLabel = label.parse().map_err(|e| err(ln, format!("{e}")))?;
                nodes.push(RunNode { module, occ, label });
            }
            ["edge", src, dst, tag] => {
                let parse_id = |s: &str| -> Result<u32, RunParseError> {
                    let v: u32 = s
                        .parse()
                        .map_err(|_| err(ln, format!("invalid node id `{s}`")))?;
                    if v as usize >= nodes.len() {
                        return Err(err(ln, format!("edge endpoint {v} is not a node")));
                    }
                    Ok(v)
                };
                let tag = spec
                    .tag_id(tag)
                    .ok_or_else(|| err(ln, format!("unknown tag `{tag}`")))?;
                edges.push(RunEdge {
                    src: parse_id(src)?,
                    dst: parse_id(dst)?,
                    tag,
                });
            }
            _ => return Err(err(ln, format!("unrecognized line `{line}`"))),
        }
    }
    if nodes.is_empty() {
        return Err(err(hl, "empty run: no nodes".into()));
    }
    Ok(Run::new(
        spec_name,
        seed,
        spec.modules.iter().map(|m| m.name.clone()).collect(),
        spec.tags.clone(),
        nodes,
        edges,
    ))
}

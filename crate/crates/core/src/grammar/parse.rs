//! Line-based spec file format:
//!
//! ```text
//! spec <name>
//! start <Symbol>
//! prod <k> <Lhs>
//!   node <pos> <Symbol>
//!   edge <srcPos> <dstPos> <tag>
//!   source <pos>
//!   sink <pos>
//! end
//! ```
//!
//! Productions and nodes are numbered from 1 in file order. Blank lines and
//! `#` comments are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{SpecBuilder, WorkflowSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

struct PendingProd {
    line: usize,
    lhs: String,
    nodes: Vec<String>,
    edges: Vec<(usize, usize, String)>,
    source: Option<usize>,
    sink: Option<usize>,
}

fn parse_index(tok: Option<&str>, line: usize, what: &str) -> Result<usize, ParseError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse::<usize>()
        .map_err(|_| err(line, format!("invalid {what} `{tok}`")))
}

fn ident<'a>(tok: Option<&'a str>, line: usize, what: &str) -> Result<&'a str, ParseError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    let mut chars = tok.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return Err(err(line, format!("invalid {what} `{tok}`")));
    }
    Ok(tok)
}

pub fn parse_spec(text: &str) -> Result<WorkflowSpec, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing spec header"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("spec") {
        return Err(err(hline, "missing spec header"));
    }
    let name = ident(toks.next(), hline, "spec name")?;
    if toks.next().is_some() {
        return Err(err(hline, "trailing tokens after spec name"));
    }
    let mut builder = SpecBuilder::new(name);
    let mut have_start = false;
    let mut current: Option<PendingProd> = None;
    let mut nprods = 0usize;

    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        let kw = toks.next().unwrap_or_default();
        match (kw, current.as_mut()) {
            ("start", None) => {
                if have_start {
                    return Err(err(ln, "duplicate start line"));
                }
                builder.start(ident(toks.next(), ln, "start symbol")?);
                have_start = true;
            }
            ("prod", None) => {
                if !have_start {
                    return Err(err(ln, "production before start line"));
                }
                let k = parse_index(toks.next(), ln, "production index")?;
                if k != nprods + 1 {
                    return Err(err(
                        ln,
                        format!("production index {k} out of order, expected {}", nprods + 1),
                    ));
                }
                let lhs = ident(toks.next(), ln, "left-hand side")?.to_string();
                current = Some(PendingProd {
                    line: ln,
                    lhs,
                    nodes: Vec::new(),
                    edges: Vec::new(),
                    source: None,
                    sink: None,
                });
            }
            ("node", Some(p)) => {
                let pos = parse_index(toks.next(), ln, "node position")?;
                if pos != p.nodes.len() + 1 {
                    return Err(err(
                        ln,
                        format!("node position {pos} out of order, expected {}", p.nodes.len() + 1),
                    ));
                }
                p.nodes.push(ident(toks.next(), ln, "module symbol")?.to_string());
            }
            ("edge", Some(p)) => {
                let src = parse_index(toks.next(), ln, "edge source")?;
                let dst = parse_index(toks.next(), ln, "edge target")?;
                let tag = ident(toks.next(), ln, "edge tag")?.to_string();
                for pos in [src, dst] {
                    if pos == 0 || pos > p.nodes.len() {
                        return Err(err(ln, format!("edge endpoint {pos} is not a declared node")));
                    }
                }
                p.edges.push((src - 1, dst - 1, tag));
            }
            ("source", Some(p)) | ("sink", Some(p)) => {
                let pos = parse_index(toks.next(), ln, kw)?;
                if pos == 0 || pos > p.nodes.len() {
                    return Err(err(ln, format!("{kw} {pos} is not a declared node")));
                }
                let slot = if kw == "source" { &mut p.source } else { &mut p.sink };
                if slot.replace(pos - 1).is_some() {
                    return Err(err(ln, format!("duplicate {kw} line")));
                }
            }
            ("end", Some(_)) => {
                let p = current.take().expect("matched Some");
                let source = p
                    .source
                    .ok_or_else(|| err(ln, format!("production {} has no source", nprods + 1)))?;
                let sink = p
                    .sink
                    .ok_or_else(|| err(ln, format!("production {} has no sink", nprods + 1)))?;
                if p.nodes.is_empty() {
                    return Err(err(p.line, "production without nodes"));
                }
                let nodes: Vec<&str> = p.nodes.iter().map(String::as_str).collect();
                let edges: Vec<(usize, usize, &str)> =
                    p.edges.iter().map(|(s, d, t)| (*s, *d, t.as_str())).collect();
                builder.production(&p.lhs, &nodes, &edges, source, sink);
                nprods += 1;
            }
            (_, None) => return Err(err(ln, format!("unexpected `{kw}` outside a production"))),
            (_, Some(_)) => return Err(err(ln, format!("unexpected `{kw}` inside a production"))),
        }
        if toks.next().is_some() {
            return Err(err(ln, "trailing tokens"));
        }
    }
    if let Some(p) = current {
        return Err(err(p.line, "production is missing its `end` line"));
    }
    if !have_start {
        return Err(err(hline, "missing start line"));
    }
    Ok(builder.build())
}

pub fn write_spec(spec: &WorkflowSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "spec {}", spec.name);
    let _ = writeln!(out, "start {}", spec.module_name(spec.start));
    for (k0, p) in spec.productions.iter().enumerate() {
        let _ = writeln!(out, "prod {} {}", k0 + 1, spec.module_name(p.lhs));
        for (i, m) in p.rhs.nodes.iter().enumerate() {
            let _ = writeln!(out, "  node {} {}", i + 1, spec.module_name(*m));
        }
        for e in &p.rhs.edges {
            let _ = writeln!(
                out,
                "  edge {} {} {}",
                e.src + 1,
                e.dst + 1,
                spec.tag_name(e.tag)
            );
        }
        let _ = writeln!(out, "  source {}", p.rhs.source + 1);
        let _ = writeln!(out, "  sink {}", p.rhs.sink + 1);
        let _ = writeln!(out, "end");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn paper_text_parses_to_fixture_value() {
        let spec = parse_spec(fixtures::PAPER_SPEC).unwrap();
        assert_eq!(spec, fixtures::paper_spec());
        assert_eq!(spec.productions.len(), 4);
        assert_eq!(spec.size(), 5 + 4 + 3 + 3);
    }

    #[test]
    fn empty_file_is_missing_header() {
        let e = parse_spec("").unwrap_err();
        assert!(e.to_string().contains("missing spec header"));
        let e = parse_spec("\n  # only a comment\n").unwrap_err();
        assert!(e.message.contains("missing spec header"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "spec x\nstart S\nprod 1 S\n  node 1 a\n  edge 1 3 t\nend\n";
        let e = parse_spec(text).unwrap_err();
        assert_eq!(e.line, 5);
        let e = parse_spec("spec x\nstart S\nprod 2 S\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_spec("spec x\nstart S\nprod 1 S\n  node 1 a\n  source 1\n  sink 1\n").unwrap_err();
        assert!(e.message.contains("end"));
    }

    #[test]
    fn write_then_parse_is_identity_on_fixture() {
        let spec = fixtures::paper_spec();
        let text = write_spec(&spec);
        assert_eq!(parse_spec(&text).unwrap(), spec);
    }

    #[test]
    fn write_normalizes_whitespace_and_comments() {
        let messy = "# header comment\nspec   t\nstart S\n\nprod 1 S   # the only one\n node 1 a\n    node 2 b\n edge 1 2 a\nsource 1\nsink 2\nend\n";
        let normalized = write_spec(&parse_spec(messy).unwrap());
        assert_eq!(
            normalized,
            "spec t\nstart S\nprod 1 S\n  node 1 a\n  node 2 b\n  edge 1 2 a\n  source 1\n  sink 2\nend\n"
        );
        assert_eq!(write_spec(&parse_spec(&normalized).unwrap()), normalized);
    }
}

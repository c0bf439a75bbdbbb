//! WebAssembly bindings behind `www/index.html`: a grammar and one of its
//! runs are held in a [`Playground`], and the page asks it for safety
//! reports, pairwise answers and all-pairs results.

use provq_core::decoder::answer_pairwise;
use provq_core::derivation::{random_run, serialize_run, Run, RunConfig};
use provq_core::fixtures::{paper_grammar, paper_run};
use provq_core::general::{eval_general, GeneralOptions, TagIndex};
use provq_core::grammar::{parse_spec, write_spec, Grammar};
use provq_core::intersection::{tables_for_query, DecodeTables};
use provq_core::regex::{parse_regex, Regex};
use provq_core::safety::is_safe_query;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Playground {
    grammar: Grammar,
    run: Run,
}

fn query(text: &str) -> Result<Regex, String> {
    parse_regex(text).map_err(|e| format!("query: {e}"))
}

#[wasm_bindgen]
impl Playground {
    /// The bundled example grammar with its example run.
    pub fn bundled() -> Playground {
        let grammar = paper_grammar();
        let run = paper_run(&grammar);
        Playground { grammar, run }
    }

    /// Parses a spec and derives a small run from it.
    #[wasm_bindgen(constructor)]
    pub fn new(spec_text: &str) -> Result<Playground, String> {
        let spec = parse_spec(spec_text).map_err(|e| e.to_string())?;
        let grammar = Grammar::new(spec).map_err(|r| r.to_string())?;
        let run = random_run(&grammar, &RunConfig::new(20, 1, 0.5)).run;
        Ok(Playground { grammar, run })
    }

    pub fn spec_text(&self) -> String {
        write_spec(self.grammar.spec())
    }

    pub fn run_text(&self) -> String {
        serialize_run(&self.run)
    }

    pub fn num_nodes(&self) -> usize {
        self.run.num_nodes()
    }

    pub fn num_edges(&self) -> usize {
        self.run.num_edges()
    }

    /// Node names as `NAME:OCC`, in run order.
    pub fn node_names(&self) -> Vec<String> {
        (0..self.run.num_nodes() as u32).map(|u| self.run.display_name(u)).collect()
    }

    /// Replaces the current run by a random one of roughly `edges` edges.
    pub fn generate(&mut self, edges: usize, seed: u32) -> String {
        let out = random_run(&self.grammar, &RunConfig::new(edges.max(1), seed as u64, 0.5));
        self.run = out.run;
        let mut msg = format!("{} nodes, {} edges", self.run.num_nodes(), self.run.num_edges());
        if let Some(w) = out.warning {
            msg.push_str(&format!(" ({w})"));
        }
        msg
    }

    /// The minimal DFA of the query followed by the safety report.
    pub fn safety(&self, text: &str) -> Result<String, String> {
        let q = query(text)?;
        let spec = self.grammar.spec();
        let (_, report, dfa) = is_safe_query(spec, &q);
        Ok(format!("{}\n{}", dfa.describe(&spec.tags), report.render(spec)))
    }

    /// Answers one pair from the two node labels alone.
    pub fn pairwise(&self, text: &str, u: &str, v: &str) -> Result<bool, String> {
        let tables = self.tables(text)?;
        let node = |r: &str| self.run.resolve(r).ok_or_else(|| format!("no node {r} in run"));
        let (u, v) = (node(u)?, node(v)?);
        answer_pairwise(self.run.label(u).entries(), self.run.label(v).entries(), &tables).map_err(|e| e.to_string())
    }

    /// Every answer pair as `u -> v` lines, at most `limit` of them, after a
    /// count line. Unsafe queries fall back to relational evaluation.
    pub fn all_pairs(&self, text: &str, limit: usize) -> Result<String, String> {
        let q = query(text)?;
        let index = TagIndex::build(&self.run);
        let rel = eval_general(&q, &self.run, &self.grammar, &index, GeneralOptions { narrowing: true })
            .map_err(|e| e.to_string())?;
        let pairs = rel.named(&self.run);
        let mut out = format!("{} pairs\n", pairs.len());
        for (u, v) in pairs.iter().take(limit) {
            out.push_str(&format!("{u} -> {v}\n"));
        }
        if pairs.len() > limit {
            out.push_str("...\n");
        }
        Ok(out)
    }
}

impl Playground {
    fn tables(&self, text: &str) -> Result<DecodeTables, String> {
        tables_for_query(&self.grammar, &query(text)?).map_err(|e| e.to_string())
    }
}

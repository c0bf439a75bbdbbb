//! Benchmark harness: experiment families over synthetic specs, runs and
//! queries, reported as CSV rows with median timings.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::allpairs::{answer_all_pairs, nested_loop_all_pairs, LabelTree};
use crate::decoder::answer_pairwise;
use crate::derivation::{random_run, Run, RunConfig};
use crate::general::{dfs_pair, eval_general, eval_ifq, eval_join_tree, run_dfa, GeneralOptions, TagIndex};
use crate::grammar::{Grammar, WorkflowSpec};
use crate::intersection::{reach_tables, tables_for_query, DecodeTables};
use crate::regex::{ifq, match_ifq, Regex};
use crate::safety::is_safe_query;
use crate::synth::{fork_run, fork_spec, gen_queries, gen_safe_queries, gen_synthetic_spec, QueryKind, SynthParams, FORK_EDGES_PER_LEVEL};

pub const CSV_HEADER: &str =
    "experiment,seed,specSize,runEdges,querySize,strategy,resultSize,medianMicros,reps";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    pub experiment: String,
    pub seed: u64,
    pub spec_size: usize,
    pub run_edges: usize,
    pub query_size: usize,
    pub strategy: String,
    /// Empty for rows that carry no result.
    pub result_size: String,
    pub median_micros: String,
    pub reps: usize,
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.seed,
            self.spec_size,
            self.run_edges,
            self.query_size,
            self.strategy,
            self.result_size,
            self.median_micros,
            self.reps
        )
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// Safety check and table cost against spec size and IFQ length.
    Overhead,
    /// Pairwise decoding against run size and query length, with a search
    /// baseline.
    Pairwise,
    /// All-pairs strategies on IFQs and on `a*` over fork runs.
    AllPairs,
    /// Hybrid evaluation against the join tree on unsafe queries.
    General,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Overhead => "overhead",
            Experiment::Pairwise => "pairwise",
            Experiment::AllPairs => "allpairs",
            Experiment::General => "general",
        }
    }

    pub fn parse(s: &str) -> Option<Experiment> {
        Some(match s {
            "overhead" | "a" => Experiment::Overhead,
            "pairwise" | "b" => Experiment::Pairwise,
            "allpairs" | "c" => Experiment::AllPairs,
            "general" | "d" => Experiment::General,
            _ => return None,
        })
    }

    pub const ALL: [Experiment; 4] = [
        Experiment::Overhead,
        Experiment::Pairwise,
        Experiment::AllPairs,
        Experiment::General,
    ];
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub experiments: Vec<Experiment>,
    pub reps: usize,
    pub seed: u64,
    /// Full ranges when set, a reduced grid otherwise.
    pub full: bool,
    /// Extra strategies asked for by name; unknown ones get a
    /// "not implemented" row.
    pub strategies: Vec<String>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            experiments: Vec::new(),
            reps: 5,
            seed: 1,
            full: false,
            strategies: Vec::new(),
        }
    }
}

/// Median wall time in microseconds of `reps` calls after one warmup call,
/// and the last result.
pub fn median_micros<T>(reps: usize, mut f: impl FnMut() -> T) -> (f64, T) {
    let mut out = f();
    let mut times = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        out = f();
        times.push(start.elapsed().as_secs_f64() * 1e6);
    }
    times.sort_by(f64::total_cmp);
    (times[times.len() / 2], out)
}

struct RowBase {
    experiment: &'static str,
    seed: u64,
    spec_size: usize,
    run_edges: usize,
    query_size: usize,
    reps: usize,
}

impl RowBase {
    fn row(&self, strategy: &str, result: usize, micros: f64) -> BenchRow {
        BenchRow {
            experiment: self.experiment.to_string(),
            seed: self.seed,
            spec_size: self.spec_size,
            run_edges: self.run_edges,
            query_size: self.query_size,
            strategy: strategy.to_string(),
            result_size: result.to_string(),
            median_micros: format!("{micros:.3}"),
            reps: self.reps,
        }
    }
}

/// Spec family used by the size sweep.
pub fn sized_spec(size: usize, seed: u64) -> WorkflowSpec {
    gen_synthetic_spec(&SynthParams {
        size,
        num_composite: (size / 20).max(2),
        num_cycles: (size / 200).max(1),
        max_degree: 3,
        seed,
    })
}

/// Spec with a few cycles, used for runs of growing size.
pub fn run_spec(seed: u64) -> Grammar {
    let spec = gen_synthetic_spec(&SynthParams {
        size: 120,
        num_composite: 8,
        num_cycles: 3,
        max_degree: 2,
        seed,
    });
    Grammar::new(spec).expect("generated specs validate")
}

/// A safe IFQ with `k` symbols, if one is found among random draws.
pub fn safe_ifq(spec: &WorkflowSpec, k: usize, seed: u64) -> Option<Regex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..200).find_map(|_| {
        let q = gen_queries(&QueryKind::Ifq(k), spec, 1, rng.gen()).remove(0);
        is_safe_query(spec, &q).0.then_some(q)
    })
}

/// Query used by the pairwise experiments: a safe one-symbol IFQ when the
/// spec has one, otherwise some generated safe query, otherwise `_*`.
pub fn pairwise_query(g: &Grammar, seed: u64) -> Regex {
    (0..20)
        .find_map(|i| safe_ifq(g.spec(), 1, seed + i))
        .or_else(|| gen_safe_queries(g.spec(), 1, 6, seed).pop())
        .unwrap_or_else(|| ifq(&[]))
}

/// Uniform random node pairs.
pub fn random_pairs(run: &Run, count: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = run.num_nodes() as u32;
    (0..count).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect()
}

/// Per-pair median micros of label decoding over `pairs`, and the number
/// of matches.
pub fn time_decoding(run: &Run, tables: &DecodeTables, pairs: &[(u32, u32)], reps: usize) -> (f64, usize) {
    let (m, hits) = median_micros(reps, || {
        pairs
            .iter()
            .filter(|&&(u, v)| answer_pairwise(&run.label(u).0, &run.label(v).0, tables).unwrap_or(false))
            .count()
    });
    (m / pairs.len().max(1) as f64, hits)
}

/// Per-pair median micros of the product-graph search over `pairs`.
pub fn time_search(run: &Run, q: &Regex, pairs: &[(u32, u32)], reps: usize) -> (f64, usize) {
    let dfa = run_dfa(q, run);
    let (m, hits) = median_micros(reps, || pairs.iter().filter(|&&(u, v)| dfs_pair(&dfa, run, u, v)).count());
    (m / pairs.len().max(1) as f64, hits)
}

fn overhead(cfg: &BenchConfig) -> Vec<BenchRow> {
    let sizes: Vec<usize> = if cfg.full {
        vec![400, 600, 800, 1000, 1200]
    } else {
        vec![400, 800]
    };
    let mut rows = Vec::new();
    let k_sweep_size = *sizes.last().expect("non-empty");
    for &size in &sizes {
        let spec = sized_spec(size, cfg.seed);
        let ks: Vec<usize> = if size == k_sweep_size { (0..=10).collect() } else { vec![3] };
        for k in ks {
            let syms: Vec<&str> = (0..k).map(|i| spec.tags[(i * 7 + cfg.seed as usize) % spec.tags.len()].as_str()).collect();
            let q = ifq(&syms);
            let base = RowBase {
                experiment: "overhead",
                seed: cfg.seed,
                spec_size: spec.size(),
                run_edges: 0,
                query_size: k,
                reps: cfg.reps,
            };
            let (m, safe) = median_micros(cfg.reps, || is_safe_query(&spec, &q).0);
            rows.push(base.row("safety", safe as usize, m));
            if safe {
                let g = Grammar::new(spec.clone()).expect("generated specs validate");
                let (m, t) = median_micros(cfg.reps, || tables_for_query(&g, &q).expect("safe"));
                rows.push(base.row("tables", t.num_states(), m));
            }
        }
    }
    rows
}

fn pairwise(cfg: &BenchConfig) -> Vec<BenchRow> {
    let g = run_spec(cfg.seed);
    let sizes: Vec<usize> = if cfg.full {
        vec![1000, 2000, 4000, 8000]
    } else {
        vec![1000, 2000]
    };
    let mut rows = Vec::new();
    let q = pairwise_query(&g, cfg.seed);
    let tables = tables_for_query(&g, &q).expect("safe");
    for &target in &sizes {
        let run = random_run(&g, &RunConfig::new(target, cfg.seed, 0.8)).run;
        let pairs = random_pairs(&run, 1000, cfg.seed);
        let base = RowBase {
            experiment: "pairwise",
            seed: cfg.seed,
            spec_size: g.size(),
            run_edges: run.num_edges(),
            query_size: q.size(),
            reps: cfg.reps,
        };
        let (m, hits) = time_decoding(&run, &tables, &pairs, cfg.reps);
        rows.push(base.row("rpl", hits, m));
        let (m, hits) = time_search(&run, &q, &pairs, cfg.reps);
        rows.push(base.row("dfs", hits, m));
    }
    let run = random_run(&g, &RunConfig::new(sizes[sizes.len() / 2], cfg.seed, 0.8)).run;
    let pairs = random_pairs(&run, 1000, cfg.seed);
    for k in 0..=4 {
        let Some(q) = safe_ifq(g.spec(), k, cfg.seed + k as u64) else { continue };
        let tables = tables_for_query(&g, &q).expect("safe");
        let base = RowBase {
            experiment: "pairwise-k",
            seed: cfg.seed,
            spec_size: g.size(),
            run_edges: run.num_edges(),
            query_size: k,
            reps: cfg.reps,
        };
        let (m, hits) = time_decoding(&run, &tables, &pairs, cfg.reps);
        rows.push(base.row("rpl", hits, m));
    }
    rows
}

/// Nodes of `run` executing module `name`.
pub fn nodes_named(run: &Run, name: &str) -> Vec<u32> {
    (0..run.num_nodes() as u32).filter(|&v| run.node_name(v) == name).collect()
}

/// Timings of `a*` between the fork distributors of a fork run, for the
/// strategies `s1`, `s2` and `g1`: `(strategy, result size, micros)`.
pub fn fork_star(run: &Run, g: &Grammar, strategies: &[&str], reps: usize) -> Vec<(String, usize, f64)> {
    let q = Regex::star(Regex::sym("a"));
    let tables = tables_for_query(g, &q).expect("a* is safe for the fork spec");
    let list = nodes_named(run, "a");
    let index = TagIndex::build(run);
    let mut jobs: Vec<Box<dyn FnMut() -> usize + '_>> = strategies
        .iter()
        .map(|&s| -> Box<dyn FnMut() -> usize + '_> {
            match s {
                "s1" => Box::new(|| nested_loop_all_pairs(run, &list, &list, &tables).expect("decodable").len()),
                "s2" => Box::new(|| {
                    let t = LabelTree::from_run(run, &list, &tables).expect("labels from one run");
                    answer_all_pairs(&t, &t, &tables).expect("labels from one run").0.len()
                }),
                "g1" => Box::new(|| eval_join_tree(&q, run, &index).restrict(&list, &list).len()),
                other => panic!("no fork timing for strategy {other}"),
            }
        })
        .collect();
    let sizes: Vec<usize> = jobs.iter_mut().map(|f| f()).collect();
    let mut times = vec![Vec::with_capacity(reps.max(1)); jobs.len()];
    for _ in 0..reps.max(1) {
        for (f, t) in jobs.iter_mut().zip(&mut times) {
            let start = Instant::now();
            f();
            t.push(start.elapsed().as_secs_f64() * 1e6);
        }
    }
    strategies
        .iter()
        .zip(sizes)
        .zip(times)
        .map(|((s, n), mut t)| {
            t.sort_by(f64::total_cmp);
            (s.to_string(), n, t[t.len() / 2])
        })
        .collect()
}

fn allpairs(cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    let g = run_spec(cfg.seed);
    let run = random_run(&g, &RunConfig::new(if cfg.full { 2000 } else { 500 }, cfg.seed, 0.8)).run;
    let all: Vec<u32> = (0..run.num_nodes() as u32).collect();
    let index = TagIndex::build(&run);
    let reach = reach_tables(&g);
    for i in 0..8u64 {
        let Some(q) = safe_ifq(g.spec(), 3, cfg.seed * 100 + i).or_else(|| safe_ifq(g.spec(), 2, cfg.seed * 100 + i)) else {
            continue;
        };
        let syms = match_ifq(&q).expect("generated as an IFQ");
        let tables = tables_for_query(&g, &q).expect("safe");
        let base = RowBase {
            experiment: "allpairs-ifq",
            seed: cfg.seed,
            spec_size: g.size(),
            run_edges: run.num_edges(),
            query_size: syms.len(),
            reps: cfg.reps,
        };
        let (m, n) = median_micros(cfg.reps, || nested_loop_all_pairs(&run, &all, &all, &tables).expect("decodable").len());
        rows.push(base.row("s1", n, m));
        let (m, n) = median_micros(cfg.reps, || {
            let t = LabelTree::from_run(&run, &all, &tables).expect("labels from one run");
            answer_all_pairs(&t, &t, &tables).expect("labels from one run").0.len()
        });
        rows.push(base.row("s2", n, m));
        let (m, n) = median_micros(cfg.reps, || eval_join_tree(&q, &run, &index).len());
        rows.push(base.row("g1", n, m));
        let (m, n) = median_micros(cfg.reps, || eval_ifq(&syms, &run, &index, &reach).expect("labels from one run").len());
        rows.push(base.row("g3", n, m));
    }
    let fg = Grammar::new(fork_spec()).expect("fork spec is valid");
    let sizes: Vec<usize> = if cfg.full {
        vec![1000, 2000, 4000, 8000, 16000]
    } else {
        vec![1000, 2000]
    };
    for edges in sizes {
        let run = fork_run(&fg, edges / FORK_EDGES_PER_LEVEL);
        let base = RowBase {
            experiment: "allpairs-fork",
            seed: cfg.seed,
            spec_size: fg.size(),
            run_edges: run.num_edges(),
            query_size: 2,
            reps: cfg.reps,
        };
        for (s, n, m) in fork_star(&run, &fg, &["s1", "s2", "g1"], cfg.reps) {
            rows.push(base.row(&s, n, m));
        }
    }
    rows
}

fn general(cfg: &BenchConfig) -> Vec<BenchRow> {
    let g = run_spec(cfg.seed);
    let run = random_run(&g, &RunConfig::new(1000, cfg.seed, 0.8)).run;
    let index = TagIndex::build(&run);
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut found = 0;
    let want = if cfg.full { 40 } else { 10 };
    while found < want {
        let q = gen_queries(&QueryKind::Random(rng.gen_range(2..=5)), g.spec(), 1, rng.gen()).remove(0);
        if is_safe_query(g.spec(), &q).0 {
            continue;
        }
        found += 1;
        let base = RowBase {
            experiment: "general",
            seed: cfg.seed,
            spec_size: g.size(),
            run_edges: run.num_edges(),
            query_size: q.size(),
            reps: cfg.reps,
        };
        let (m, n) = median_micros(cfg.reps, || eval_join_tree(&q, &run, &index).len());
        rows.push(base.row("g1", n, m));
        let opts = GeneralOptions { narrowing: true };
        let (m, n) = median_micros(cfg.reps, || eval_general(&q, &run, &g, &index, opts).expect("labels from one run").len());
        rows.push(base.row("hybrid", n, m));
    }
    rows
}

/// Runs the configured experiments. Strategies that are not implemented
/// produce a row saying so.
pub fn bench_suite(cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &e in &cfg.experiments {
        rows.extend(match e {
            Experiment::Overhead => overhead(cfg),
            Experiment::Pairwise => pairwise(cfg),
            Experiment::AllPairs => allpairs(cfg),
            Experiment::General => general(cfg),
        });
    }
    for s in &cfg.strategies {
        if !["s1", "s2", "g1", "g3", "hybrid", "rpl", "dfs"].contains(&s.as_str()) {
            rows.push(BenchRow {
                experiment: cfg.experiments.first().map_or("none", |e| e.name()).to_string(),
                seed: cfg.seed,
                spec_size: 0,
                run_edges: 0,
                query_size: 0,
                strategy: s.clone(),
                result_size: String::new(),
                median_micros: "not implemented".to_string(),
                reps: 0,
            });
        }
    }
    rows
}

/// Header plus one line per row.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use provq_core::allpairs::{answer_all_pairs, nested_loop_all_pairs, LabelTree};
use provq_core::bench::{bench_suite, to_csv, BenchConfig, Experiment};
use provq_core::decoder::answer_pairwise;
use provq_core::derivation::{deserialize_run, random_run, serialize_run, Run, RunConfig};
use provq_core::fixtures::{paper_run, paper_spec};
use provq_core::general::{dfs_oracle, eval_general, eval_ifq, eval_join_tree, GeneralOptions, TagIndex};
use provq_core::grammar::{parse_spec, write_spec, Grammar, WorkflowSpec};
use provq_core::intersection::{reach_tables, tables_for_query, FineGrainedSpec};
use provq_core::regex::{match_ifq, parse_regex, Regex};
use provq_core::relation::PairRelation;
use provq_core::safety::is_safe_query;
use provq_core::synth::{fork_run, fork_spec, gen_synthetic_spec, SynthParams, FORK_EDGES_PER_LEVEL};

#[derive(Parser)]
#[command(name = "provq", version, about = "Regular path queries over workflow provenance runs")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Print a synthetic or bundled specification.
    GenSpec(GenSpecArgs),
    /// Derive a random run of a specification.
    GenRun(GenRunArgs),
    /// Print the tag index of a run.
    Index(RunArgs),
    /// Decide whether a query is safe for a specification.
    Safety(SpecQueryArgs),
    /// Dump the transfer matrices and decoding tables of a safe query.
    Explain(SpecQueryArgs),
    /// Evaluate a query over a run.
    #[command(subcommand)]
    Query(QueryCommand),
    /// Run benchmark experiments and print CSV rows.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenSpecArgs {
    /// Print a bundled spec (`paperG` or `fork`) instead of a synthetic one.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, default_value_t = 400)]
    size: usize,
    #[arg(long)]
    composite: Option<usize>,
    #[arg(long, default_value_t = 2)]
    cycles: usize,
    #[arg(long, default_value_t = 3)]
    degree: usize,
}

#[derive(Args)]
struct GenRunArgs {
    /// Spec file, or `builtin:paperG` / `builtin:fork`.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 1000)]
    edges: usize,
    #[arg(long, default_value_t = 0.5)]
    bias: f64,
    /// For the fork spec, fire the fork recursion instead of sampling.
    #[arg(long)]
    fork: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: String,
    /// Run file, or `builtin:paperRun`.
    #[arg(long)]
    run: String,
}

#[derive(Args)]
struct SpecQueryArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    query: String,
}

#[derive(Subcommand)]
enum QueryCommand {
    Pairwise(PairwiseArgs),
    Allpairs(AllPairsArgs),
    General(GeneralArgs),
}

#[derive(Args)]
struct PairwiseArgs {
    #[command(flatten)]
    input: RunArgs,
    #[arg(long)]
    query: String,
    /// Source node as NAME:OCC.
    #[arg(long)]
    u: String,
    /// Target node as NAME:OCC.
    #[arg(long)]
    v: String,
}

#[derive(Copy, Clone, ValueEnum)]
enum AllPairsStrategy {
    S1,
    S2,
}

#[derive(Args)]
struct AllPairsArgs {
    #[command(flatten)]
    input: RunArgs,
    #[arg(long)]
    query: String,
    /// File with one NAME:OCC per line; all nodes when absent.
    #[arg(long)]
    l1: Option<PathBuf>,
    #[arg(long)]
    l2: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AllPairsStrategy::S2)]
    strategy: AllPairsStrategy,
}

#[derive(Copy, Clone, ValueEnum)]
enum GeneralStrategy {
    G1,
    G3,
    Hybrid,
    Oracle,
}

#[derive(Args)]
struct GeneralArgs {
    #[command(flatten)]
    input: RunArgs,
    #[arg(long)]
    query: String,
    #[arg(long, value_enum, default_value_t = GeneralStrategy::Hybrid)]
    strategy: GeneralStrategy,
    /// Index file written by `provq index`; rebuilt from the run when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Narrow safe-unit node lists to neighbouring endpoints.
    #[arg(long)]
    narrowing: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated experiments: overhead, pairwise, allpairs, general.
    /// All of them when absent; an empty list prints only the header.
    #[arg(long, value_delimiter = ',')]
    experiments: Option<Vec<String>>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Use the full size ranges.
    #[arg(long)]
    full: bool,
    /// Extra strategies to report on, such as `g2`.
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<String>,
}

type CliResult = Result<(), String>;

fn load_spec(arg: &str) -> Result<WorkflowSpec, String> {
    match arg {
        "builtin:paperG" => Ok(paper_spec()),
        "builtin:fork" => Ok(fork_spec()),
        path => {
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            parse_spec(&text).map_err(|e| format!("{path}: {e}"))
        }
    }
}

fn load_grammar(arg: &str) -> Result<Grammar, String> {
    Grammar::new(load_spec(arg)?).map_err(|r| format!("{arg}: invalid spec: {r:?}"))
}

fn load_run(arg: &str, g: &Grammar) -> Result<Run, String> {
    if arg == "builtin:paperRun" {
        return Ok(paper_run(g));
    }
    let text = fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?;
    deserialize_run(&text, g.spec()).map_err(|e| format!("{arg}: {e}"))
}

fn load_query(text: &str) -> Result<Regex, String> {
    parse_regex(text).map_err(|e| format!("query: {e}"))
}

fn resolve(run: &Run, name: &str) -> Result<u32, String> {
    run.resolve(name).ok_or_else(|| format!("no node {name} in run"))
}

fn load_list(path: &Option<PathBuf>, run: &Run) -> Result<Vec<u32>, String> {
    let Some(path) = path else {
        return Ok((0..run.num_nodes() as u32).collect());
    };
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| resolve(run, l))
        .collect()
}

/// Error text for a write to a closed stdout, which ends the program quietly.
const STDOUT_CLOSED: &str = "stdout closed";

fn write_failure(e: io::Error) -> String {
    if e.kind() == io::ErrorKind::BrokenPipe {
        STDOUT_CLOSED.to_string()
    } else {
        format!("writing output: {e}")
    }
}

fn emit(text: std::fmt::Arguments<'_>) -> CliResult {
    io::stdout().lock().write_fmt(text).map_err(write_failure)
}

macro_rules! out {
    ($($t:tt)*) => { emit(format_args!($($t)*))? };
}

macro_rules! outln {
    ($($t:tt)*) => { emit(format_args!("{}\n", format_args!($($t)*)))? };
}

fn print_pairs(rel: &PairRelation, run: &Run, format: Format) -> CliResult {
    let mut w = BufWriter::new(io::stdout().lock());
    if format == Format::Csv {
        writeln!(w, "u,v").map_err(write_failure)?;
    }
    for (u, v) in rel.named(run) {
        match format {
            Format::Csv => writeln!(w, "{u},{v}"),
            Format::Jsonl => writeln!(w, "{}", json!({ "u": u, "v": v })),
        }
        .map_err(write_failure)?;
    }
    w.flush().map_err(write_failure)
}

fn gen_spec(cli: &Cli, a: &GenSpecArgs) -> CliResult {
    let spec = match a.builtin.as_deref() {
        Some("paperG") => paper_spec(),
        Some("fork") => fork_spec(),
        Some(other) => return Err(format!("unknown builtin spec {other}")),
        None => gen_synthetic_spec(&SynthParams {
            size: a.size,
            num_composite: a.composite.unwrap_or((a.size / 20).max(2)),
            num_cycles: a.cycles,
            max_degree: a.degree,
            seed: cli.seed,
        }),
    };
    out!("{}", write_spec(&spec));
    Ok(())
}

fn gen_run(cli: &Cli, a: &GenRunArgs) -> CliResult {
    let g = load_grammar(&a.spec)?;
    let run = if a.fork {
        if a.spec != "builtin:fork" {
            return Err("--fork needs --spec builtin:fork".into());
        }
        fork_run(&g, (a.edges / FORK_EDGES_PER_LEVEL).max(1))
    } else {
        let r = random_run(&g, &RunConfig::new(a.edges.max(1), cli.seed, a.bias));
        if let Some(w) = r.warning {
            eprintln!("warning: {w}");
        }
        r.run
    };
    out!("{}", serialize_run(&run));
    Ok(())
}

fn index(a: &RunArgs) -> CliResult {
    let g = load_grammar(&a.spec)?;
    let run = load_run(&a.run, &g)?;
    out!("{}", TagIndex::build(&run).persist(&run));
    Ok(())
}

fn safety(cli: &Cli, a: &SpecQueryArgs) -> CliResult {
    let spec = load_spec(&a.spec)?;
    let q = load_query(&a.query)?;
    let (safe, report, _) = is_safe_query(&spec, &q);
    match cli.format {
        Format::Csv => out!("{}", report.render(&spec)),
        Format::Jsonl => outln!("{}", json!({ "query": q.to_string(), "safe": safe, "verdict": report.verdict.to_string() })),
    }
    Ok(())
}

fn explain(a: &SpecQueryArgs) -> CliResult {
    let g = load_grammar(&a.spec)?;
    let q = load_query(&a.query)?;
    let (_, report, dfa) = is_safe_query(g.spec(), &q);
    out!("{}", dfa.describe(&g.spec().tags));
    if !report.is_safe() {
        out!("{}", report.render(g.spec()));
    } else {
        let fg = FineGrainedSpec::intersect(&g, &dfa, &report).map_err(|e| e.to_string())?;
        let tables = provq_core::intersection::DecodeTables::compute(&fg);
        out!("{}", tables.render(&g));
    }
    Ok(())
}

fn pairwise(cli: &Cli, a: &PairwiseArgs) -> CliResult {
    let g = load_grammar(&a.input.spec)?;
    let run = load_run(&a.input.run, &g)?;
    let q = load_query(&a.query)?;
    let tables = tables_for_query(&g, &q).map_err(|e| e.to_string())?;
    let (u, v) = (resolve(&run, &a.u)?, resolve(&run, &a.v)?);
    let hit = answer_pairwise(&run.label(u).0, &run.label(v).0, &tables).map_err(|e| e.to_string())?;
    match cli.format {
        Format::Csv => outln!("{hit}"),
        Format::Jsonl => outln!("{}", json!({ "u": a.u, "v": a.v, "result": hit })),
    }
    Ok(())
}

fn allpairs(cli: &Cli, a: &AllPairsArgs) -> CliResult {
    let g = load_grammar(&a.input.spec)?;
    let run = load_run(&a.input.run, &g)?;
    let q = load_query(&a.query)?;
    let tables = tables_for_query(&g, &q).map_err(|e| e.to_string())?;
    let l1 = load_list(&a.l1, &run)?;
    let l2 = load_list(&a.l2, &run)?;
    let rel = match a.strategy {
        AllPairsStrategy::S1 => nested_loop_all_pairs(&run, &l1, &l2, &tables).map_err(|e| e.to_string())?,
        AllPairsStrategy::S2 => {
            let t1 = LabelTree::from_run(&run, &l1, &tables).map_err(|e| e.to_string())?;
            let t2 = LabelTree::from_run(&run, &l2, &tables).map_err(|e| e.to_string())?;
            answer_all_pairs(&t1, &t2, &tables).map_err(|e| e.to_string())?.0
        }
    };
    print_pairs(&rel, &run, cli.format)
}

fn general(cli: &Cli, a: &GeneralArgs) -> CliResult {
    let g = load_grammar(&a.input.spec)?;
    let run = load_run(&a.input.run, &g)?;
    let q = load_query(&a.query)?;
    let index = match &a.index {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            TagIndex::load(&text, &run).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => TagIndex::build(&run),
    };
    let rel = match a.strategy {
        GeneralStrategy::G1 => eval_join_tree(&q, &run, &index),
        GeneralStrategy::G3 => {
            let syms = match_ifq(&q).ok_or("strategy g3 needs a query of the form _*.a1._*...ak._*")?;
            eval_ifq(&syms, &run, &index, &reach_tables(&g)).map_err(|e| e.to_string())?
        }
        GeneralStrategy::Hybrid => {
            let opts = GeneralOptions { narrowing: a.narrowing };
            eval_general(&q, &run, &g, &index, opts).map_err(|e| e.to_string())?
        }
        GeneralStrategy::Oracle => dfs_oracle(&q, &run),
    };
    print_pairs(&rel, &run, cli.format)
}

fn bench(cli: &Cli, a: &BenchArgs) -> CliResult {
    let experiments = match &a.experiments {
        None => Experiment::ALL.to_vec(),
        Some(names) => names
            .iter()
            .filter(|e| !e.is_empty())
            .map(|e| Experiment::parse(e).ok_or_else(|| format!("unknown experiment {e}")))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let cfg = BenchConfig {
        experiments,
        reps: a.reps,
        seed: cli.seed,
        full: a.full,
        strategies: a.strategies.clone(),
    };
    let rows = bench_suite(&cfg);
    match cli.format {
        Format::Csv => out!("{}", to_csv(&rows)),
        Format::Jsonl => {
            for r in &rows {
                outln!("{}", serde_json::to_string(r).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenSpec(a) => gen_spec(&cli, a),
        Command::GenRun(a) => gen_run(&cli, a),
        Command::Index(a) => index(a),
        Command::Safety(a) => safety(&cli, a),
        Command::Explain(a) => explain(a),
        Command::Query(QueryCommand::Pairwise(a)) => pairwise(&cli, a),
        Command::Query(QueryCommand::Allpairs(a)) => allpairs(&cli, a),
        Command::Query(QueryCommand::General(a)) => general(&cli, a),
        Command::Bench(a) => bench(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e == STDOUT_CLOSED => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

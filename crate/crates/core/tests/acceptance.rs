//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::oracles::{all_words, derivative_matches, enumerate_transfer, is_minimal, random_regex, EnumVerdict};
use provq_core::allpairs::{all_pairs_reach, answer_all_pairs, nested_loop_all_pairs, LabelTree};
use provq_core::bench::{fork_star, median_micros, pairwise_query, random_pairs, run_spec, sized_spec, time_decoding, time_search};
use provq_core::decoder::{answer_pairwise, matrix_ops, reset_matrix_ops};
use provq_core::derivation::{random_run, RunConfig};
use provq_core::fixtures::{paper_grammar, paper_run};
use provq_core::general::{dfs_oracle, dfs_pair, eval_general, eval_join_tree, run_dfa, GeneralOptions, TagIndex};
use provq_core::grammar::{Grammar, TagId};
use provq_core::intersection::tables_for_query;
use provq_core::regex::{compile_minimal_dfa, ifq, parse_regex, Regex};
use provq_core::safety::{is_safe_query, Verdict};
use provq_core::synth::{fork_run, fork_spec, gen_queries, QueryKind, FORK_EDGES_PER_LEVEL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_reproduction() -> Outcome {
    let start = Instant::now();
    let g = paper_grammar();
    let run = paper_run(&g);
    let label = |n: &str| run.label(run.resolve(n).expect("fixture node")).to_string();
    check(label("b:2") == "(1,3)(4,1)", || format!("label of b:2 is {}", label("b:2")))?;
    for (n, want) in [("a:1", "(1,2)(1,1,1)(2,1)"), ("d:1", "(1,2)(1,1,1)(2,3)"), ("b:3", "(1,3)(4,2)")] {
        check(label(n) == want, || format!("label of {n} is {}", label(n)))?;
    }

    let spec = g.spec();
    let r3 = parse_regex("_*.e._*").expect("query");
    let (safe, report, dfa) = is_safe_query(spec, &r3);
    check(safe, || "R3 is not safe".into())?;
    let (q0, qf) = (dfa.start(), (0..dfa.num_states()).find(|&q| dfa.is_accepting(q)).expect("accepting"));
    let lam_a = report.lambda(spec.module_id("A").expect("A")).expect("bound");
    let lam_b = report.lambda(spec.module_id("B").expect("B")).expect("bound");
    let ones = |m: &provq_core::matrix::BoolMatrix| {
        let mut v = Vec::new();
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                if m.get(i, j) {
                    v.push((i, j));
                }
            }
        }
        v
    };
    let mut want_a = vec![(q0, qf), (qf, qf)];
    want_a.sort();
    check(ones(lam_a) == want_a, || format!("lambda(A) = {:?}", ones(lam_a)))?;
    check(ones(lam_b) == vec![(0, 0), (1, 1)], || format!("lambda(B) = {:?}", ones(lam_b)))?;
    for q in ["e", "_*.a._*"] {
        let (safe, _, _) = is_safe_query(spec, &parse_regex(q).expect("query"));
        check(!safe, || format!("{q} reported safe"))?;
    }

    let t = tables_for_query(&g, &r3).map_err(|e| e.to_string())?;
    let ask = |u: &str, v: &str| {
        answer_pairwise(&run.label(run.resolve(u).unwrap()).0, &run.label(run.resolve(v).unwrap()).0, &t).unwrap()
    };
    check(ask("c:1", "b:1"), || "R3(c:1, b:1) is false".into())?;
    check(!ask("c:1", "b:3"), || "R3(c:1, b:3) is true".into())?;

    let ids = |ns: &[&str]| ns.iter().map(|n| run.resolve(n).unwrap()).collect::<Vec<_>>();
    let (l1, l2) = (ids(&["d:1", "d:2", "e:2"]), ids(&["b:1", "b:2"]));
    for (q, want) in [
        ("A+", vec![("d:1", "b:1"), ("d:2", "b:1"), ("e:2", "b:1")]),
        ("A", vec![("d:1", "b:1")]),
    ] {
        let t = tables_for_query(&g, &parse_regex(q).unwrap()).map_err(|e| e.to_string())?;
        let t1 = LabelTree::from_run(&run, &l1, &t).map_err(|e| e.to_string())?;
        let t2 = LabelTree::from_run(&run, &l2, &t).map_err(|e| e.to_string())?;
        let got = answer_all_pairs(&t1, &t2, &t).map_err(|e| e.to_string())?.0.named(&run);
        let want: Vec<(String, String)> = want.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        check(got == want, || format!("{q}: {got:?}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 1.0, || format!("took {secs:.3}s"))?;
    Ok(format!("all fixture values reproduced in {:.1} ms", secs * 1e3))
}

fn pairwise_oracle() -> Outcome {
    let (mut instances, mut pairs, mut positives) = (0, 0, 0);
    let mut seed = 0u64;
    while instances < 300 {
        seed += 1;
        let (g, run) = common::instance(seed, 1000);
        let Some(q) = common::safe_query(&g, seed) else { continue };
        instances += 1;
        let t = tables_for_query(&g, &q).map_err(|e| e.to_string())?;
        let dfa = run_dfa(&q, &run);
        check(dfa.num_states() <= 6, || format!("seed {seed}: {} states", dfa.num_states()))?;
        let oracle = dfs_oracle(&q, &run).sorted();
        for (u, v) in common::sample_pairs(&run, &oracle, 100, seed) {
            let got = answer_pairwise(&run.label(u).0, &run.label(v).0, &t).map_err(|e| e.to_string())?;
            let want = dfs_pair(&dfa, &run, u, v);
            check(got == want, || {
                format!("seed {seed} query {q}: ({}, {}) gave {got}", run.display_name(u), run.display_name(v))
            })?;
            pairs += 1;
            positives += want as usize;
        }
    }
    Ok(format!("{instances} instances, {pairs} pairs ({positives} positive), all agree"))
}

fn allpairs_oracle() -> Outcome {
    let (mut instances, mut total, mut reach_total) = (0, 0, 0);
    let mut seed = 10_000u64;
    let plus_any = Regex::plus(Regex::Wildcard);
    while instances < 100 {
        seed += 1;
        let (g, run) = common::instance(seed, 2000);
        let Some(q) = common::safe_query(&g, seed) else { continue };
        instances += 1;
        let t = tables_for_query(&g, &q).map_err(|e| e.to_string())?;
        let all: Vec<u32> = (0..run.num_nodes() as u32).collect();
        let (l1, l2) = if seed % 3 == 0 {
            (all.clone(), all)
        } else {
            (common::random_list(&run, seed), common::random_list(&run, seed + 7))
        };
        let t1 = LabelTree::from_run(&run, &l1, &t).map_err(|e| e.to_string())?;
        let t2 = LabelTree::from_run(&run, &l2, &t).map_err(|e| e.to_string())?;
        let (s2, stats) = answer_all_pairs(&t1, &t2, &t).map_err(|e| e.to_string())?;
        let s1 = nested_loop_all_pairs(&run, &l1, &l2, &t).map_err(|e| e.to_string())?;
        let want = dfs_oracle(&q, &run).restrict(&l1, &l2);
        check(s2 == want, || format!("seed {seed} query {q}: merge {} vs oracle {}", s2.len(), want.len()))?;
        check(s1 == want, || format!("seed {seed} query {q}: nested {} vs oracle {}", s1.len(), want.len()))?;
        let (reach, _) = all_pairs_reach(&t1, &t2, &t).map_err(|e| e.to_string())?;
        let n = dfs_oracle(&plus_any, &run).restrict(&l1, &l2).len();
        check(stats.filter_calls as usize == reach.len() && reach.len() == n, || {
            format!("seed {seed}: {} filter calls, {} reach pairs, {n} reachable", stats.filter_calls, reach.len())
        })?;
        total += want.len();
        reach_total += n;
    }
    Ok(format!(
        "{instances} instances, {total} answer pairs, filter calls = reachable pairs ({reach_total})"
    ))
}

fn safety_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut cases, mut safe, mut unsafe_, mut max_rounds) = (0, 0, 0, 0);
    while cases < 100 {
        let g = common::grammar(&mut rng, 6);
        let spec = g.spec();
        let kind = match rng.gen_range(0..3) {
            0 => QueryKind::Ifq(rng.gen_range(1..=2)),
            1 => QueryKind::Star(spec.tags[rng.gen_range(0..spec.tags.len())].clone()),
            _ => QueryKind::Random(rng.gen_range(1..=3)),
        };
        let q = gen_queries(&kind, spec, 1, rng.gen()).remove(0);
        let (_, report, dfa) = is_safe_query(spec, &q);
        if report.verdict == Verdict::TooManyStates {
            continue;
        }
        cases += 1;
        let (oracle, rounds) = enumerate_transfer(spec, &dfa);
        max_rounds = max_rounds.max(rounds);
        match (&report.verdict, oracle) {
            (Verdict::Safe, EnumVerdict::Safe(grids)) => {
                safe += 1;
                for (m, grid) in grids.iter().enumerate() {
                    let lam = report.lambdas[m].as_ref().ok_or("safe report without a matrix")?;
                    for (i, row) in grid.iter().enumerate() {
                        for (j, &b) in row.iter().enumerate() {
                            check(lam.get(i, j) == b, || {
                                format!("query {q}: module {} entry ({i},{j})", spec.modules[m].name)
                            })?;
                        }
                    }
                }
            }
            (Verdict::Unsafe, EnumVerdict::Unsafe) => unsafe_ += 1,
            (Verdict::Unproductive, EnumVerdict::Unproductive) => {}
            (v, o) => return Err(format!("query {q} on {}: checker {v}, enumeration {o:?}", spec.name)),
        }
    }
    check(safe > 0 && unsafe_ > 0, || format!("{safe} safe, {unsafe_} unsafe: not a mixed sample"))?;
    Ok(format!(
        "{cases} pairs ({safe} safe, {unsafe_} unsafe) agree, up to {max_rounds} height rounds"
    ))
}

fn dfa_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut asts, mut words_checked) = (0, 0);
    for _ in 0..400 {
        let k = rng.gen_range(1..=3);
        let gamma: Vec<String> = ["a", "b", "c"][..k].iter().map(|s| s.to_string()).collect();
        let ast = random_regex(&mut rng, &gamma, 4);
        check(ast.depth() <= 4, || format!("{ast} is deeper than 4"))?;
        let dfa = compile_minimal_dfa(&ast, &gamma);
        for w in all_words(&gamma, 6) {
            let tags: Vec<TagId> = w.iter().map(|&a| TagId(a as u32)).collect();
            let names: Vec<&str> = w.iter().map(|&a| gamma[a].as_str()).collect();
            check(dfa.accepts(&tags) == derivative_matches(&ast, &names), || format!("{ast} on {names:?}"))?;
            words_checked += 1;
        }
        is_minimal(&dfa, gamma.len()).map_err(|e| format!("{ast}: {e}"))?;
        asts += 1;
    }
    Ok(format!("{asts} expressions, {words_checked} words, all minimal"))
}

fn general_queries() -> Outcome {
    let (mut queries, mut safe) = (0, 0);
    let mut seed = 20_000u64;
    while queries < 120 {
        seed += 1;
        let (g, run) = common::instance(seed, 1000);
        let index = TagIndex::build(&run);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2 {
            let kind = match rng.gen_range(0..4) {
                0 => QueryKind::Ifq(rng.gen_range(1..=2)),
                _ => QueryKind::Random(rng.gen_range(1..=4)),
            };
            let q = gen_queries(&kind, g.spec(), 1, rng.gen()).remove(0);
            let want = dfs_oracle(&q, &run);
            let joins = eval_join_tree(&q, &run, &index);
            let opts = GeneralOptions { narrowing: rng.gen() };
            let hybrid = eval_general(&q, &run, &g, &index, opts).map_err(|e| e.to_string())?;
            check(joins == want, || format!("seed {seed} query {q}: joins {} vs oracle {}", joins.len(), want.len()))?;
            check(hybrid == want, || format!("seed {seed} query {q}: hybrid {} vs oracle {}", hybrid.len(), want.len()))?;
            safe += is_safe_query(g.spec(), &q).0 as usize;
            queries += 1;
        }
    }
    check(safe > 0 && safe < queries, || format!("{safe} of {queries} safe: not a mixed sample"))?;
    Ok(format!("{queries} queries ({safe} safe, {} unsafe) agree", queries - safe))
}

fn performance_trends() -> Outcome {
    let reps = 5;
    let g = run_spec(3);
    let q = pairwise_query(&g, 3);
    let tables = tables_for_query(&g, &q).map_err(|e| e.to_string())?;
    let mut decode = Vec::new();
    let mut search = Vec::new();
    for target in [1000, 8000] {
        let run = random_run(&g, &RunConfig::new(target, 3, 0.8)).run;
        let pairs = random_pairs(&run, 2000, 3);
        decode.push((run.num_edges(), time_decoding(&run, &tables, &pairs, reps).0));
        search.push(time_search(&run, &q, &pairs, reps).0);
    }
    let decode_ratio = decode[1].1 / decode[0].1;
    let search_ratio = search[1] / search[0];
    let a = decode_ratio <= 3.0 && search_ratio >= 4.0;

    let fg = Grammar::new(fork_spec()).map_err(|r| format!("{r:?}"))?;
    let fork = fork_run(&fg, 16_000 / FORK_EDGES_PER_LEVEL);
    let times = fork_star(&fork, &fg, &["s2", "g1"], reps);
    check(times[0].1 == times[1].1, || format!("fork result sizes differ: {times:?}"))?;
    let fork_ratio = times[1].2 / times[0].2;
    let b = fork_ratio >= 2.0;

    let spec = sized_spec(1200, 1);
    let tags: Vec<&str> = (0..10).map(|i| spec.tags[i % spec.tags.len()].as_str()).collect();
    let ifq10 = ifq(&tags);
    let (micros, _) = median_micros(reps, || is_safe_query(&spec, &ifq10).0);
    let c = micros < 1e6;

    let detail = format!(
        "(a) decode x{decode_ratio:.2} vs search x{search_ratio:.2} from {} to {} edges; \
         (b) fork a* at {} edges: merge {:.0} ms, joins {:.0} ms, x{fork_ratio:.2}; \
         (c) safety on size {} with k=10: {:.1} ms",
        decode[0].0,
        decode[1].0,
        fork.num_edges(),
        times[0].2 / 1e3,
        times[1].2 / 1e3,
        spec.size(),
        micros / 1e3
    );
    if a && b && c {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn complexity_guards() -> Outcome {
    let (mut calls, mut worst_ops, mut worst_level) = (0u64, 0f64, 0f64);
    let mut seed = 30_000u64;
    let mut instances = 0;
    while instances < 100 {
        seed += 1;
        let (g, run) = common::instance(seed, 1000);
        let Some(q) = common::safe_query(&g, seed) else { continue };
        instances += 1;
        let t = tables_for_query(&g, &q).map_err(|e| e.to_string())?;
        let bound = 2 * g.depth_bound() as u64 + 3;
        for (u, v) in random_pairs(&run, 100, seed) {
            reset_matrix_ops();
            answer_pairwise(&run.label(u).0, &run.label(v).0, &t).map_err(|e| e.to_string())?;
            let ops = matrix_ops();
            check(ops <= bound, || format!("seed {seed}: {ops} matrix products, bound {bound}"))?;
            worst_ops = worst_ops.max(ops as f64 / bound as f64);
            calls += 1;
        }
        let l1 = common::random_list(&run, seed);
        let l2 = common::random_list(&run, seed + 3);
        let t1 = LabelTree::from_run(&run, &l1, &t).map_err(|e| e.to_string())?;
        let t2 = LabelTree::from_run(&run, &l2, &t).map_err(|e| e.to_string())?;
        let (_, stats) = answer_all_pairs(&t1, &t2, &t).map_err(|e| e.to_string())?;
        let size = g.size() as u64;
        let limit = 8 * (l1.len() as u64 + l2.len() as u64 + size * size);
        let level = stats.max_level_work();
        check(level <= limit, || format!("seed {seed}: level work {level} exceeds {limit}"))?;
        worst_level = worst_level.max(level as f64 / limit as f64);
    }
    Ok(format!(
        "{calls} pairwise calls, peak {:.0}% of the product bound; {instances} merges, peak {:.1}% of the level bound",
        worst_ops * 100.0,
        worst_level * 100.0
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("fixture reproduction", fixture_reproduction),
        ("pairwise oracle equivalence", pairwise_oracle),
        ("all-pairs oracle equivalence", allpairs_oracle),
        ("safety checker vs enumeration", safety_enumeration),
        ("DFA correctness and minimality", dfa_correctness),
        ("general query agreement", general_queries),
        ("performance trends", performance_trends),
        ("complexity guards", complexity_guards),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} [{secs:.1}s] {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL {name} [{secs:.1}s] {detail}", i + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

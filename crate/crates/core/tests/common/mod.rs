#![allow(dead_code)]

pub mod oracles;

use provq_core::derivation::{random_run, Run, RunConfig};
use provq_core::grammar::Grammar;
use provq_core::regex::Regex;
use provq_core::safety::is_safe_query;
use provq_core::synth::{gen_queries, gen_safe_queries, gen_synthetic_spec, QueryKind, SynthParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random grammar with at most `max_composite` composite modules and 40
/// modules overall.
pub fn grammar(rng: &mut impl Rng, max_composite: usize) -> Grammar {
    let nc = rng.gen_range(2..=max_composite);
    let params = SynthParams {
        size: rng.gen_range(4 * nc..=12 * nc + 20),
        num_composite: nc,
        num_cycles: rng.gen_range(0..=nc.min(3)),
        max_degree: rng.gen_range(1..=3),
        seed: rng.gen(),
    };
    let spec = gen_synthetic_spec(&params);
    assert!(spec.modules.len() <= 40);
    Grammar::new(spec).expect("generated specs validate")
}

/// A random grammar of at most 40 modules and a run of at most
/// `max_edges` edges drawn from it.
pub fn instance(seed: u64, max_edges: usize) -> (Grammar, Run) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    loop {
        let g = grammar(&mut rng, 12);
        let target = rng.gen_range(10..=max_edges / 2);
        let cfg = RunConfig::new(target, rng.gen(), rng.gen_range(0.2..0.9));
        let run = random_run(&g, &cfg).run;
        if run.num_edges() <= max_edges && run.num_nodes() > 1 {
            return (g, run);
        }
    }
}

/// A safe query with at most six DFA states, if one is found. Odd seeds
/// prefer `_*.a._*`-shaped queries.
pub fn safe_query(g: &Grammar, seed: u64) -> Option<Regex> {
    if seed % 2 == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..40 {
            let k = rng.gen_range(1..=2);
            let q = gen_queries(&QueryKind::Ifq(k), g.spec(), 1, rng.gen()).remove(0);
            let (safe, _, dfa) = is_safe_query(g.spec(), &q);
            if safe && dfa.num_states() <= 6 {
                return Some(q);
            }
        }
    }
    gen_safe_queries(g.spec(), 1, 6, seed).pop()
}

/// `count` node pairs, half drawn from `positives` when it is non-empty.
pub fn sample_pairs(run: &Run, positives: &[(u32, u32)], count: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = run.num_nodes() as u32;
    (0..count)
        .map(|i| {
            if i % 2 == 0 && !positives.is_empty() {
                positives[rng.gen_range(0..positives.len())]
            } else {
                (rng.gen_range(0..n), rng.gen_range(0..n))
            }
        })
        .collect()
}

/// A random subset of the run's nodes.
pub fn random_list(run: &Run, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.gen_range(0.05..1.0);
    (0..run.num_nodes() as u32).filter(|_| rng.gen_bool(p)).collect()
}

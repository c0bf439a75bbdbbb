use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DerivationState, Run};
use crate::grammar::{Grammar, ModuleKind};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub target_edges: usize,
    pub seed: u64,
    /// Probability in `[0, 1]` that reaching a cycle starts an unfolding; it
    /// also scales the mean unfolding length.
    pub recursion_bias: f64,
    /// Restrict unfoldings to one 0-based cycle, except where forced.
    pub focus_cycle: Option<usize>,
}

impl RunConfig {
    pub fn new(target_edges: usize, seed: u64, recursion_bias: f64) -> Self {
        RunConfig {
            target_edges,
            seed,
            recursion_bias,
            focus_cycle: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomRun {
    pub run: Run,
    /// Set when no attempt landed in `[target, 2 * target]` edges.
    pub warning: Option<String>,
    pub attempts: u32,
}

/// Minimal number of edges each production and module adds before the
/// derivation below it is complete, with the production achieving it.
/// Computed by processing modules in order of final cost, so following the
/// chosen productions always terminates.
pub(crate) struct Completion {
    pub module_cost: Vec<u64>,
    pub prod_cost: Vec<u64>,
    pub best: Vec<usize>,
}

pub(crate) fn min_completion(g: &Grammar) -> Completion {
    let spec = g.spec();
    let nm = spec.modules.len();
    let np = spec.productions.len();
    let mut module_cost = vec![0u64; nm];
    let mut done: Vec<bool> = spec.modules.iter().map(|m| m.kind == ModuleKind::Atomic).collect();
    let mut best = vec![usize::MAX; nm];
    let mut partial = vec![0u64; np];
    let mut remaining = vec![0usize; np];
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); nm];
    let mut heap = BinaryHeap::new();
    for (k0, p) in spec.productions.iter().enumerate() {
        partial[k0] = p.rhs.edges.len() as u64;
        for m in &p.rhs.nodes {
            if !done[m.index()] {
                remaining[k0] += 1;
                uses[m.index()].push(k0);
            }
        }
        if remaining[k0] == 0 {
            heap.push(Reverse((partial[k0], k0)));
        }
    }
    while let Some(Reverse((c, k0))) = heap.pop() {
        let m = spec.productions[k0].lhs.index();
        if done[m] {
            continue;
        }
        done[m] = true;
        module_cost[m] = c;
        best[m] = k0;
        for &k in &uses[m] {
            partial[k] += c;
            remaining[k] -= 1;
            if remaining[k] == 0 {
                heap.push(Reverse((partial[k], k)));
            }
        }
    }
    let prod_cost = spec
        .productions
        .iter()
        .map(|p| {
            p.rhs.edges.len() as u64 + p.rhs.nodes.iter().map(|m| module_cost[m.index()]).sum::<u64>()
        })
        .collect();
    Completion {
        module_cost,
        prod_cost,
        best,
    }
}

fn geometric(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 1.0 {
        return 1;
    }
    let p = 1.0 / mean;
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    1 + (u.ln() / (1.0 - p).ln()).floor() as u64
}

fn attempt(g: &Grammar, cfg: &RunConfig, comp: &Completion, level: u32, stream: u64) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let bias = cfg.recursion_bias.clamp(0.0, 1.0);
    let escalate = 0.5f64.powi(level as i32);
    let start_prob = 1.0 - (1.0 - bias) * escalate;
    let mean = (1.0 + bias * cfg.target_edges as f64) / escalate;
    let target = cfg.target_edges as u64;

    let mut st = DerivationState::init(g);
    let mut est = comp.module_cost[g.spec().start.index()];
    while !st.frontier().is_empty() {
        let v = st.frontier()[rng.gen_range(0..st.frontier().len())];
        let m = st.module_of(v);
        let prods = g.productions_of(m);
        let cyclic = prods.iter().copied().find(|&k0| g.cycle_step(k0).is_some());
        let others: Vec<usize> = prods
            .iter()
            .copied()
            .filter(|&k0| Some(k0) != cyclic)
            .collect();
        let mut budget = 0;
        let k0 = if est >= target {
            comp.best[m.index()]
        } else if let Some(kc) = cyclic {
            let cycle = g.cycle_step(kc).expect("cyclic production").cycle;
            let recurse = match st.continuation(v) {
                Some(c) if c.cycle as usize == cycle => c.budget > 0,
                _ => {
                    let allowed = cfg.focus_cycle.is_none_or(|f| f == cycle);
                    if allowed && rng.gen_bool(start_prob) {
                        budget = geometric(&mut rng, mean);
                        true
                    } else {
                        false
                    }
                }
            };
            if recurse || others.is_empty() {
                kc
            } else {
                others[rng.gen_range(0..others.len())]
            }
        } else {
            prods[rng.gen_range(0..prods.len())]
        };
        est = est + comp.prod_cost[k0] - comp.module_cost[m.index()];
        st.fire_with_budget(v, k0 as u32 + 1, budget)
            .expect("frontier node and matching production");
    }
    st.finish(cfg.seed).expect("frontier is empty")
}

/// Derives a random run with between `target_edges` and twice that many
/// edges. Unfoldings start with probability `recursion_bias` and last a
/// geometric number of steps; growth stops once the cheapest completion of
/// the frontier would reach the target. Attempts that fall short retry with
/// more recursion.
pub fn random_run(g: &Grammar, cfg: &RunConfig) -> RandomRun {
    const MAX_ATTEMPTS: u32 = 24;
    let comp = min_completion(g);
    let target = cfg.target_edges.max(1);
    let mut level = 0;
    let mut closest: Option<(usize, Run)> = None;
    for a in 0..MAX_ATTEMPTS {
        let run = attempt(g, cfg, &comp, level, a as u64);
        let n = run.num_edges();
        if (target..=2 * target).contains(&n) {
            return RandomRun {
                run,
                warning: None,
                attempts: a + 1,
            };
        }
        let gap = if n < target { target - n } else { n - 2 * target };
        if closest.as_ref().is_none_or(|(d, _)| gap < *d) {
            closest = Some((gap, run));
        }
        if n < target {
            level += 1;
        }
    }
    let (_, run) = closest.expect("at least one attempt");
    let warning = Some(format!(
        "spec {} cannot reach {} edges; returning a run with {} edges",
        g.spec().name,
        target,
        run.num_edges()
    ));
    RandomRun {
        run,
        warning,
        attempts: MAX_ATTEMPTS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::grammar::{Grammar, SpecBuilder};

    #[test]
    fn completion_costs_on_fixture() {
        let g = fixtures::paper_grammar();
        let c = min_completion(&g);
        let id = |n: &str| g.spec().module_id(n).unwrap().index();
        assert_eq!(c.module_cost[id("A")], 1);
        assert_eq!(c.module_cost[id("B")], 1);
        assert_eq!(c.module_cost[id("S")], 6);
        assert_eq!(c.best[id("A")], 2);
    }

    #[test]
    fn fixture_runs_land_in_range() {
        let g = fixtures::paper_grammar();
        for target in [1, 6, 10, 50, 300] {
            for seed in 0..5 {
                for bias in [0.0, 0.5, 1.0] {
                    let r = random_run(&g, &RunConfig::new(target, seed, bias));
                    let n = r.run.num_edges();
                    if target <= 6 {
                        assert_eq!(n, 6);
                    } else {
                        assert!(r.warning.is_none());
                        assert!(n >= target && n <= 2 * target, "{target} {n}");
                    }
                    assert!(r.run.topological_order().is_some());
                }
            }
        }
    }

    #[test]
    fn same_seed_same_run() {
        let g = fixtures::paper_grammar();
        let cfg = RunConfig::new(200, 7, 0.4);
        assert_eq!(random_run(&g, &cfg).run, random_run(&g, &cfg).run);
    }

    #[test]
    fn acyclic_spec_falls_back_with_warning() {
        let mut b = SpecBuilder::new("small");
        b.start("S").production("S", &["a", "b"], &[(0, 1, "a")], 0, 1);
        let g = Grammar::new(b.build()).unwrap();
        let r = random_run(&g, &RunConfig::new(10, 1, 0.5));
        assert_eq!(r.run.num_edges(), 1);
        assert!(r.warning.unwrap().contains("cannot reach"));
    }
}

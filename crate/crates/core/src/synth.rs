//! Synthetic specifications, runs and queries for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derivation::{DerivationState, Run};
use crate::grammar::{Grammar, SpecBuilder, WorkflowSpec};
use crate::regex::{ifq, Regex};
use crate::safety::is_safe_query;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SynthParams {
    /// Target of the sum over productions of one plus the right-hand side
    /// length.
    pub size: usize,
    pub num_composite: usize,
    pub num_cycles: usize,
    /// Cap on the out-degree inside a right-hand side.
    pub max_degree: usize,
    pub seed: u64,
}

const ATOMIC_NAMES: [&str; 12] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"];

struct Plan {
    lhs: usize,
    len: usize,
    /// `(position, composite)` references fixed before filling.
    refs: Vec<(usize, usize)>,
}

/// A validated, strictly linear-recursive spec. Edge tags name the module at
/// the edge's source.
pub fn gen_synthetic_spec(p: &SynthParams) -> WorkflowSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let nc = p.num_composite.max(1);
    let ncy = p.num_cycles.min(nc);
    let atoms = (p.size / 60).clamp(3, ATOMIC_NAMES.len());
    let max_degree = p.max_degree.max(1);

    // Cycle groups are runs of consecutive composites.
    let mut group_end: Vec<usize> = (1..=nc).collect();
    let mut cycle_next: Vec<Option<usize>> = vec![None; nc];
    if ncy > 0 {
        let stride = nc / ncy;
        for g in 0..ncy {
            let start = g * stride;
            let len = if stride >= 2 { rng.gen_range(1..=2) } else { 1 };
            for m in start..start + len {
                group_end[m] = start + len;
                cycle_next[m] = Some(if m + 1 < start + len { m + 1 } else { start });
            }
        }
    }
    let in_group_tail = |j: usize| cycle_next.iter().enumerate().any(|(m, n)| *n == Some(j) && m < j);

    let mut plans: Vec<Plan> = Vec::new();
    let mut first_plan = vec![0usize; nc];
    for m in 0..nc {
        first_plan[m] = plans.len();
        let count = if cycle_next[m].is_some() {
            rng.gen_range(2..=3)
        } else {
            rng.gen_range(1..=3)
        };
        for _ in 0..count {
            plans.push(Plan {
                lhs: m,
                len: 2,
                refs: Vec::new(),
            });
        }
    }
    let mut budget = p.size.saturating_sub(plans.iter().map(|pl| 1 + pl.len).sum());
    while budget > 0 {
        let at = rng.gen_range(0..plans.len());
        plans[at].len += 1;
        budget -= 1;
    }

    // The first production of a cycle member recurses; every composite
    // outside a group tail gets one parent earlier in the order.
    let count_of = |m: usize, plans: &[Plan]| plans.iter().filter(|pl| pl.lhs == m).count();
    let mut want: Vec<Vec<usize>> = vec![Vec::new(); plans.len()];
    for m in 0..nc {
        if let Some(next) = cycle_next[m] {
            want[first_plan[m]].push(next);
        }
    }
    for j in 1..nc {
        if in_group_tail(j) {
            continue;
        }
        let parent = rng.gen_range(0..j);
        let lo = if cycle_next[parent].is_some() { 1 } else { 0 };
        let n = count_of(parent, &plans);
        let slot = first_plan[parent] + rng.gen_range(lo.min(n - 1)..n);
        want[slot].push(j);
    }
    for (k, pl) in plans.iter_mut().enumerate() {
        let m = pl.lhs;
        let recursive = cycle_next[m].is_some() && k == first_plan[m];
        let mut refs = std::mem::take(&mut want[k]);
        for _ in 0..pl.len {
            if group_end[m] < nc && rng.gen_bool(0.12) {
                refs.push(rng.gen_range(group_end[m]..nc));
            }
        }
        if !recursive {
            refs.retain(|&j| j >= group_end[m]);
        }
        pl.len = pl.len.max(refs.len());
        let mut positions: Vec<usize> = (0..pl.len).collect();
        positions.shuffle(&mut rng);
        pl.refs = positions.into_iter().zip(refs).collect();
    }

    let mut b = SpecBuilder::new(format!("synth_{}", p.seed));
    let comp = |m: usize| format!("M{m}");
    b.start(&comp(0));
    for pl in &plans {
        let mut names: Vec<String> = (0..pl.len)
            .map(|_| ATOMIC_NAMES[rng.gen_range(0..atoms)].to_string())
            .collect();
        for &(pos, j) in &pl.refs {
            names[pos] = comp(j);
        }
        let n = pl.len;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut out_deg = vec![0usize; n];
        for j in 1..n {
            let i = rng.gen_range(0..j);
            edges.push((i, j));
            out_deg[i] += 1;
        }
        for i in 0..n.saturating_sub(1) {
            while out_deg[i] < max_degree && rng.gen_bool(0.15) {
                let j = rng.gen_range(i + 1..n);
                if !edges.contains(&(i, j)) {
                    edges.push((i, j));
                }
                out_deg[i] += 1;
            }
            if !edges.iter().any(|&(s, _)| s == i) {
                edges.push((i, rng.gen_range(i + 1..n)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let node_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let tagged: Vec<(usize, usize, &str)> =
            edges.iter().map(|&(s, d)| (s, d, node_refs[s])).collect();
        b.production(&comp(pl.lhs), &node_refs, &tagged, 0, n - 1);
    }
    b.build()
}

pub const FORK_SPEC: &str = "\
spec fork
start M
prod 1 M
  node 1 a
  node 2 M
  node 3 A
  node 4 b
  edge 1 2 a
  edge 1 3 a
  edge 2 4 M
  edge 3 4 A
  source 1
  sink 4
end
prod 2 M
  node 1 A
  source 1
  sink 1
end
prod 3 A
  node 1 c
  node 2 d
  edge 1 2 c
  source 1
  sink 2
end
";

/// A distributor `a` forks into a recursive call and a worker `A`, joined
/// by the aggregator `b`.
pub fn fork_spec() -> WorkflowSpec {
    let mut b = SpecBuilder::new("fork");
    b.start("M")
        .production(
            "M",
            &["a", "M", "A", "b"],
            &[(0, 1, "a"), (0, 2, "a"), (1, 3, "M"), (2, 3, "A")],
            0,
            3,
        )
        .production("M", &["A"], &[], 0, 0)
        .production("A", &["c", "d"], &[(0, 1, "c")], 0, 1);
    b.build()
}

/// Edges added by one fork level.
pub const FORK_EDGES_PER_LEVEL: usize = 5;

/// Fires the fork `levels` times, then closes every branch.
pub fn fork_run(g: &Grammar, levels: usize) -> Run {
    let mut st = DerivationState::init(g);
    let spec = g.spec();
    let m = spec.module_id("M").expect("fork spec");
    let mut fired = 0;
    while let Some(&id) = st.frontier().first() {
        let k = if st.module_of(id) == m {
            if fired < levels {
                fired += 1;
                1
            } else {
                2
            }
        } else {
            3
        };
        st.fire(id, k).expect("fork productions apply");
    }
    st.finish(levels as u64).expect("complete")
}

/// Shape of generated queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryKind {
    /// `_*.a1._*. ... .ak._*` with random tags.
    Ifq(usize),
    /// `tag*`.
    Star(String),
    /// A random symbol grown by this many random operators.
    Random(usize),
}

fn random_leaf(rng: &mut ChaCha8Rng, gamma: &[String]) -> Regex {
    match rng.gen_range(0..10) {
        0 => Regex::Wildcard,
        1 => Regex::star(Regex::Wildcard),
        _ => Regex::Symbol(gamma[rng.gen_range(0..gamma.len())].clone()),
    }
}

fn random_query(rng: &mut ChaCha8Rng, gamma: &[String], ops: usize) -> Regex {
    let mut r = Regex::Symbol(gamma[rng.gen_range(0..gamma.len())].clone());
    for _ in 0..ops {
        r = match rng.gen_range(0..10) {
            0..=3 => {
                let leaf = random_leaf(rng, gamma);
                if rng.gen_bool(0.5) {
                    Regex::concat(r, leaf)
                } else {
                    Regex::concat(leaf, r)
                }
            }
            4..=6 => {
                let leaf = random_leaf(rng, gamma);
                Regex::alt(r, leaf)
            }
            7 | 8 => match r {
                Regex::Star(_) | Regex::Plus(_) => Regex::concat(r, random_leaf(rng, gamma)),
                other => Regex::star(other),
            },
            _ => match r {
                Regex::Star(_) | Regex::Plus(_) => Regex::alt(r, random_leaf(rng, gamma)),
                other => Regex::plus(other),
            },
        };
    }
    r
}

/// `count` queries over the spec's tags.
pub fn gen_queries(kind: &QueryKind, spec: &WorkflowSpec, count: usize, seed: u64) -> Vec<Regex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = &spec.tags;
    if gamma.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| match kind {
            QueryKind::Ifq(k) => {
                let syms: Vec<&str> = (0..*k)
                    .map(|_| gamma[rng.gen_range(0..gamma.len())].as_str())
                    .collect();
                ifq(&syms)
            }
            QueryKind::Star(tag) => Regex::star(Regex::sym(tag)),
            QueryKind::Random(ops) => random_query(&mut rng, gamma, *ops),
        })
        .collect()
}

/// Random queries that are safe for `spec` with at most `max_states` DFA
/// states. Gives up after `count * 400` candidates.
pub fn gen_safe_queries(spec: &WorkflowSpec, count: usize, max_states: usize, seed: u64) -> Vec<Regex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count && tries < count * 400 {
        tries += 1;
        let ops = rng.gen_range(0..=4);
        let q = gen_queries(&QueryKind::Random(ops), spec, 1, rng.gen()).remove(0);
        let (safe, _, dfa) = is_safe_query(spec, &q);
        if safe && dfa.num_states() <= max_states {
            out.push(q);
        }
    }
    out
}

//! The bundled example grammar and run.

use crate::derivation::{DerivationState, Run};
use crate::grammar::{parse_spec, Grammar, SpecBuilder, WorkflowSpec};

pub const PAPER_SPEC: &str = "\
spec paperG
start S
prod 1 S
  node 1 c
  node 2 A
  node 3 B
  node 4 b
  edge 1 2 c
  edge 1 3 c
  edge 2 4 A
  edge 3 4 B
  source 1
  sink 4
end
prod 2 A
  node 1 a
  node 2 A
  node 3 d
  edge 1 2 a
  edge 2 3 A
  source 1
  sink 3
end
prod 3 A
  node 1 e
  node 2 e
  edge 1 2 e
  source 1
  sink 2
end
prod 4 B
  node 1 b
  node 2 b
  edge 1 2 b
  source 1
  sink 2
end
";

/// The example grammar built in memory; equal to parsing [`PAPER_SPEC`].
pub fn paper_spec() -> WorkflowSpec {
    let mut b = SpecBuilder::new("paperG");
    b.start("S")
        .production(
            "S",
            &["c", "A", "B", "b"],
            &[(0, 1, "c"), (0, 2, "c"), (1, 3, "A"), (2, 3, "B")],
            0,
            3,
        )
        .production("A", &["a", "A", "d"], &[(0, 1, "a"), (1, 2, "A")], 0, 2)
        .production("A", &["e", "e"], &[(0, 1, "e")], 0, 1)
        .production("B", &["b", "b"], &[(0, 1, "b")], 0, 1);
    b.build()
}

pub fn paper_grammar() -> Grammar {
    Grammar::new(paper_spec()).expect("bundled grammar is valid")
}

/// Firing sequence of the example run as `(name, occurrence, production)`.
pub const PAPER_RUN_FIRINGS: [(&str, u32, u32); 5] =
    [("S", 1, 1), ("A", 1, 2), ("A", 2, 2), ("A", 3, 3), ("B", 1, 4)];

pub const PAPER_RUN_EDGES: [(&str, &str, &str); 10] = [
    ("c:1", "a:1", "c"),
    ("c:1", "b:2", "c"),
    ("a:1", "a:2", "a"),
    ("a:2", "e:1", "a"),
    ("e:1", "e:2", "e"),
    ("e:2", "d:2", "A"),
    ("d:2", "d:1", "A"),
    ("d:1", "b:1", "A"),
    ("b:2", "b:3", "b"),
    ("b:3", "b:1", "B"),
];

/// Derives the example run: `a` twice through the recursion, then `e e`.
pub fn paper_run(g: &Grammar) -> Run {
    let mut st = DerivationState::init(g);
    for (name, occ, k) in PAPER_RUN_FIRINGS {
        let id = st.find(name, occ).expect("firing target exists");
        st.fire(id, k).expect("firing is valid");
    }
    st.finish(0).expect("derivation is complete")
}

/// Parses the bundled spec text.
pub fn parsed_paper_spec() -> WorkflowSpec {
    parse_spec(PAPER_SPEC).expect("bundled spec text parses")
}

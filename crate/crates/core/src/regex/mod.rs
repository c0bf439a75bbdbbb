//! Query syntax, compilation to minimal DFAs, and query-shape recognition.

mod ast;
mod dfa;

pub use ast::{ifq, match_ifq, parse_regex, Regex, RegexError};
pub use dfa::Dfa;

/// Compiles `ast` to its minimal DFA over the tag alphabet `gamma`.
pub fn compile_minimal_dfa(ast: &Regex, gamma: &[String]) -> Dfa {
    Dfa::compile(ast, gamma)
}

/// Direct membership test on the syntax tree. Exponential in the worst case;
/// meant for short words.
pub fn ast_matches(ast: &Regex, word: &[&str]) -> bool {
    fn ends(r: &Regex, word: &[&str], from: usize) -> Vec<usize> {
        match r {
            Regex::Epsilon => vec![from],
            Regex::Wildcard => {
                if from < word.len() {
                    vec![from + 1]
                } else {
                    vec![]
                }
            }
            Regex::Symbol(s) => {
                if from < word.len() && word[from] == s {
                    vec![from + 1]
                } else {
                    vec![]
                }
            }
            Regex::Concat(a, b) => {
                let mut out = Vec::new();
                for mid in ends(a, word, from) {
                    out.extend(ends(b, word, mid));
                }
                out.sort_unstable();
                out.dedup();
                out
            }
            Regex::Alt(a, b) => {
                let mut out = ends(a, word, from);
                out.extend(ends(b, word, from));
                out.sort_unstable();
                out.dedup();
                out
            }
            Regex::Star(a) | Regex::Plus(a) => {
                let mut reached = vec![false; word.len() + 1];
                let mut frontier = vec![from];
                let mut out = Vec::new();
                if matches!(r, Regex::Star(_)) {
                    out.push(from);
                }
                while let Some(p) = frontier.pop() {
                    for q in ends(a, word, p) {
                        if !reached[q] {
                            reached[q] = true;
                            out.push(q);
                            frontier.push(q);
                        }
                    }
                }
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }
    ends(ast, word, 0).contains(&word.len())
}

//! Regular path queries over workflow runs generated by context-free graph
//! grammars.
//!
//! Runs are derived from a [`grammar::Grammar`] and every node receives a
//! compact label when it is created. Queries are compiled to minimal DFAs;
//! when a query is safe for the grammar, pairs of labels can be decoded
//! against small precomputed tables without touching the run at all.

pub mod allpairs;
pub mod bench;
pub mod decoder;
pub mod derivation;
pub mod fixtures;
pub mod general;
pub mod grammar;
pub mod intersection;
pub mod matrix;
pub mod regex;
pub mod relation;
pub mod safety;
pub mod synth;

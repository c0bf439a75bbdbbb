use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// One edge of the compressed parse tree.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum LabelEntry {
    /// Child at 1-based position `i` of production `k`.
    Prod { k: u32, i: u32 },
    /// Child `i` (1-based) of a recursive node unfolding cycle `s` from its
    /// `t`-th edge.
    Rec { s: u32, t: u32, i: u32 },
}

impl LabelEntry {
    /// The ordinal among siblings.
    pub fn position(self) -> u32 {
        match self {
            LabelEntry::Prod { i, .. } | LabelEntry::Rec { i, .. } => i,
        }
    }

    pub fn is_rec(self) -> bool {
        matches!(self, LabelEntry::Rec { .. })
    }

    fn key(self) -> (u32, u8, u32, u32) {
        match self {
            LabelEntry::Prod { k, i } => (i, 0, k, 0),
            LabelEntry::Rec { s, t, i } => (i, 1, s, t),
        }
    }
}

impl Ord for LabelEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for LabelEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LabelEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelEntry::Prod { k, i } => write!(f, "({k},{i})"),
            LabelEntry::Rec { s, t, i } => write!(f, "({s},{t},{i})"),
        }
    }
}

/// Root-to-node path in the compressed parse tree. Ordered
/// lexicographically by entries.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct NodeLabel(pub Vec<LabelEntry>);

impl NodeLabel {
    pub fn entries(&self) -> &[LabelEntry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed label `{text}`: {reason}")]
pub struct LabelParseError {
    pub text: String,
    pub reason: String,
}

impl FromStr for NodeLabel {
    type Err = LabelParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| LabelParseError {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let mut entries = Vec::new();
        let mut rest = text.trim();
        if rest.is_empty() {
            return Err(fail("empty label"));
        }
        while !rest.is_empty() {
            let inner_end = rest.find(')').ok_or_else(|| fail("missing `)`"))?;
            let group = rest
                .strip_prefix('(')
                .map(|r| &r[..inner_end - 1])
                .ok_or_else(|| fail("expected `(`"))?;
            let nums: Result<Vec<u32>, _> = group.split(',').map(|n| n.trim().parse::<u32>()).collect();
            let nums = nums.map_err(|_| fail("entry components must be non-negative integers"))?;
            if nums.contains(&0) {
                return Err(fail("entry components are 1-based"));
            }
            entries.push(match nums[..] {
                [k, i] => LabelEntry::Prod { k, i },
                [s, t, i] => LabelEntry::Rec { s, t, i },
                _ => return Err(fail("entries have two or three components")),
            });
            rest = &rest[inner_end + 1..];
        }
        Ok(NodeLabel(entries))
    }
}

/// Splits two labels at their longest common prefix.
pub fn lcp_split<'a>(
    u: &'a [LabelEntry],
    v: &'a [LabelEntry],
) -> (&'a [LabelEntry], &'a [LabelEntry], &'a [LabelEntry]) {
    let n = u.iter().zip(v).take_while(|(a, b)| a == b).count();
    (&u[..n], &u[n..], &v[n..])
}

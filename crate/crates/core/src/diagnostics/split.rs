//! Partitioning simulations by a property of their data.

use super::RankSet;
use crate::engine::SbcRun;

#[derive(Clone, Debug, PartialEq)]
pub struct SplitRanks {
    /// Simulations whose data satisfy the predicate.
    pub matching: RankSet,
    pub rest: RankSet,
}

impl SplitRanks {
    /// Names of empty parts, for which diagnostics are skipped.
    pub fn empty_parts(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.matching.is_empty() {
            out.push("matching");
        }
        if self.rest.is_empty() {
            out.push("rest");
        }
        out
    }
}

/// Ranks of `quantity`, split by `predicate` on each simulation's data.
/// Simulation order is preserved within each part.
pub fn split_ranks<D, F>(run: &SbcRun<D>, quantity: &str, predicate: F) -> SplitRanks
where
    F: Fn(&D) -> bool,
{
    let mut matching = Vec::new();
    let mut rest = Vec::new();
    for result in &run.results {
        if let Some(q) = result.ranks.iter().find(|q| q.quantity == quantity) {
            if predicate(&result.record.data) {
                matching.push(q.stat.rank);
            } else {
                rest.push(q.stat.rank);
            }
        }
    }
    let m = run.max_rank();
    SplitRanks {
        matching: RankSet::new(matching, m).expect("engine ranks are in range"),
        rest: RankSet::new(rest, m).expect("engine ranks are in range"),
    }
}

//! What a core returns for one guess.

use crate::certificate::Declaration;
use crate::preprocess::ContextAssignment;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreOutcome {
    Accepted(ContextAssignment),
    Declared(Declaration),
}

/// Counters kept by the push-based cores. The level and potential fields
/// count violations of properties the cores are expected to keep; a correct
/// run leaves them at zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoreStats {
    pub pushes: usize,
    /// `|V| * |P|` for the context, the most pushes a run may take.
    pub push_limit: usize,
    pub level_regressions: usize,
    pub potential_failures: usize,
    /// Elementary steps of the flow core.
    pub flow_ops: u64,
}

impl CoreStats {
    pub fn absorb(&mut self, other: &CoreStats) {
        self.pushes += other.pushes;
        self.push_limit = self.push_limit.max(other.push_limit);
        self.level_regressions += other.level_regressions;
        self.potential_failures += other.potential_failures;
        self.flow_ops += other.flow_ops;
    }
}

/// Pointwise `after >= before`, where `None` stands for infinity.
pub fn levels_monotone(before: &[Option<usize>], after: &[Option<usize>]) -> bool {
    before.iter().zip(after).all(|(b, a)| match (b, a) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(b), Some(a)) => a >= b,
    })
}

/// `sum over activated v of (|V| - level(v)) * pebbles at v`.
pub fn potential(levels: &[Option<usize>], placement: &[usize]) -> u64 {
    let n = levels.len() as u64;
    placement.iter().filter_map(|&v| levels[v].map(|l| n - l as u64)).sum()
}

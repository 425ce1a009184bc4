use std::collections::{BTreeMap, BTreeSet};

use super::AgentId;

/// The opinion multiset: rated entries `(target, score)_rater` with
/// multiplicities, plus unrated placeholders `(target, ?)_rater`.
///
/// Placeholders are a set, so each can occur at most once. Every
/// operation returns a new value and leaves `self` untouched.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpinionMultiset {
    rated: BTreeMap<(AgentId, AgentId, i64), u32>,
    placeholders: BTreeSet<(AgentId, AgentId)>,
}

impl OpinionMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder used for initial opinions and tests.
    pub fn with_rated(mut self, rater: AgentId, target: AgentId, score: i64, count: u32) -> Self {
        if count > 0 {
            let m = self.rated.entry((rater, target, score)).or_insert(0);
            *m = m.saturating_add(count);
        }
        self
    }

    pub fn with_placeholder(mut self, rater: AgentId, target: AgentId) -> Self {
        self.placeholders.insert((rater, target));
        self
    }

    pub fn multiplicity(&self, rater: AgentId, target: AgentId, score: i64) -> u32 {
        self.rated.get(&(rater, target, score)).copied().unwrap_or(0)
    }

    pub fn has_placeholder(&self, rater: AgentId, target: AgentId) -> bool {
        self.placeholders.contains(&(rater, target))
    }

    /// `(rater, target, score, multiplicity)` in key order.
    pub fn rated(&self) -> impl Iterator<Item = (AgentId, AgentId, i64, u32)> + '_ {
        self.rated.iter().map(|(&(i, j, v), &m)| (i, j, v, m))
    }

    /// Scores `rater` gave `target`, with multiplicities.
    pub fn scores(&self, rater: AgentId, target: AgentId) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.rated
            .range((rater, target, i64::MIN)..=(rater, target, i64::MAX))
            .map(|(&(_, _, v), &m)| (v, m))
    }

    pub fn placeholders(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.placeholders.iter().copied()
    }

    pub fn placeholder_targets(&self, rater: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.placeholders
            .range((rater, AgentId(0))..=(rater, AgentId(usize::MAX)))
            .map(|&(_, j)| j)
    }

    pub fn is_empty(&self) -> bool {
        self.rated.is_empty() && self.placeholders.is_empty()
    }

    /// Multiset union with `{(J,?)_I, (I,?)_J}`; idempotent.
    pub fn add_placeholders(&self, i: AgentId, j: AgentId) -> Self {
        let mut next = self.clone();
        next.placeholders.insert((i, j));
        next.placeholders.insert((j, i));
        next
    }

    /// All ways `rater` can turn one of its placeholders toward an
    /// `eligible` partner into a rated entry with `score`.
    pub fn resolve_obs(&self, rater: AgentId, score: i64, eligible: &BTreeSet<AgentId>) -> Vec<Self> {
        self.resolve_obs_capped(rater, score, eligible, u32::MAX)
    }

    /// [`resolve_obs`](Self::resolve_obs) with multiplicities saturating at `cap`.
    pub fn resolve_obs_capped(
        &self,
        rater: AgentId,
        score: i64,
        eligible: &BTreeSet<AgentId>,
        cap: u32,
    ) -> Vec<Self> {
        self.placeholder_targets(rater)
            .filter(|j| eligible.contains(j))
            .map(|j| {
                let mut next = self.clone();
                next.placeholders.remove(&(rater, j));
                next.bump(rater, j, score, cap);
                next
            })
            .collect()
    }

    /// Multiset sum with `{(J,v)_I}`; placeholders are untouched.
    pub fn add_fake(&self, i: AgentId, j: AgentId, score: i64) -> Self {
        self.add_fake_capped(i, j, score, u32::MAX)
    }

    pub fn add_fake_capped(&self, i: AgentId, j: AgentId, score: i64, cap: u32) -> Self {
        let mut next = self.clone();
        next.bump(i, j, score, cap);
        next
    }

    fn bump(&mut self, i: AgentId, j: AgentId, score: i64, cap: u32) {
        let m = self.rated.entry((i, j, score)).or_insert(0);
        if *m < cap {
            *m += 1;
        }
    }

    /// True iff no rater holds two placeholders at once.
    pub fn is_well_defined(&self) -> bool {
        let mut prev = None;
        for &(i, _) in &self.placeholders {
            if prev == Some(i) {
                return false;
            }
            prev = Some(i);
        }
        true
    }

    /// Drops every entry mentioning `agent` and renumbers the rest through
    /// `remap` (entries whose agents map to `None` are dropped).
    pub fn remap(&self, remap: impl Fn(AgentId) -> Option<AgentId>) -> Self {
        let mut out = OpinionMultiset::new();
        for (&(i, j, v), &m) in &self.rated {
            if let (Some(i), Some(j)) = (remap(i), remap(j)) {
                out = out.with_rated(i, j, v, m);
            }
        }
        for &(i, j) in &self.placeholders {
            if let (Some(i), Some(j)) = (remap(i), remap(j)) {
                out.placeholders.insert((i, j));
            }
        }
        out
    }
}

/// True iff every opinion state along a path is well defined.
pub fn is_well_defined<'a>(states: impl IntoIterator<Item = &'a OpinionMultiset>) -> bool {
    states.into_iter().all(OpinionMultiset::is_well_defined)
}

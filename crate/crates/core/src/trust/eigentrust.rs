//! EigenTrust: normalized local trust, the recursive group-restricted
//! trust `t_IJ`, and global trust by damped power iteration.

use std::collections::{BTreeSet, HashMap};

use crate::system::{AgentId, Groups, OpinionMultiset};

use super::{TrustError, TrustModel, TrustValue};

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenTrustParams {
    damping: f64,
    pretrusted: Vec<AgentId>,
    epsilon: f64,
    max_iter: usize,
    per_group: bool,
}

impl EigenTrustParams {
    pub fn new(damping: f64, pretrusted: Vec<AgentId>, epsilon: f64, max_iter: usize) -> Result<Self, TrustError> {
        if !(0.0..1.0).contains(&damping) {
            return Err(TrustError::Parameter {
                name: "damping",
                value: damping,
                expected: "[0, 1)",
            });
        }
        if !(epsilon > 0.0) {
            return Err(TrustError::Parameter {
                name: "epsilon",
                value: epsilon,
                expected: "(0, inf)",
            });
        }
        if max_iter == 0 {
            return Err(TrustError::Parameter {
                name: "max_iter",
                value: 0.0,
                expected: "[1, inf)",
            });
        }
        let mut pretrusted = pretrusted;
        pretrusted.sort();
        pretrusted.dedup();
        Ok(EigenTrustParams {
            damping,
            pretrusted,
            epsilon,
            max_iter,
            per_group: false,
        })
    }

    /// Sums paths once per shared group instead of once per intermediary.
    pub fn with_per_group(mut self, per_group: bool) -> Self {
        self.per_group = per_group;
        self
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn pretrusted(&self) -> &[AgentId] {
        &self.pretrusted
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn per_group(&self) -> bool {
        self.per_group
    }
}

/// Local trust `s_IJ`: satisfactory minus unsatisfactory transactions.
pub fn eigentrust_local(opinions: &OpinionMultiset, rater: AgentId, target: AgentId) -> i64 {
    opinions.multiplicity(rater, target, 1) as i64 - opinions.multiplicity(rater, target, -1) as i64
}

/// Normalizes one row of local trust values.
///
/// Negative values count as 0. A row with no positive mass falls back to
/// the uniform distribution over `fallback` minus `me`; if that is empty
/// the row stays all zero.
pub fn eigentrust_normalize(row: &[(AgentId, i64)], me: AgentId, fallback: &[AgentId]) -> Vec<(AgentId, f64)> {
    let mass: i64 = row.iter().map(|&(_, s)| s.max(0)).sum();
    if mass > 0 {
        return row
            .iter()
            .map(|&(j, s)| (j, s.max(0) as f64 / mass as f64))
            .collect();
    }
    let targets: BTreeSet<AgentId> = fallback.iter().copied().filter(|&a| a != me).collect();
    let mut out: Vec<(AgentId, f64)> = row.iter().map(|&(j, _)| (j, 0.0)).collect();
    for &t in &targets {
        if !out.iter().any(|&(j, _)| j == t) {
            out.push((t, 0.0));
        }
    }
    out.sort_by_key(|&(j, _)| j);
    if !targets.is_empty() {
        let share = 1.0 / targets.len() as f64;
        for (j, v) in &mut out {
            if targets.contains(j) {
                *v = share;
            }
        }
    }
    out
}

/// A square matrix of normalized local trust values `c_IJ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TrustMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, TrustError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n || row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(TrustError::BadMatrix);
            }
            data.extend(row);
        }
        Ok(TrustMatrix { n, data })
    }

    /// Builds `c` for `n` agents from a state's opinions. Rows without
    /// positive feedback fall back to the pre-trusted agents, or to all
    /// other agents when there are none.
    pub fn local(n: usize, opinions: &OpinionMultiset, pretrusted: &[AgentId]) -> Self {
        let all: Vec<AgentId> = (0..n).map(AgentId).collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            let me = AgentId(i);
            let row: Vec<(AgentId, i64)> = all
                .iter()
                .filter(|&&j| j != me)
                .map(|&j| (j, eigentrust_local(opinions, me, j)))
                .collect();
            let has_pretrusted = pretrusted.iter().any(|&p| p != me);
            let fallback = if has_pretrusted { pretrusted } else { &all[..] };
            for (j, v) in eigentrust_normalize(&row, me, fallback) {
                if j.0 < n {
                    data[i * n + j.0] = v;
                }
            }
        }
        TrustMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: AgentId, j: AgentId) -> f64 {
        self.data[i.0 * self.n + j.0]
    }

    pub fn row(&self, i: AgentId) -> &[f64] {
        &self.data[i.0 * self.n..(i.0 + 1) * self.n]
    }

    /// The first row whose sum is not 1 within `tolerance`.
    pub fn non_stochastic_row(&self, tolerance: f64) -> Option<(usize, f64)> {
        (0..self.n)
            .map(|i| (i, self.row(AgentId(i)).iter().sum::<f64>()))
            .find(|&(_, s)| (s - 1.0).abs() > tolerance)
    }
}

/// Recursive trust of `rater` in `target` through shared groups.
///
/// Each intermediary contributes at most once along a path. The value is
/// clamped to `[0, 1]`.
pub fn eigentrust_recursive(
    rater: AgentId,
    target: AgentId,
    c: &TrustMatrix,
    groups: &Groups,
    per_group: bool,
) -> TrustValue {
    assert!(c.len() <= 64, "recursive trust supports at most 64 agents");
    if rater == target {
        return TrustValue::ZERO;
    }
    let start = bit(rater) | bit(target);
    let mut memo = HashMap::new();
    TrustValue::clamped(recurse(rater, target, start, c, groups, per_group, &mut memo))
}

fn bit(a: AgentId) -> u64 {
    1u64 << a.0
}

fn recurse(
    k: AgentId,
    target: AgentId,
    seen: u64,
    c: &TrustMatrix,
    groups: &Groups,
    per_group: bool,
    memo: &mut HashMap<(usize, u64), f64>,
) -> f64 {
    if let Some(&v) = memo.get(&(k.0, seen)) {
        return v;
    }
    let mut value = c.get(k, target);
    if per_group {
        for g in groups.groups_of(k).collect::<Vec<_>>() {
            for &m in groups.members(g) {
                if seen & bit(m) == 0 {
                    value += c.get(k, m) * recurse(m, target, seen | bit(m), c, groups, per_group, memo);
                }
            }
        }
    } else {
        for m in groups.partners(k) {
            if seen & bit(m) == 0 {
                value += c.get(k, m) * recurse(m, target, seen | bit(m), c, groups, per_group, memo);
            }
        }
    }
    memo.insert((k.0, seen), value);
    value
}

/// Result of the global power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTrust {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Global trust by `t <- (1 - a) C^T t + a p`, starting from row `start`
/// of `C`. `p` is uniform over the pre-trusted agents, or over everyone.
/// Stops once the L1 change drops below epsilon.
pub fn eigentrust_global(
    c: &TrustMatrix,
    start: AgentId,
    params: &EigenTrustParams,
) -> Result<GlobalTrust, TrustError> {
    if let Some((row, sum)) = c.non_stochastic_row(ROW_TOLERANCE) {
        return Err(TrustError::NotStochastic { row, sum });
    }
    let n = c.len();
    let mut p = vec![0.0; n];
    let pre: Vec<AgentId> = params.pretrusted.iter().copied().filter(|a| a.0 < n).collect();
    if pre.is_empty() {
        p.iter_mut().for_each(|v| *v = 1.0 / n as f64);
    } else {
        for a in &pre {
            p[a.0] = 1.0 / pre.len() as f64;
        }
    }

    let a = params.damping;
    let mut t = c.row(start).to_vec();
    for iteration in 1..=params.max_iter {
        let mut next: Vec<f64> = p.iter().map(|pj| a * pj).collect();
        for (i, &ti) in t.iter().enumerate() {
            if ti != 0.0 {
                for (j, cij) in c.row(AgentId(i)).iter().enumerate() {
                    next[j] += (1.0 - a) * cij * ti;
                }
            }
        }
        let delta: f64 = next.iter().zip(&t).map(|(x, y)| (x - y).abs()).sum();
        t = next;
        if delta < params.epsilon {
            return Ok(GlobalTrust {
                values: t,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(GlobalTrust {
        values: t,
        iterations: params.max_iter,
        converged: false,
    })
}

#[derive(Debug, Clone)]
pub struct EigenTrustModel {
    params: EigenTrustParams,
    agents: usize,
}

impl EigenTrustModel {
    pub fn new(params: EigenTrustParams, agents: usize) -> Self {
        EigenTrustModel { params, agents }
    }

    pub fn params(&self) -> &EigenTrustParams {
        &self.params
    }

    pub fn local_matrix(&self, opinions: &OpinionMultiset) -> TrustMatrix {
        TrustMatrix::local(self.agents, opinions, &self.params.pretrusted)
    }
}

impl TrustModel for EigenTrustModel {
    fn trust(&self, rater: AgentId, target: AgentId, groups: &Groups, opinions: &OpinionMultiset) -> TrustValue {
        let c = self.local_matrix(opinions);
        eigentrust_recursive(rater, target, &c, groups, self.params.per_group)
    }

    fn trust_matrix(&self, agents: usize, groups: &Groups, opinions: &OpinionMultiset) -> Vec<Vec<Option<TrustValue>>> {
        let c = self.local_matrix(opinions);
        (0..agents)
            .map(|i| {
                (0..agents)
                    .map(|j| {
                        (i != j).then(|| eigentrust_recursive(AgentId(i), AgentId(j), &c, groups, self.params.per_group))
                    })
                    .collect()
            })
            .collect()
    }
}

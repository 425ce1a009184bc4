//! Club-based trust: peers are organised in clubs, each managed by a
//! CDSR node. Trust inside a club grows with unanimous positive feedback;
//! trust across clubs weights the in-club reputation by the club-to-club
//! trust.

use std::collections::BTreeSet;

use crate::system::{AgentId, GroupId, Groups, OpinionMultiset};

use super::{TrustError, TrustModel, TrustValue};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClubParams {
    lambda: f64,
}

impl ClubParams {
    /// `lambda` is the reliability of a single interaction, in `(0, 1)`.
    pub fn new(lambda: f64) -> Result<Self, TrustError> {
        check_lambda(lambda)?;
        Ok(ClubParams { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn check_lambda(lambda: f64) -> Result<(), TrustError> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(TrustError::Parameter {
            name: "lambda",
            value: lambda,
            expected: "(0, 1)",
        })
    }
}

/// Club-to-club trust from `p` positive and `n` negative experiences:
/// `1 - lambda^(p - n)` when `p > n`, else 0.
pub fn club_group_trust(p: u64, n: u64, lambda: f64) -> Result<TrustValue, TrustError> {
    check_lambda(lambda)?;
    if p > n {
        Ok(TrustValue::clamped(1.0 - lambda.powf((p - n) as f64)))
    } else {
        Ok(TrustValue::ZERO)
    }
}

/// In-club reputation: `1 - lambda^p`, or 0 as soon as any experience was
/// negative.
pub fn club_member_trust(p: u64, lambda: f64, any_negative: bool) -> Result<TrustValue, TrustError> {
    check_lambda(lambda)?;
    if any_negative {
        Ok(TrustValue::ZERO)
    } else {
        Ok(TrustValue::clamped(1.0 - lambda.powf(p as f64)))
    }
}

/// Recommendation `inner` weighted by direct trust `weight`:
/// `1 - (1 - inner)^weight`, with `0^0 = 1` so a zero weight yields 0.
pub fn combine_trust(inner: TrustValue, weight: TrustValue) -> TrustValue {
    if weight.get() == 0.0 {
        return TrustValue::ZERO;
    }
    TrustValue::clamped(1.0 - (1.0 - inner.get()).powf(weight.get()))
}

/// The first group containing `agent` and at least one manager.
pub fn club_of(agent: AgentId, groups: &Groups, managers: &BTreeSet<AgentId>) -> Option<GroupId> {
    groups
        .iter()
        .find(|(_, m)| m.contains(&agent) && m.iter().any(|x| managers.contains(x)))
        .map(|(g, _)| g)
}

/// `t_IJ` under the club model. Agents outside any club get 0.
pub fn club_trust(
    rater: AgentId,
    target: AgentId,
    opinions: &OpinionMultiset,
    groups: &Groups,
    params: &ClubParams,
    managers: &BTreeSet<AgentId>,
) -> TrustValue {
    let (Some(x), Some(y)) = (club_of(rater, groups, managers), club_of(target, groups, managers)) else {
        return TrustValue::ZERO;
    };
    let lambda = params.lambda;

    let mut p = 0u64;
    let mut n = 0u64;
    for &k in groups.members(y) {
        if k != target {
            p += opinions.multiplicity(k, target, 1) as u64;
            n += opinions.multiplicity(k, target, -1) as u64;
        }
    }
    let in_club = club_member_trust(p, lambda, n > 0).expect("lambda validated");
    if x == y {
        return in_club;
    }

    let mut p_xy = 0u64;
    let mut n_xy = 0u64;
    for &a in groups.members(x) {
        for &b in groups.members(y) {
            p_xy += opinions.multiplicity(a, b, 1) as u64;
            n_xy += opinions.multiplicity(a, b, -1) as u64;
        }
    }
    let between = club_group_trust(p_xy, n_xy, lambda).expect("lambda validated");
    combine_trust(in_club, between)
}

#[derive(Debug, Clone)]
pub struct ClubModel {
    params: ClubParams,
    managers: BTreeSet<AgentId>,
}

impl ClubModel {
    pub fn new(params: ClubParams, managers: BTreeSet<AgentId>) -> Self {
        ClubModel { params, managers }
    }

    pub fn managers(&self) -> &BTreeSet<AgentId> {
        &self.managers
    }
}

impl TrustModel for ClubModel {
    fn trust(&self, rater: AgentId, target: AgentId, groups: &Groups, opinions: &OpinionMultiset) -> TrustValue {
        club_trust(rater, target, opinions, groups, &self.params, &self.managers)
    }
}

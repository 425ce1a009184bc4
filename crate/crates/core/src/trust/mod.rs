//! Trust models turning the opinion multiset and group structure into
//! pairwise trust values `t_IJ`.

mod club;
mod eigentrust;

use std::fmt;

use thiserror::Error;

use crate::system::{AgentId, Groups, ModelSpec, OpinionMultiset, SystemSpec};

pub use club::{
    club_group_trust, club_member_trust, club_of, club_trust, combine_trust, ClubModel, ClubParams,
};
pub use eigentrust::{
    eigentrust_global, eigentrust_local, eigentrust_normalize, eigentrust_recursive,
    EigenTrustModel, EigenTrustParams, GlobalTrust, TrustMatrix,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrustError {
    #[error("parameter `{name}` = {value} is outside {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("row {row} of the trust matrix sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("trust matrix is not square or has entries outside [0, 1]")]
    BadMatrix,
    #[error("unknown agent `{0}` in trust model parameters")]
    UnknownAgent(String),
}

/// A trust value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct TrustValue(f64);

impl TrustValue {
    pub const ZERO: TrustValue = TrustValue(0.0);
    pub const ONE: TrustValue = TrustValue(1.0);

    pub fn new(value: f64) -> Result<Self, TrustError> {
        if (0.0..=1.0).contains(&value) {
            Ok(TrustValue(value))
        } else {
            Err(TrustError::Parameter {
                name: "trust",
                value,
                expected: "[0, 1]",
            })
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            TrustValue(0.0)
        } else {
            TrustValue(value.clamp(0.0, 1.0))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for TrustValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Computes `t_IJ` from a state's groups and opinions.
///
/// Implementations are pure functions of their arguments.
pub trait TrustModel: Send + Sync {
    fn trust(&self, rater: AgentId, target: AgentId, groups: &Groups, opinions: &OpinionMultiset) -> TrustValue;

    /// All pairwise values; the diagonal is `None`.
    fn trust_matrix(&self, agents: usize, groups: &Groups, opinions: &OpinionMultiset) -> Vec<Vec<Option<TrustValue>>> {
        (0..agents)
            .map(|i| {
                (0..agents)
                    .map(|j| (i != j).then(|| self.trust(AgentId(i), AgentId(j), groups, opinions)))
                    .collect()
            })
            .collect()
    }
}

/// The trust model selected by a spec's `model` clause.
#[derive(Debug, Clone)]
pub enum SpecTrustModel {
    Club(ClubModel),
    EigenTrust(EigenTrustModel),
}

impl SpecTrustModel {
    pub fn from_spec(spec: &SystemSpec) -> Result<Self, TrustError> {
        match &spec.model {
            ModelSpec::Club { lambda, .. } => Ok(SpecTrustModel::Club(ClubModel::new(
                ClubParams::new(*lambda)?,
                spec.cdsr_agents(),
            ))),
            ModelSpec::EigenTrust {
                damping,
                pretrusted,
                epsilon,
                max_iter,
                per_group,
            } => {
                let pretrusted = pretrusted
                    .iter()
                    .map(|p| spec.agent_id(p).ok_or_else(|| TrustError::UnknownAgent(p.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                let params = EigenTrustParams::new(*damping, pretrusted, *epsilon, *max_iter)?
                    .with_per_group(*per_group);
                Ok(SpecTrustModel::EigenTrust(EigenTrustModel::new(params, spec.agents.len())))
            }
        }
    }
}

impl TrustModel for SpecTrustModel {
    fn trust(&self, rater: AgentId, target: AgentId, groups: &Groups, opinions: &OpinionMultiset) -> TrustValue {
        match self {
            SpecTrustModel::Club(m) => m.trust(rater, target, groups, opinions),
            SpecTrustModel::EigenTrust(m) => m.trust(rater, target, groups, opinions),
        }
    }
}

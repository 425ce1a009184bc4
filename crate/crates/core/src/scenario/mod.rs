//! Ready-made systems (a club of producers and consumers, an EigenTrust
//! peer network) and attack templates layered on top of them. Each bundle
//! carries the properties it is expected to satisfy.

mod attack;
mod club;
mod eigentrust;
mod props;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::calculus::{parse_term, ActionKind};
use crate::semantics::{Bounds, Configuration};
use crate::system::{ActionClass, Diagnostic, SystemSpec};
use crate::trust::{SpecTrustModel, TrustModel};
use crate::ttl::{parse_formula, Formula};
use crate::ParseError;

pub use attack::{apply_attack, AttackKind};
pub use club::build_club_example;
pub use eigentrust::build_eigentrust_example;
pub use props::{parse_props, write_props};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown attack kind `{0}`")]
    UnknownKind(String),
    #[error("missing parameter `{0}`")]
    MissingParam(&'static str),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("parameter `{name}` = `{value}`: {reason}")]
    BadParam {
        name: String,
        value: String,
        reason: String,
    },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("name `{0}` is already used by the base system")]
    NameClash(String),
    #[error("agent `{0}` is in no group")]
    Homeless(String),
    #[error("generated system is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Trust(#[from] crate::trust::TrustError),
}

/// A named formula, optionally with the verdict it should get.
#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub formula: Formula,
    pub expected: Option<bool>,
}

impl Property {
    pub fn new(name: impl Into<String>, formula: Formula, expected: bool) -> Self {
        Property {
            name: name.into(),
            formula,
            expected: Some(expected),
        }
    }

    fn parsed(name: &str, text: &str, expected: bool) -> Self {
        let formula = parse_formula(text).unwrap_or_else(|e| panic!("bundled property `{name}`: {e}"));
        Property::new(name, formula, expected)
    }
}

/// A system with its properties and the bounds it is meant to be explored
/// with. `observer` and `target` are the default roles attacks refer to.
#[derive(Debug, Clone)]
pub struct ScenarioBundle {
    pub spec: SystemSpec,
    pub properties: Vec<Property>,
    pub bounds: Bounds,
    pub observer: String,
    pub target: String,
    /// Names introduced by attacks; [`ScenarioBundle::base_spec`] strips them.
    pub added_agents: BTreeSet<String>,
    pub added_groups: BTreeSet<String>,
    pub added_processes: BTreeSet<String>,
    pub added_actions: BTreeSet<String>,
}

impl ScenarioBundle {
    /// Wraps a spec read from disk. Without default roles, attacks on it
    /// need `target` (and `observer` where used) in their parameters.
    pub fn from_spec(spec: SystemSpec, properties: Vec<Property>) -> Self {
        ScenarioBundle {
            spec,
            properties,
            bounds: Bounds::default(),
            observer: String::new(),
            target: String::new(),
            added_agents: BTreeSet::new(),
            added_groups: BTreeSet::new(),
            added_processes: BTreeSet::new(),
            added_actions: BTreeSet::new(),
        }
    }

    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// The spec with everything attacks introduced removed.
    pub fn base_spec(&self) -> SystemSpec {
        let mut spec = self.spec.without(&self.added_agents, &self.added_groups);
        for p in &self.added_processes {
            spec.defs.remove(p);
        }
        for a in &self.added_actions {
            spec.signature.remove(a);
            spec.classification.high.remove(a);
            spec.classification.low.remove(a);
        }
        spec.sync
            .retain(|s| !self.added_actions.contains(&s.out) && !self.added_actions.contains(&s.input));
        spec
    }
}

pub type Params = BTreeMap<String, String>;

/// Bounds for the bundled scenarios: a small opinion cap keeps the cyclic
/// raters finite, and the depth limit sits well above their diameters.
pub fn suggested_bounds() -> Bounds {
    Bounds {
        max_states: 200_000,
        max_depth: 10_000,
        opinion_cap: 2,
    }
}

/// `AG` of one implication per possible H/L synchronization: whenever the
/// governing agent can take the step, its trust in the partner clears (H)
/// or stays below (L) its threshold.
pub fn sync_guard_property(spec: &SystemSpec) -> Formula {
    let performs: Vec<BTreeSet<String>> = spec.agents.iter().map(|a| reachable_actions(spec, &a.behavior)).collect();
    let mut conjuncts = Vec::new();
    for pair in &spec.sync {
        let rel = match spec.class_of(&pair.out) {
            ActionClass::High => ">=",
            ActionClass::Low => "<",
            ActionClass::Neutral => continue,
        };
        for (i, gov) in spec.agents.iter().enumerate() {
            if !performs[i].contains(&pair.out) {
                continue;
            }
            for (j, react) in spec.agents.iter().enumerate() {
                if i == j || !performs[j].contains(&pair.input) {
                    continue;
                }
                conjuncts.push(format!(
                    "(not <{g}.{a}*{r}.{b}> or t[{g},{r}] {rel} {th})",
                    g = gov.name,
                    a = pair.out,
                    r = react.name,
                    b = pair.input,
                    th = gov.threshold,
                ));
            }
        }
    }
    if conjuncts.is_empty() {
        return Formula::True;
    }
    parse_formula(&format!("AG({})", conjuncts.join(" and "))).expect("generated guard formula parses")
}

/// Plain action names in the behaviors reachable from constant `name`.
pub(crate) fn reachable_actions(spec: &SystemSpec, name: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([name.to_string()]);
    let mut todo = vec![name.to_string()];
    let mut out = BTreeSet::new();
    while let Some(c) = todo.pop() {
        let Some(body) = spec.defs.get(&c) else { continue };
        for a in body.actions() {
            if let crate::calculus::Action::Plain(n) = a {
                if !n.is_tau() {
                    out.insert(n.name.clone());
                }
            }
        }
        for next in body.constants() {
            if seen.insert(next.to_string()) {
                todo.push(next.to_string());
            }
        }
    }
    out
}

/// Trust value `t[rater, target]` in the initial configuration of `spec`.
pub(crate) fn initial_trust(spec: &SystemSpec, rater: &str, target: &str) -> Result<f64, ScenarioError> {
    let model = SpecTrustModel::from_spec(spec)?;
    let c = Configuration::initial(spec);
    let id = |n: &str| spec.agent_id(n).ok_or_else(|| ScenarioError::UnknownAgent(n.to_string()));
    Ok(model.trust(id(rater)?, id(target)?, &c.groups, &c.opinions).get())
}

/// Incremental additions to a spec that refuse to shadow existing names.
pub(crate) struct Extender<'a> {
    pub spec: &'a mut SystemSpec,
    pub agents: BTreeSet<String>,
    pub groups: BTreeSet<String>,
    pub processes: BTreeSet<String>,
    pub actions: BTreeSet<String>,
}

impl<'a> Extender<'a> {
    pub fn new(spec: &'a mut SystemSpec) -> Self {
        Extender {
            spec,
            agents: BTreeSet::new(),
            groups: BTreeSet::new(),
            processes: BTreeSet::new(),
            actions: BTreeSet::new(),
        }
    }

    pub fn action(&mut self, name: &str, kind: ActionKind, class: ActionClass) -> Result<(), ScenarioError> {
        if !self.spec.signature.declare(name, kind) {
            return Err(ScenarioError::NameClash(name.to_string()));
        }
        self.actions.insert(name.to_string());
        match class {
            ActionClass::High => self.spec.classification.high.insert(name.to_string()),
            ActionClass::Low => self.spec.classification.low.insert(name.to_string()),
            ActionClass::Neutral => false,
        };
        Ok(())
    }

    /// Declares `out x input` with both names in `class`.
    pub fn channel(&mut self, out: &str, input: &str, class: ActionClass) -> Result<(), ScenarioError> {
        self.action(out, ActionKind::Output, class)?;
        self.action(input, ActionKind::Input, class)?;
        self.spec.sync.push(crate::system::SyncPair {
            out: out.to_string(),
            input: input.to_string(),
        });
        Ok(())
    }

    pub fn process(&mut self, name: &str, body: &str) -> Result<(), ScenarioError> {
        if self.spec.defs.contains(name) {
            return Err(ScenarioError::NameClash(name.to_string()));
        }
        let term = parse_term(body, &self.spec.signature)?;
        self.spec.defs.bind(name, term);
        self.processes.insert(name.to_string());
        Ok(())
    }

    pub fn agent(&mut self, name: &str, behavior: &str, threshold: f64) -> Result<(), ScenarioError> {
        if self.spec.agent_id(name).is_some() || self.spec.group_id(name).is_some() {
            return Err(ScenarioError::NameClash(name.to_string()));
        }
        self.spec.agents.push(crate::system::Agent {
            name: name.to_string(),
            behavior: behavior.to_string(),
            threshold,
        });
        self.agents.insert(name.to_string());
        Ok(())
    }

    pub fn join(&mut self, group: &str, agent: &str) {
        if let Some(g) = self.spec.groups.iter_mut().find(|g| g.name == group) {
            if !g.members.iter().any(|m| m == agent) {
                g.members.push(agent.to_string());
            }
        }
    }

    pub fn group(&mut self, name: &str, members: &[&str]) -> Result<(), ScenarioError> {
        if self.spec.group_id(name).is_some() || self.spec.agent_id(name).is_some() {
            return Err(ScenarioError::NameClash(name.to_string()));
        }
        self.spec.groups.push(crate::system::GroupDecl {
            name: name.to_string(),
            members: members.iter().map(|m| m.to_string()).collect(),
        });
        self.groups.insert(name.to_string());
        Ok(())
    }

    pub fn opinion(&mut self, rater: &str, target: &str, score: i64, count: u32) {
        self.spec.opinions.push(crate::system::OpinionDecl {
            rater: rater.to_string(),
            target: target.to_string(),
            score,
            count,
        });
    }
}

//! Static system description and the dynamic trust state (groups and
//! opinions).

mod emit;
mod opinions;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::calculus::{validate_definitions, Action, ActionKind, ActionSignature, Definitions};

pub use opinions::{is_well_defined, OpinionMultiset};
pub use parse::parse_system;

/// Index of an agent in [`SystemSpec::agents`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AgentId(pub usize);

/// Index of a group in [`SystemSpec::groups`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GroupId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub name: String,
    pub behavior: String,
    /// Dispositional trust threshold in `[0, 1]`.
    pub threshold: f64,
}

/// `out x input`: `out` governs the interaction and `input` reacts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SyncPair {
    pub out: String,
    pub input: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionClass {
    High,
    Low,
    Neutral,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SecurityClassification {
    pub high: BTreeSet<String>,
    pub low: BTreeSet<String>,
}

impl SecurityClassification {
    pub fn class_of(&self, action: &str) -> ActionClass {
        if self.high.contains(action) {
            ActionClass::High
        } else if self.low.contains(action) {
            ActionClass::Low
        } else {
            ActionClass::Neutral
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDecl {
    pub name: String,
    pub members: Vec<String>,
}

/// `count` copies of `(target, score)_rater` in the initial opinions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpinionDecl {
    pub rater: String,
    pub target: String,
    pub score: i64,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Club {
        lambda: f64,
        /// Behavior constants whose agents manage a club.
        cdsr: BTreeSet<String>,
    },
    EigenTrust {
        damping: f64,
        pretrusted: Vec<String>,
        epsilon: f64,
        max_iter: usize,
        /// Count a third agent once per shared group instead of once overall.
        per_group: bool,
    },
}

impl ModelSpec {
    pub const DEFAULT_CDSR: &'static str = "CDSR";

    pub fn club(lambda: f64) -> Self {
        ModelSpec::Club {
            lambda,
            cdsr: BTreeSet::from([Self::DEFAULT_CDSR.to_string()]),
        }
    }

    pub fn eigentrust() -> Self {
        ModelSpec::EigenTrust {
            damping: 0.15,
            pretrusted: Vec::new(),
            epsilon: 1e-9,
            max_iter: 1000,
            per_group: false,
        }
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::eigentrust()
    }
}

/// Group membership, indexed by [`GroupId`]. Groups may become empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Groups {
    members: Vec<BTreeSet<AgentId>>,
}

impl Groups {
    pub fn new(members: Vec<BTreeSet<AgentId>>) -> Self {
        Groups { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self, g: GroupId) -> &BTreeSet<AgentId> {
        &self.members[g.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupId, &BTreeSet<AgentId>)> {
        self.members.iter().enumerate().map(|(i, m)| (GroupId(i), m))
    }

    pub fn contains(&self, g: GroupId, a: AgentId) -> bool {
        self.members[g.0].contains(&a)
    }

    pub fn groups_of(&self, a: AgentId) -> impl Iterator<Item = GroupId> + '_ {
        self.iter().filter(move |(_, m)| m.contains(&a)).map(|(g, _)| g)
    }

    pub fn share_group(&self, a: AgentId, b: AgentId) -> bool {
        self.members.iter().any(|m| m.contains(&a) && m.contains(&b))
    }

    /// Agents other than `a` sharing at least one group with `a`.
    pub fn partners(&self, a: AgentId) -> BTreeSet<AgentId> {
        self.members
            .iter()
            .filter(|m| m.contains(&a))
            .flat_map(|m| m.iter().copied())
            .filter(|&b| b != a)
            .collect()
    }

    pub fn with_member(&self, g: GroupId, a: AgentId) -> Self {
        let mut next = self.clone();
        next.members[g.0].insert(a);
        next
    }

    pub fn without_member(&self, g: GroupId, a: AgentId) -> Self {
        let mut next = self.clone();
        next.members[g.0].remove(&a);
        next
    }
}

/// A finding from [`validate_spec`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

/// A trust adaptive system: agents, their behaviors, the synchronization
/// set, H/L classification, initial groups and opinions, and the trust model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SystemSpec {
    pub signature: ActionSignature,
    pub defs: Definitions,
    pub agents: Vec<Agent>,
    pub sync: Vec<SyncPair>,
    pub classification: SecurityClassification,
    pub groups: Vec<GroupDecl>,
    pub opinions: Vec<OpinionDecl>,
    pub model: ModelSpec,
}

/// Upper bound on agents for the recursive EigenTrust evaluation, whose
/// memo keys visited sets as 64-bit masks.
pub const MAX_EIGENTRUST_AGENTS: usize = 64;

impl SystemSpec {
    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a.name == name).map(AgentId)
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.0]
    }

    pub fn agent_name(&self, id: AgentId) -> &str {
        &self.agents[id.0].name
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn group_id(&self, name: &str) -> Option<GroupId> {
        self.groups.iter().position(|g| g.name == name).map(GroupId)
    }

    pub fn group_name(&self, id: GroupId) -> &str {
        &self.groups[id.0].name
    }

    pub fn class_of(&self, action: &str) -> ActionClass {
        self.classification.class_of(action)
    }

    /// Initial group membership; undeclared member names are skipped.
    pub fn initial_groups(&self) -> Groups {
        Groups::new(
            self.groups
                .iter()
                .map(|g| g.members.iter().filter_map(|m| self.agent_id(m)).collect())
                .collect(),
        )
    }

    /// Initial opinion multiset; entries naming undeclared agents are skipped.
    pub fn initial_opinions(&self) -> OpinionMultiset {
        self.opinions.iter().fold(OpinionMultiset::new(), |e, o| {
            match (self.agent_id(&o.rater), self.agent_id(&o.target)) {
                (Some(i), Some(j)) => e.with_rated(i, j, o.score, o.count),
                _ => e,
            }
        })
    }

    /// Agents whose behavior constant is flagged as a club manager.
    pub fn cdsr_agents(&self) -> BTreeSet<AgentId> {
        match &self.model {
            ModelSpec::Club { cdsr, .. } => self
                .agent_ids()
                .filter(|&id| cdsr.contains(&self.agent(id).behavior))
                .collect(),
            ModelSpec::EigenTrust { .. } => BTreeSet::new(),
        }
    }

    /// Copy of the spec without the named agents, their group memberships,
    /// initial opinions, and the named groups.
    pub fn without(&self, agents: &BTreeSet<String>, groups: &BTreeSet<String>) -> SystemSpec {
        let mut out = self.clone();
        out.agents.retain(|a| !agents.contains(&a.name));
        out.groups.retain(|g| !groups.contains(&g.name));
        for g in &mut out.groups {
            g.members.retain(|m| !agents.contains(m));
        }
        out.opinions
            .retain(|o| !agents.contains(&o.rater) && !agents.contains(&o.target));
        if let ModelSpec::EigenTrust { pretrusted, .. } = &mut out.model {
            pretrusted.retain(|p| !agents.contains(p));
        }
        out
    }
}

/// Static well-formedness checks; an empty result means the spec can be
/// explored.
pub fn validate_spec(spec: &SystemSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    for a in &spec.agents {
        if !seen.insert(a.name.as_str()) {
            out.push(Diagnostic::new("duplicate-agent", format!("duplicate agent `{}`", a.name)));
        }
        if !spec.defs.contains(&a.behavior) {
            out.push(Diagnostic::new(
                "unbound-behavior",
                format!("agent `{}` has unbound behavior `{}`", a.name, a.behavior),
            ));
        }
        if !(0.0..=1.0).contains(&a.threshold) {
            out.push(Diagnostic::new(
                "threshold-range",
                format!("agent `{}` threshold {} is outside [0, 1]", a.name, a.threshold),
            ));
        }
    }

    for issue in validate_definitions(&spec.defs) {
        out.push(Diagnostic::new("definition", issue.to_string()));
    }

    for (name, body) in spec.defs.iter() {
        for act in body.actions() {
            match act {
                Action::Ent(g) | Action::Esc(g) if spec.group_id(g).is_none() => {
                    out.push(Diagnostic::new(
                        "undeclared-group",
                        format!("constant `{name}` uses `{act}` with undeclared group `{g}`"),
                    ));
                }
                Action::FakeObs { target, .. } if spec.agent_id(target).is_none() => {
                    out.push(Diagnostic::new(
                        "undeclared-agent",
                        format!("constant `{name}` uses `{act}` with undeclared agent `{target}`"),
                    ));
                }
                _ => {}
            }
        }
    }

    for pair in &spec.sync {
        if spec.signature.kind(&pair.out) != Some(ActionKind::Output) {
            out.push(Diagnostic::new(
                "sync-direction",
                format!("`{}` in `{} x {}` is not a declared output", pair.out, pair.out, pair.input),
            ));
        }
        if spec.signature.kind(&pair.input) != Some(ActionKind::Input) {
            out.push(Diagnostic::new(
                "sync-direction",
                format!("`{}` in `{} x {}` is not a declared input", pair.input, pair.out, pair.input),
            ));
        }
        let (co, ci) = (spec.class_of(&pair.out), spec.class_of(&pair.input));
        if co != ci {
            out.push(Diagnostic::new(
                "class-closure",
                format!(
                    "`{} x {}` pairs {:?} with {:?}; both sides must share the H/L class",
                    pair.out, pair.input, co, ci
                ),
            ));
        }
    }

    let c = &spec.classification;
    for a in c.high.intersection(&c.low) {
        out.push(Diagnostic::new("class-overlap", format!("`{a}` is classified both H and L")));
    }
    for a in c.high.iter().chain(&c.low) {
        if spec.signature.kind(a).is_none() || a == "tau" {
            out.push(Diagnostic::new(
                "class-undeclared",
                format!("classified action `{a}` is not a declared visible action"),
            ));
        }
    }

    let mut group_names = BTreeSet::new();
    for g in &spec.groups {
        if !group_names.insert(g.name.as_str()) {
            out.push(Diagnostic::new("duplicate-group", format!("duplicate group `{}`", g.name)));
        }
        for m in &g.members {
            if spec.agent_id(m).is_none() {
                out.push(Diagnostic::new(
                    "undeclared-agent",
                    format!("group `{}` lists undeclared agent `{m}`", g.name),
                ));
            }
        }
    }

    for o in &spec.opinions {
        for who in [&o.rater, &o.target] {
            if spec.agent_id(who).is_none() {
                out.push(Diagnostic::new(
                    "undeclared-agent",
                    format!("opinion {} -> {} names undeclared agent `{who}`", o.rater, o.target),
                ));
            }
        }
        if o.rater == o.target {
            out.push(Diagnostic::new(
                "self-opinion",
                format!("agent `{}` cannot hold an opinion about itself", o.rater),
            ));
        }
    }

    match &spec.model {
        ModelSpec::Club { lambda, cdsr } => {
            if !(*lambda > 0.0 && *lambda < 1.0) {
                out.push(Diagnostic::new("model-param", format!("club lambda {lambda} is outside (0, 1)")));
            }
            for c in cdsr {
                if !spec.defs.contains(c) {
                    out.push(Diagnostic::new(
                        "model-param",
                        format!("club manager constant `{c}` is unbound"),
                    ));
                }
            }
            let managers = spec.cdsr_agents();
            let clubs: Vec<&GroupDecl> = spec
                .groups
                .iter()
                .filter(|g| {
                    g.members
                        .iter()
                        .filter_map(|m| spec.agent_id(m))
                        .any(|id| managers.contains(&id))
                })
                .collect();
            let mut count: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
            for club in &clubs {
                for m in &club.members {
                    count.entry(m).or_default().push(&club.name);
                }
            }
            for (agent, in_clubs) in count {
                if in_clubs.len() > 1 {
                    out.push(Diagnostic::new(
                        "multiple-clubs",
                        format!("agent `{agent}` belongs to several clubs: {}", in_clubs.join(", ")),
                    ));
                }
            }
        }
        ModelSpec::EigenTrust {
            damping,
            pretrusted,
            epsilon,
            max_iter,
            ..
        } => {
            if !(*damping >= 0.0 && *damping < 1.0) {
                out.push(Diagnostic::new("model-param", format!("damping {damping} is outside [0, 1)")));
            }
            if !(*epsilon > 0.0) {
                out.push(Diagnostic::new("model-param", format!("epsilon {epsilon} must be positive")));
            }
            if *max_iter == 0 {
                out.push(Diagnostic::new("model-param", "max_iter must be positive"));
            }
            for p in pretrusted {
                if spec.agent_id(p).is_none() {
                    out.push(Diagnostic::new(
                        "undeclared-agent",
                        format!("pretrusted agent `{p}` is undeclared"),
                    ));
                }
            }
            if spec.agents.len() > MAX_EIGENTRUST_AGENTS {
                out.push(Diagnostic::new(
                    "model-param",
                    format!(
                        "eigentrust supports at most {MAX_EIGENTRUST_AGENTS} agents, found {}",
                        spec.agents.len()
                    ),
                ));
            }
        }
    }
    out
}

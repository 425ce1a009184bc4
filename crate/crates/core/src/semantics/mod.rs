//! Composition semantics: enabled transitions of a configuration and
//! bounded exploration into a trust labeled transition system.

mod explore;
mod export;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::calculus::{local_steps, Action, ActionKind, ProcessTerm};
use crate::system::{ActionClass, AgentId, Diagnostic, GroupId, Groups, OpinionMultiset, SystemSpec};
use crate::trust::{TrustError, TrustModel};

pub use explore::{build_tlts, Bounds, Edge, Tlts};
pub use export::{export_dot, export_json, import_json};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    #[error("invalid specification: {}", join(.0))]
    InvalidSpec(Vec<Diagnostic>),
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error("bound `{0}` must be strictly positive")]
    Bounds(&'static str),
    #[error("cannot import transition system: {0}")]
    Import(String),
    #[error("cannot start worker threads: {0}")]
    Threads(String),
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A global state: one process term per agent, the current groups and
/// the opinion multiset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub terms: Vec<ProcessTerm>,
    pub groups: Groups,
    pub opinions: OpinionMultiset,
}

impl Configuration {
    /// Every agent at its behavior constant, with the declared groups and
    /// initial opinions.
    pub fn initial(spec: &SystemSpec) -> Self {
        Configuration {
            terms: spec
                .agents
                .iter()
                .map(|a| ProcessTerm::constant(a.behavior.clone()))
                .collect(),
            groups: spec.initial_groups(),
            opinions: spec.initial_opinions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionLabel {
    Internal(AgentId),
    /// `governing` performs output `out` and its threshold gates the step.
    Sync {
        governing: AgentId,
        out: String,
        reacting: AgentId,
        input: String,
    },
}

impl TransitionLabel {
    /// `I.tau` or `I.a*J.b`, using `agents` for names.
    pub fn render(&self, agents: &[String]) -> String {
        self.display(agents).to_string()
    }

    pub fn display<'a>(&'a self, agents: &'a [String]) -> impl fmt::Display + 'a {
        LabelDisplay { label: self, agents }
    }

    pub fn agents(&self) -> Vec<AgentId> {
        match self {
            TransitionLabel::Internal(i) => vec![*i],
            TransitionLabel::Sync {
                governing, reacting, ..
            } => vec![*governing, *reacting],
        }
    }
}

struct LabelDisplay<'a> {
    label: &'a TransitionLabel,
    agents: &'a [String],
}

impl fmt::Display for LabelDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |a: &AgentId| self.agents.get(a.0).map(String::as_str).unwrap_or("?");
        match self.label {
            TransitionLabel::Internal(i) => write!(f, "{}.tau", name(i)),
            TransitionLabel::Sync {
                governing,
                out,
                reacting,
                input,
            } => write!(f, "{}.{}*{}.{}", name(governing), out, name(reacting), input),
        }
    }
}

/// Which rule produced a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    Tau,
    Ent,
    Esc,
    SyncHigh,
    SyncLow,
    SyncNeutral,
    Obs,
    FakeObs,
}

impl RuleKind {
    pub const ALL: [RuleKind; 8] = [
        RuleKind::Tau,
        RuleKind::Ent,
        RuleKind::Esc,
        RuleKind::SyncHigh,
        RuleKind::SyncLow,
        RuleKind::SyncNeutral,
        RuleKind::Obs,
        RuleKind::FakeObs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Tau => "tau",
            RuleKind::Ent => "ent",
            RuleKind::Esc => "esc",
            RuleKind::SyncHigh => "sync-high",
            RuleKind::SyncLow => "sync-low",
            RuleKind::SyncNeutral => "sync-neutral",
            RuleKind::Obs => "obs",
            RuleKind::FakeObs => "fake-obs",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    pub fn is_sync(self) -> bool {
        matches!(self, RuleKind::SyncHigh | RuleKind::SyncLow | RuleKind::SyncNeutral)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One enabled transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub label: TransitionLabel,
    pub rule: RuleKind,
    pub target: Configuration,
}

/// Precomputed lookup tables for computing successors under one spec.
pub struct Engine<'a> {
    spec: &'a SystemSpec,
    trust: &'a dyn TrustModel,
    opinion_cap: u32,
    groups: HashMap<&'a str, GroupId>,
    agents: HashMap<&'a str, AgentId>,
    sync: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> Engine<'a> {
    pub fn new(spec: &'a SystemSpec, trust: &'a dyn TrustModel, opinion_cap: u32) -> Self {
        let mut sync: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for p in &spec.sync {
            sync.entry(p.out.as_str()).or_default().push(p.input.as_str());
        }
        Engine {
            spec,
            trust,
            opinion_cap,
            groups: spec
                .groups
                .iter()
                .enumerate()
                .map(|(i, g)| (g.name.as_str(), GroupId(i)))
                .collect(),
            agents: spec
                .agents
                .iter()
                .enumerate()
                .map(|(i, a)| (a.name.as_str(), AgentId(i)))
                .collect(),
            sync,
        }
    }

    /// All transitions enabled in `c`, in canonical order: by acting agent,
    /// then local step, then sync pair, partner and partner step.
    pub fn successors(&self, c: &Configuration) -> Vec<Step> {
        let defs = &self.spec.defs;
        let local: Vec<Vec<(Action, ProcessTerm)>> = c.terms.iter().map(|t| local_steps(t, defs)).collect();
        let mut trust_memo: HashMap<(AgentId, AgentId), f64> = HashMap::new();
        let mut out: Vec<Step> = Vec::new();
        let cap = self.opinion_cap;

        for (i, steps) in local.iter().enumerate() {
            let me = AgentId(i);
            for (action, next) in steps {
                let with_term = |groups: Groups, opinions: OpinionMultiset| {
                    let mut terms = c.terms.clone();
                    terms[i] = next.clone();
                    Configuration {
                        terms,
                        groups,
                        opinions,
                    }
                };
                match action {
                    Action::Plain(a) if a.is_tau() => push(
                        &mut out,
                        TransitionLabel::Internal(me),
                        RuleKind::Tau,
                        with_term(c.groups.clone(), c.opinions.clone()),
                    ),
                    Action::Ent(g) => {
                        if let Some(&g) = self.groups.get(g.as_str()) {
                            push(
                                &mut out,
                                TransitionLabel::Internal(me),
                                RuleKind::Ent,
                                with_term(c.groups.with_member(g, me), c.opinions.clone()),
                            );
                        }
                    }
                    Action::Esc(g) => {
                        if let Some(&g) = self.groups.get(g.as_str()) {
                            if c.groups.contains(g, me) {
                                push(
                                    &mut out,
                                    TransitionLabel::Internal(me),
                                    RuleKind::Esc,
                                    with_term(c.groups.without_member(g, me), c.opinions.clone()),
                                );
                            }
                        }
                    }
                    Action::Obs(v) => {
                        let eligible = c.groups.partners(me);
                        for e in c.opinions.resolve_obs_capped(me, *v, &eligible, cap) {
                            push(
                                &mut out,
                                TransitionLabel::Internal(me),
                                RuleKind::Obs,
                                with_term(c.groups.clone(), e),
                            );
                        }
                    }
                    Action::FakeObs { target, score } => {
                        if let Some(&j) = self.agents.get(target.as_str()) {
                            if j != me && c.groups.share_group(me, j) {
                                push(
                                    &mut out,
                                    TransitionLabel::Internal(me),
                                    RuleKind::FakeObs,
                                    with_term(c.groups.clone(), c.opinions.add_fake_capped(me, j, *score, cap)),
                                );
                            }
                        }
                    }
                    Action::Plain(a) if a.kind == ActionKind::Output => {
                        let Some(inputs) = self.sync.get(a.name.as_str()) else {
                            continue;
                        };
                        let class = self.spec.class_of(&a.name);
                        let partners = c.groups.partners(me);
                        for input in inputs {
                            for &j in &partners {
                                for (b, next_j) in &local[j.0] {
                                    let Action::Plain(b) = b else { continue };
                                    if b.kind != ActionKind::Input || b.name != *input {
                                        continue;
                                    }
                                    let rule = match class {
                                        ActionClass::High | ActionClass::Low => {
                                            let t = *trust_memo.entry((me, j)).or_insert_with(|| {
                                                self.trust.trust(me, j, &c.groups, &c.opinions).get()
                                            });
                                            let th = self.spec.agents[i].threshold;
                                            match class {
                                                ActionClass::High if t >= th => RuleKind::SyncHigh,
                                                ActionClass::Low if t < th => RuleKind::SyncLow,
                                                _ => continue,
                                            }
                                        }
                                        ActionClass::Neutral => RuleKind::SyncNeutral,
                                    };
                                    let opinions = if rule == RuleKind::SyncNeutral {
                                        c.opinions.clone()
                                    } else {
                                        c.opinions.add_placeholders(me, j)
                                    };
                                    let mut terms = c.terms.clone();
                                    terms[i] = next.clone();
                                    terms[j.0] = next_j.clone();
                                    push(
                                        &mut out,
                                        TransitionLabel::Sync {
                                            governing: me,
                                            out: a.name.clone(),
                                            reacting: j,
                                            input: b.name.clone(),
                                        },
                                        rule,
                                        Configuration {
                                            terms,
                                            groups: c.groups.clone(),
                                            opinions,
                                        },
                                    );
                                }
                            }
                        }
                    }
                    Action::Plain(_) => {}
                }
            }
        }
        out
    }
}

fn push(out: &mut Vec<Step>, label: TransitionLabel, rule: RuleKind, target: Configuration) {
    if !out.iter().any(|s| s.label == label && s.target == target) {
        out.push(Step { label, rule, target });
    }
}

/// Transitions enabled in `c` without any opinion cap.
pub fn enabled_transitions(c: &Configuration, spec: &SystemSpec, trust: &dyn TrustModel) -> Vec<Step> {
    Engine::new(spec, trust, u32::MAX).successors(c)
}

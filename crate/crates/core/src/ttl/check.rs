use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::semantics::{Configuration, Edge, RuleKind, Tlts, TransitionLabel};
use crate::system::AgentId;
use crate::trust::TrustModel;

use super::{AggregateFn, Formula, Pattern, Relation, Slot, TrustVariable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown agent `{0}` in formula")]
    UnknownAgent(String),
    #[error("trust variable `{0}` relates an agent to itself")]
    SelfTrust(String),
}

/// What the checker needs from a transition system.
pub trait TransitionSystem {
    fn state_count(&self) -> usize;
    fn initial(&self) -> usize;
    fn edges(&self, s: usize) -> &[Edge];
    /// Exploration stopped at `s`, so its outgoing edges may be incomplete.
    fn is_truncated(&self, s: usize) -> bool;
    fn agent_names(&self) -> &[String];
    /// Value of a trust variable at `s`; `None` when undefined.
    fn trust_value(&self, s: usize, var: &VarRef) -> Option<f64>;
}

/// A trust variable with resolved agent indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarRef {
    pub aggregate: Option<AggregateFn>,
    pub rater: AgentId,
    pub target: AgentId,
}

/// Evaluates a trust variable in one configuration.
///
/// Aggregates range over the multiset of scores `rater` gave `target`;
/// `min` and `max` of no scores are undefined.
pub fn eval_trust_variable(var: &VarRef, c: &Configuration, model: &dyn TrustModel) -> Option<f64> {
    match var.aggregate {
        None => Some(model.trust(var.rater, var.target, &c.groups, &c.opinions).get()),
        Some(f) => {
            let scores: Vec<(i64, u32)> = c.opinions.scores(var.rater, var.target).collect();
            match f {
                AggregateFn::Count => Some(scores.iter().map(|&(_, m)| m as f64).sum()),
                AggregateFn::Sum => Some(scores.iter().map(|&(v, m)| v as f64 * m as f64).sum()),
                AggregateFn::Min => scores.iter().map(|&(v, _)| v).min().map(|v| v as f64),
                AggregateFn::Max => scores.iter().map(|&(v, _)| v).max().map(|v| v as f64),
            }
        }
    }
}

/// A [`Tlts`] paired with the trust model it was built with.
pub struct ModelView<'a> {
    pub tlts: &'a Tlts,
    pub model: &'a dyn TrustModel,
}

impl TransitionSystem for ModelView<'_> {
    fn state_count(&self) -> usize {
        self.tlts.state_count()
    }

    fn initial(&self) -> usize {
        self.tlts.initial()
    }

    fn edges(&self, s: usize) -> &[Edge] {
        self.tlts.successors(s)
    }

    fn is_truncated(&self, s: usize) -> bool {
        self.tlts.is_truncated(s)
    }

    fn agent_names(&self) -> &[String] {
        self.tlts.agents()
    }

    fn trust_value(&self, s: usize, var: &VarRef) -> Option<f64> {
        eval_trust_variable(var, self.tlts.state(s), self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    /// Holds on the explored part, but truncated states could change it.
    TrueWithinBounds,
    FalseWithinBounds,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::TrueWithinBounds => "true-within-bounds",
            Verdict::FalseWithinBounds => "false-within-bounds",
        }
    }

    /// The verdict on the explored states, ignoring what lies beyond the
    /// bounds.
    pub fn holds(self) -> bool {
        matches!(self, Verdict::True | Verdict::TrueWithinBounds)
    }

    pub fn is_bounded(self) -> bool {
        matches!(self, Verdict::TrueWithinBounds | Verdict::FalseWithinBounds)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessStep {
    pub from: usize,
    pub label: TransitionLabel,
    pub rule: RuleKind,
    pub to: usize,
}

/// A path from the initial state. For `EF`, `EU` and `EX` it ends in a
/// state satisfying the goal; for a failed `AG` it ends in a violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub start: usize,
    pub steps: Vec<WitnessStep>,
}

impl Witness {
    pub fn end(&self) -> usize {
        self.steps.last().map_or(self.start, |s| s.to)
    }

    pub fn labels(&self, agents: &[String]) -> Vec<String> {
        self.steps.iter().map(|s| s.label.render(agents)).collect()
    }

    pub fn states(&self) -> Vec<usize> {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.to)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub verdict: Verdict,
    /// States satisfying the formula on the explored system.
    pub satisfying: Vec<usize>,
    pub witness: Option<Witness>,
    /// Whether the system had truncated states.
    pub bounded: bool,
}

/// Checks `phi` on a TLTS with the model it was built with.
pub fn check_tlts(tlts: &Tlts, phi: &Formula, model: &dyn TrustModel) -> Result<CheckResult, CheckError> {
    check(&ModelView { tlts, model }, phi)
}

/// Evaluates `phi` on every state and reports the verdict at the initial
/// state.
///
/// Truncated states are handled three ways at once: an under-approximation
/// (anything could be missing below them), an over-approximation, and the
/// plain reading of the explored graph. A verdict is definite when the
/// two approximations agree.
pub fn check<T: TransitionSystem>(ts: &T, phi: &Formula) -> Result<CheckResult, CheckError> {
    let node = resolve(phi, ts.agent_names())?;
    let ctx = Ctx::new(ts);
    let must = ctx.eval(&node, Mode::Must);
    let may = ctx.eval(&node, Mode::May);
    let plain = ctx.eval(&node, Mode::Plain);
    let q0 = ts.initial();
    let bounded = (0..ts.state_count()).any(|s| ts.is_truncated(s));

    let (verdict, mode) = if must[q0] {
        (Verdict::True, Mode::Must)
    } else if !may[q0] {
        (Verdict::False, Mode::May)
    } else if plain[q0] {
        (Verdict::TrueWithinBounds, Mode::Plain)
    } else {
        (Verdict::FalseWithinBounds, Mode::Plain)
    };
    let witness = ctx.witness(&node, mode, verdict.holds());
    Ok(CheckResult {
        verdict,
        satisfying: plain.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s).collect(),
        witness,
        bounded,
    })
}

#[derive(Debug, Clone)]
enum RPattern {
    Any,
    Internal(Option<AgentId>),
    Agent(Option<AgentId>),
    Performs(Option<AgentId>, String),
    Sync {
        governing: Option<AgentId>,
        out: Slot,
        reacting: Option<AgentId>,
        input: Slot,
    },
}

impl RPattern {
    fn matches(&self, label: &TransitionLabel) -> bool {
        let slot_ok = |s: &Option<AgentId>, a: AgentId| s.is_none_or(|x| x == a);
        let name_ok = |s: &Slot, n: &str| s.as_deref().is_none_or(|x| x == n);
        match (self, label) {
            (RPattern::Any, _) => true,
            (RPattern::Internal(a), TransitionLabel::Internal(i)) => slot_ok(a, *i),
            (RPattern::Internal(_), _) => false,
            (RPattern::Agent(a), TransitionLabel::Internal(i)) => slot_ok(a, *i),
            (RPattern::Agent(a), TransitionLabel::Sync { governing, .. }) => slot_ok(a, *governing),
            (RPattern::Performs(..), TransitionLabel::Internal(_)) => false,
            (
                RPattern::Performs(a, act),
                TransitionLabel::Sync {
                    governing,
                    out,
                    reacting,
                    input,
                },
            ) => (slot_ok(a, *governing) && out == act) || (slot_ok(a, *reacting) && input == act),
            (RPattern::Sync { .. }, TransitionLabel::Internal(_)) => false,
            (
                RPattern::Sync {
                    governing: g,
                    out: o,
                    reacting: r,
                    input: i,
                },
                TransitionLabel::Sync {
                    governing,
                    out,
                    reacting,
                    input,
                },
            ) => slot_ok(g, *governing) && name_ok(o, out) && slot_ok(r, *reacting) && name_ok(i, input),
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(bool),
    Action(RPattern),
    Trust(VarRef, Relation, f64),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Ex(RPattern, Box<Node>),
    Ef(Box<Node>),
    Ag(Box<Node>),
    Eu(Box<Node>, Box<Node>),
    Au(Box<Node>, Box<Node>),
}

fn resolve(phi: &Formula, agents: &[String]) -> Result<Node, CheckError> {
    let ids: HashMap<&str, AgentId> = agents.iter().enumerate().map(|(i, a)| (a.as_str(), AgentId(i))).collect();
    let agent = |n: &str| ids.get(n).copied().ok_or_else(|| CheckError::UnknownAgent(n.to_owned()));
    let slot = |s: &Slot| s.as_deref().map(agent).transpose();
    let pattern = |p: &Pattern| -> Result<RPattern, CheckError> {
        Ok(match p {
            Pattern::Any => RPattern::Any,
            Pattern::Internal(a) => RPattern::Internal(slot(a)?),
            Pattern::Agent(a) => RPattern::Agent(slot(a)?),
            Pattern::Performs(a, act) => RPattern::Performs(slot(a)?, act.clone()),
            Pattern::Sync {
                governing,
                out,
                reacting,
                input,
            } => RPattern::Sync {
                governing: slot(governing)?,
                out: out.clone(),
                reacting: slot(reacting)?,
                input: input.clone(),
            },
        })
    };
    fn go(
        f: &Formula,
        pattern: &dyn Fn(&Pattern) -> Result<RPattern, CheckError>,
        agent: &dyn Fn(&str) -> Result<AgentId, CheckError>,
    ) -> Result<Node, CheckError> {
        let b = |g: &Formula| go(g, pattern, agent).map(Box::new);
        Ok(match f {
            Formula::True => Node::Const(true),
            Formula::False => Node::Const(false),
            Formula::Action(p) => Node::Action(pattern(p)?),
            Formula::Trust { var, rel, k } => {
                let rater = agent(var.rater())?;
                let target = agent(var.target())?;
                if rater == target {
                    return Err(CheckError::SelfTrust(var.to_string()));
                }
                let aggregate = match var {
                    TrustVariable::Model { .. } => None,
                    TrustVariable::Aggregate { f, .. } => Some(*f),
                };
                Node::Trust(
                    VarRef {
                        aggregate,
                        rater,
                        target,
                    },
                    *rel,
                    *k,
                )
            }
            Formula::Not(a) => Node::Not(b(a)?),
            Formula::And(x, y) => Node::And(b(x)?, b(y)?),
            Formula::Or(x, y) => Node::Or(b(x)?, b(y)?),
            Formula::Ex(p, a) => Node::Ex(pattern(p)?, b(a)?),
            Formula::Ef(a) => Node::Ef(b(a)?),
            Formula::Ag(a) => Node::Ag(b(a)?),
            Formula::Eu(x, y) => Node::Eu(b(x)?, b(y)?),
            Formula::Au(x, y) => Node::Au(b(x)?, b(y)?),
        })
    }
    go(phi, &pattern, &agent)
}

/// `Must` under-approximates, `May` over-approximates, `Plain` reads the
/// explored graph as complete. Negation swaps `Must` and `May`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Must,
    May,
    Plain,
}

impl Mode {
    fn dual(self) -> Self {
        match self {
            Mode::Must => Mode::May,
            Mode::May => Mode::Must,
            Mode::Plain => Mode::Plain,
        }
    }
}

struct Ctx<'a, T: TransitionSystem> {
    ts: &'a T,
    n: usize,
    preds: Vec<Vec<usize>>,
    truncated: Vec<bool>,
}

impl<'a, T: TransitionSystem> Ctx<'a, T> {
    fn new(ts: &'a T) -> Self {
        let n = ts.state_count();
        let mut preds = vec![Vec::new(); n];
        for s in 0..n {
            for e in ts.edges(s) {
                preds[e.target].push(s);
            }
        }
        Ctx {
            ts,
            n,
            preds,
            truncated: (0..n).map(|s| ts.is_truncated(s)).collect(),
        }
    }

    fn eval(&self, node: &Node, mode: Mode) -> Vec<bool> {
        let n = self.n;
        match node {
            Node::Const(b) => vec![*b; n],
            Node::Trust(var, rel, k) => (0..n)
                .map(|s| self.ts.trust_value(s, var).is_some_and(|v| rel.holds(v, *k)))
                .collect(),
            Node::Action(p) => (0..n)
                .map(|s| {
                    self.ts.edges(s).iter().any(|e| p.matches(&e.label)) || (mode == Mode::May && self.truncated[s])
                })
                .collect(),
            Node::Not(a) => self.eval(a, mode.dual()).into_iter().map(|b| !b).collect(),
            Node::And(a, b) => zip(self.eval(a, mode), self.eval(b, mode), |x, y| x && y),
            Node::Or(a, b) => zip(self.eval(a, mode), self.eval(b, mode), |x, y| x || y),
            Node::Ex(p, a) => {
                let sat = self.eval(a, mode);
                (0..n)
                    .map(|s| {
                        self.ts.edges(s).iter().any(|e| p.matches(&e.label) && sat[e.target])
                            || (mode == Mode::May && self.truncated[s])
                    })
                    .collect()
            }
            Node::Ef(a) => self.until(&vec![true; n], &self.eval(a, mode), mode),
            Node::Eu(a, b) => self.until(&self.eval(a, mode), &self.eval(b, mode), mode),
            Node::Ag(a) => {
                let not_a: Vec<bool> = self.eval(a, mode).into_iter().map(|b| !b).collect();
                self.until(&vec![true; n], &not_a, mode.dual())
                    .into_iter()
                    .map(|b| !b)
                    .collect()
            }
            Node::Au(a, b) => self.all_until(&self.eval(a, mode), &self.eval(b, mode), mode),
        }
    }

    /// Least fixpoint of `Z = psi or (phi and EX Z)`. In `May` mode a
    /// truncated `phi` state may lead anywhere.
    fn until(&self, phi: &[bool], psi: &[bool], mode: Mode) -> Vec<bool> {
        let mut z = psi.to_vec();
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&s| z[s]).collect();
        if mode == Mode::May {
            for s in 0..self.n {
                if !z[s] && phi[s] && self.truncated[s] {
                    z[s] = true;
                    queue.push_back(s);
                }
            }
        }
        while let Some(s) = queue.pop_front() {
            for &p in &self.preds[s] {
                if !z[p] && phi[p] {
                    z[p] = true;
                    queue.push_back(p);
                }
            }
        }
        z
    }

    /// Least fixpoint of `Z = psi or (phi and AX Z and not deadlocked)`.
    fn all_until(&self, phi: &[bool], psi: &[bool], mode: Mode) -> Vec<bool> {
        let out_degree: Vec<usize> = (0..self.n).map(|s| self.ts.edges(s).len()).collect();
        let eligible = |s: usize| {
            phi[s]
                && match mode {
                    Mode::Plain => out_degree[s] > 0,
                    Mode::Must => out_degree[s] > 0 && !self.truncated[s],
                    Mode::May => out_degree[s] > 0 || self.truncated[s],
                }
        };
        let mut pending = out_degree.clone();
        let mut z = psi.to_vec();
        let mut queue: VecDeque<usize> = VecDeque::new();
        for s in 0..self.n {
            if !z[s] && pending[s] == 0 && eligible(s) {
                z[s] = true;
            }
            if z[s] {
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &p in &self.preds[s] {
                pending[p] -= 1;
                if !z[p] && pending[p] == 0 && eligible(p) {
                    z[p] = true;
                    queue.push_back(p);
                }
            }
        }
        z
    }

    /// Shortest path from `from` through `through` states into a `goal`
    /// state.
    fn shortest(&self, from: usize, through: &[bool], goal: &[bool]) -> Option<Witness> {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        let mut end = None;
        while let Some(s) = queue.pop_front() {
            if goal[s] {
                end = Some(s);
                break;
            }
            if !through[s] {
                continue;
            }
            for (k, e) in self.ts.edges(s).iter().enumerate() {
                if !seen[e.target] {
                    seen[e.target] = true;
                    parent[e.target] = Some((s, k));
                    queue.push_back(e.target);
                }
            }
        }
        let mut s = end?;
        let mut steps = Vec::new();
        while let Some((p, k)) = parent[s] {
            let e = &self.ts.edges(p)[k];
            steps.push(WitnessStep {
                from: p,
                label: e.label.clone(),
                rule: e.rule,
                to: s,
            });
            s = p;
        }
        steps.reverse();
        Some(Witness { start: from, steps })
    }

    fn witness(&self, node: &Node, mode: Mode, holds: bool) -> Option<Witness> {
        let q0 = self.ts.initial();
        match (node, holds) {
            (Node::Ef(a), true) => self.shortest(q0, &vec![true; self.n], &self.eval(a, mode)),
            (Node::Eu(a, b), true) => self.shortest(q0, &self.eval(a, mode), &self.eval(b, mode)),
            (Node::Ex(p, a), true) => {
                let sat = self.eval(a, mode);
                let e = self.ts.edges(q0).iter().find(|e| p.matches(&e.label) && sat[e.target])?;
                Some(Witness {
                    start: q0,
                    steps: vec![WitnessStep {
                        from: q0,
                        label: e.label.clone(),
                        rule: e.rule,
                        to: e.target,
                    }],
                })
            }
            (Node::Ag(a), false) => {
                // AG fails in `mode` exactly when EF(not a) holds in the dual.
                let bad: Vec<bool> = self.eval(a, mode).into_iter().map(|b| !b).collect();
                self.shortest(q0, &vec![true; self.n], &bad)
            }
            _ => None,
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

//! Sequential process calculus: nil, prefix, binary choice and constants,
//! extended with the community and feedback actions `ent`, `esc`, `obs`
//! and `fake_obs`.

pub(crate) mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub use parse::{parse_definition, parse_term};

/// Direction of a visible action name. `tau` is the only internal name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Output,
    Input,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionName {
    pub name: String,
    pub kind: ActionKind,
}

impl ActionName {
    pub const TAU: &'static str = "tau";

    pub fn tau() -> Self {
        ActionName {
            name: Self::TAU.to_string(),
            kind: ActionKind::Internal,
        }
    }

    pub fn output(name: impl Into<String>) -> Self {
        ActionName {
            name: name.into(),
            kind: ActionKind::Output,
        }
    }

    pub fn input(name: impl Into<String>) -> Self {
        ActionName {
            name: name.into(),
            kind: ActionKind::Input,
        }
    }

    pub fn is_tau(&self) -> bool {
        self.kind == ActionKind::Internal
    }
}

/// Declared visible action names with their direction.
///
/// Output and input names share one namespace, so a name can never be both.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionSignature {
    names: BTreeMap<String, ActionKind>,
}

impl ActionSignature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a name; returns `false` if it was already declared or is `tau`.
    pub fn declare(&mut self, name: impl Into<String>, kind: ActionKind) -> bool {
        let name = name.into();
        if name == ActionName::TAU || kind == ActionKind::Internal || self.names.contains_key(&name) {
            return false;
        }
        self.names.insert(name, kind);
        true
    }

    pub fn lookup(&self, name: &str) -> Option<ActionName> {
        if name == ActionName::TAU {
            return Some(ActionName::tau());
        }
        self.names.get(name).map(|&kind| ActionName {
            name: name.to_string(),
            kind,
        })
    }

    pub fn kind(&self, name: &str) -> Option<ActionKind> {
        self.lookup(name).map(|a| a.kind)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ActionKind)> {
        self.names.iter().map(|(n, k)| (n.as_str(), *k))
    }

    pub fn remove(&mut self, name: &str) {
        self.names.remove(name);
    }
}

/// Prefix actions. `Ent`, `Esc`, `Obs` and `FakeObs` are internal: they
/// surface as `I.tau` in the composed system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Plain(ActionName),
    Ent(String),
    Esc(String),
    Obs(i64),
    FakeObs { target: String, score: i64 },
}

impl Action {
    pub fn tau() -> Self {
        Action::Plain(ActionName::tau())
    }

    pub fn is_internal(&self) -> bool {
        match self {
            Action::Plain(a) => a.is_tau(),
            _ => true,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Plain(a) => f.write_str(&a.name),
            Action::Ent(g) => write!(f, "ent({g})"),
            Action::Esc(g) => write!(f, "esc({g})"),
            Action::Obs(v) => write!(f, "obs({v})"),
            Action::FakeObs { target, score } => write!(f, "fake_obs({target}, {score})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcessTerm {
    Nil,
    Prefix(Action, Arc<ProcessTerm>),
    Choice(Arc<ProcessTerm>, Arc<ProcessTerm>),
    Const(String),
}

impl ProcessTerm {
    pub fn prefix(action: Action, body: ProcessTerm) -> Self {
        ProcessTerm::Prefix(action, Arc::new(body))
    }

    pub fn choice(left: ProcessTerm, right: ProcessTerm) -> Self {
        ProcessTerm::Choice(Arc::new(left), Arc::new(right))
    }

    pub fn constant(name: impl Into<String>) -> Self {
        ProcessTerm::Const(name.into())
    }

    /// Left-associated choice over `terms`; `Nil` when empty.
    pub fn sum(terms: impl IntoIterator<Item = ProcessTerm>) -> Self {
        terms
            .into_iter()
            .reduce(ProcessTerm::choice)
            .unwrap_or(ProcessTerm::Nil)
    }

    /// Every action occurring anywhere in the term.
    pub fn actions(&self) -> Vec<&Action> {
        let mut out = Vec::new();
        self.collect_actions(&mut out);
        out
    }

    fn collect_actions<'a>(&'a self, out: &mut Vec<&'a Action>) {
        match self {
            ProcessTerm::Nil | ProcessTerm::Const(_) => {}
            ProcessTerm::Prefix(a, p) => {
                out.push(a);
                p.collect_actions(out);
            }
            ProcessTerm::Choice(l, r) => {
                l.collect_actions(out);
                r.collect_actions(out);
            }
        }
    }

    /// Constants occurring anywhere in the term, guarded or not.
    pub fn constants(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out, false);
        out
    }

    /// Constants reachable without crossing a prefix.
    pub fn unguarded_constants(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out, true);
        out
    }

    fn collect_constants<'a>(&'a self, out: &mut BTreeSet<&'a str>, stop_at_prefix: bool) {
        match self {
            ProcessTerm::Nil => {}
            ProcessTerm::Const(c) => {
                out.insert(c);
            }
            ProcessTerm::Prefix(_, p) => {
                if !stop_at_prefix {
                    p.collect_constants(out, stop_at_prefix);
                }
            }
            ProcessTerm::Choice(l, r) => {
                l.collect_constants(out, stop_at_prefix);
                r.collect_constants(out, stop_at_prefix);
            }
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTerm::Choice(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

/// Pretty-printer whose output parses back to the same term.
impl fmt::Display for ProcessTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTerm::Nil => f.write_str("0"),
            ProcessTerm::Const(c) => f.write_str(c),
            ProcessTerm::Prefix(a, p) => {
                write!(f, "{a} . ")?;
                p.fmt_operand(f)
            }
            ProcessTerm::Choice(l, r) => {
                write!(f, "{l} + ")?;
                r.fmt_operand(f)
            }
        }
    }
}

/// Constant bindings `B := P`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Definitions {
    bindings: BTreeMap<String, ProcessTerm>,
}

impl Definitions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `name`, returning the previous body if there was one.
    pub fn bind(&mut self, name: impl Into<String>, body: ProcessTerm) -> Option<ProcessTerm> {
        self.bindings.insert(name.into(), body)
    }

    pub fn get(&self, name: &str) -> Option<&ProcessTerm> {
        self.bindings.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bindings.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<ProcessTerm> {
        self.bindings.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ProcessTerm)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefinitionIssue {
    /// `constant` refers to `missing`, which has no binding.
    Unbound { constant: String, missing: String },
    /// `path` is a cycle of constants reachable without any prefix.
    Unguarded { constant: String, path: Vec<String> },
}

impl fmt::Display for DefinitionIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefinitionIssue::Unbound { constant, missing } => {
                write!(f, "constant `{constant}` refers to unbound constant `{missing}`")
            }
            DefinitionIssue::Unguarded { constant, path } => {
                write!(f, "constant `{constant}` is unguarded: {}", path.join(" -> "))
            }
        }
    }
}

/// Reports every unbound reference and every constant lying on an
/// unguarded recursion cycle. An empty result means the bindings are
/// closed and guarded.
pub fn validate_definitions(defs: &Definitions) -> Vec<DefinitionIssue> {
    let mut issues = Vec::new();
    for (name, body) in defs.iter() {
        for c in body.constants() {
            if !defs.contains(c) {
                issues.push(DefinitionIssue::Unbound {
                    constant: name.to_string(),
                    missing: c.to_string(),
                });
            }
        }
    }
    for (name, _) in defs.iter() {
        if let Some(path) = unguarded_cycle(defs, name) {
            issues.push(DefinitionIssue::Unguarded {
                constant: name.to_string(),
                path,
            });
        }
    }
    issues
}

/// Shortest cycle `start -> ... -> start` through unguarded occurrences.
fn unguarded_cycle(defs: &Definitions, start: &str) -> Option<Vec<String>> {
    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([start]);
    let mut seen = BTreeSet::from([start]);
    while let Some(cur) = queue.pop_front() {
        let Some(body) = defs.get(cur) else { continue };
        for next in body.unguarded_constants() {
            if next == start {
                let mut path = vec![start.to_string()];
                let mut at = cur;
                let mut back = vec![];
                while at != start {
                    back.push(at.to_string());
                    at = parent[at];
                }
                back.reverse();
                path.extend(back);
                path.push(start.to_string());
                return Some(path);
            }
            if seen.insert(next) {
                parent.insert(next, cur);
                queue.push_back(next);
            }
        }
    }
    None
}

/// One-step transitions of a sequential term under the prefix, choice and
/// recursion rules, sorted by action then successor and free of duplicates.
pub fn local_steps(term: &ProcessTerm, defs: &Definitions) -> Vec<(Action, ProcessTerm)> {
    let mut out = BTreeSet::new();
    let mut unfolding = Vec::new();
    collect_steps(term, defs, &mut unfolding, &mut out);
    out.into_iter().collect()
}

fn collect_steps<'a>(
    term: &'a ProcessTerm,
    defs: &'a Definitions,
    unfolding: &mut Vec<&'a str>,
    out: &mut BTreeSet<(Action, ProcessTerm)>,
) {
    match term {
        ProcessTerm::Nil => {}
        ProcessTerm::Prefix(a, p) => {
            out.insert((a.clone(), (**p).clone()));
        }
        ProcessTerm::Choice(l, r) => {
            collect_steps(l, defs, unfolding, out);
            collect_steps(r, defs, unfolding, out);
        }
        ProcessTerm::Const(c) => {
            // An unguarded cycle contributes no extra steps; stop re-entering it.
            if unfolding.contains(&c.as_str()) {
                return;
            }
            if let Some(body) = defs.get(c) {
                unfolding.push(c);
                collect_steps(body, defs, unfolding, out);
                unfolding.pop();
            }
        }
    }
}

//! Shared helpers for the integration and acceptance tests: random
//! systems, random transition systems and formulas, and a reference
//! checker that works by explicit path search instead of fixpoints.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use tas_core::semantics::{Edge, RuleKind, Tlts, TransitionLabel};
use tas_core::system::{parse_system, validate_spec, ActionClass, AgentId, SystemSpec};
use tas_core::trust::TrustModel;
use tas_core::ttl::{AggregateFn, Formula, Pattern, Relation, TransitionSystem, TrustVariable, VarRef, Witness};

// ---------------------------------------------------------------- specs

const CLASSES: [&str; 3] = ["@H", "@L", ""];

fn random_action<R: Rng>(
    rng: &mut R,
    visible: &[(String, bool)],
    groups: usize,
    agents: usize,
) -> String {
    match rng.gen_range(0..10) {
        0 => "tau".into(),
        1 | 2 if groups > 0 => format!("ent(G{})", rng.gen_range(0..groups)),
        3 if groups > 0 => format!("esc(G{})", rng.gen_range(0..groups)),
        4 => format!("obs({})", if rng.gen_bool(0.5) { 1 } else { -1 }),
        5 => format!(
            "fake_obs(A{}, {})",
            rng.gen_range(0..agents),
            if rng.gen_bool(0.5) { 1 } else { -1 }
        ),
        _ => visible.choose(rng).map(|(n, _)| n.clone()).unwrap_or_else(|| "tau".into()),
    }
}

fn random_body<R: Rng>(
    rng: &mut R,
    depth: usize,
    visible: &[(String, bool)],
    groups: usize,
    agents: usize,
) -> String {
    let leaf = |rng: &mut R| {
        if rng.gen_bool(0.3) {
            "0".to_string()
        } else {
            format!("B{}", rng.gen_range(0..agents))
        }
    };
    let prefix = |rng: &mut R, depth: usize| {
        let a = random_action(rng, visible, groups, agents);
        let rest = if depth <= 1 || rng.gen_bool(0.4) {
            leaf(rng)
        } else {
            random_body(rng, depth - 1, visible, groups, agents)
        };
        format!("{a} . ({rest})")
    };
    if depth > 1 && rng.gen_bool(0.35) {
        format!("{} + {}", prefix(rng, depth - 1), prefix(rng, depth - 1))
    } else {
        prefix(rng, depth)
    }
}

/// A valid spec with 2 to 4 agents, 2 or 3 visible actions and at most 2
/// groups.
/// Behaviors are guarded but may recurse into each other.
pub fn random_spec<R: Rng>(rng: &mut R) -> SystemSpec {
    loop {
        let agents = rng.gen_range(2..=4);
        let n_actions = rng.gen_range(2..=3);
        let groups = *[0, 1, 1, 2, 2].choose(rng).unwrap();
        let club = rng.gen_bool(0.5);

        // (name, is_output); the first two are an output and an input so a
        // sync is always possible.
        let mut visible = Vec::new();
        let mut class = Vec::new();
        for k in 0..n_actions {
            let out = match k {
                0 => true,
                1 => false,
                _ => rng.gen_bool(0.5),
            };
            visible.push((format!("{}{k}", if out { "o" } else { "i" }), out));
            class.push(if k == 1 { class[0] } else { *CLASSES.choose(rng).unwrap() });
        }
        let mut src = String::from("actions {");
        for ((name, out), c) in visible.iter().zip(&class) {
            write!(src, " {} {name} {c}", if *out { "out" } else { "in" }).unwrap();
        }
        src.push_str(" }\nsync {");
        for (a, (oa, is_out)) in visible.iter().enumerate() {
            for (b, (ib, is_in)) in visible.iter().enumerate() {
                let forced = a == 0 && b == 1;
                if *is_out && !*is_in && class[a] == class[b] && (forced || rng.gen_bool(0.8)) {
                    write!(src, " {oa} x {ib};").unwrap();
                }
            }
        }
        src.push_str(" }\n");
        let manager = club && rng.gen_bool(0.6);
        for i in 0..agents {
            let mut body = random_body(rng, 3, &visible, groups, agents);
            if rng.gen_bool(0.6) {
                // offer the guaranteed channel so agents meet more often
                let side = if i % 2 == 0 { &visible[0].0 } else { &visible[1.min(n_actions - 1)].0 };
                write!(body, " + {side} . (B{i})").unwrap();
            }
            writeln!(src, "process B{i} := {body}").unwrap();
        }
        if manager {
            src.push_str("process Mgr := 0\n");
        }
        for i in 0..agents {
            let behavior = if manager && i == agents - 1 {
                "Mgr".to_string()
            } else {
                format!("B{i}")
            };
            let th = [0.0, 0.25, 0.5, 0.75, 1.0].choose(rng).unwrap();
            writeln!(src, "agent A{i} : {behavior} threshold {th}").unwrap();
        }
        for g in 0..groups {
            let members: Vec<String> = (0..agents)
                .filter(|_| rng.gen_bool(0.75))
                .map(|i| format!("A{i}"))
                .collect();
            writeln!(src, "group G{g} = {{ {} }}", members.join(", ")).unwrap();
        }
        for _ in 0..rng.gen_range(0..=2) {
            let r = rng.gen_range(0..agents);
            let t = (r + rng.gen_range(1..agents)) % agents;
            let v = if rng.gen_bool(0.7) { 1 } else { -1 };
            writeln!(src, "opinion A{r} -> A{t} : {v} x {}", rng.gen_range(1..=2)).unwrap();
        }
        if club {
            let lambda = [0.3, 0.5, 0.8].choose(rng).unwrap();
            writeln!(src, "model club {{ lambda {lambda} cdsr {{ Mgr }} }}").unwrap();
        } else {
            let per_group = if rng.gen_bool(0.3) { " per_group" } else { "" };
            writeln!(src, "model eigentrust {{ damping 0.15{per_group} }}").unwrap();
        }
        let spec = parse_system(&src).unwrap_or_else(|e| panic!("generator produced unparsable text: {e}\n{src}"));
        if validate_spec(&spec).is_empty() {
            return spec;
        }
    }
}

// ---------------------------------------------------- semantic invariants

/// Checks the structural invariants of an explored system; returns the
/// first violation found.
pub fn semantic_invariants(spec: &SystemSpec, tlts: &Tlts, model: &dyn TrustModel) -> Result<(), String> {
    for (s, c) in tlts.states().iter().enumerate() {
        let ph: Vec<(AgentId, AgentId)> = c.opinions.placeholders().collect();
        let unique: HashSet<_> = ph.iter().collect();
        if unique.len() != ph.len() {
            return Err(format!("state {s}: duplicated placeholder"));
        }
    }
    for (s, e) in tlts.transitions() {
        let src = tlts.state(s);
        let dst = tlts.state(e.target);
        if !matches!(e.rule, RuleKind::Ent | RuleKind::Esc) && src.groups != dst.groups {
            return Err(format!("{s} -> {}: groups changed by a {} step", e.target, e.rule.name()));
        }
        if matches!(
            e.rule,
            RuleKind::Tau | RuleKind::Ent | RuleKind::Esc | RuleKind::SyncNeutral
        ) && src.opinions.rated().collect::<Vec<_>>() != dst.opinions.rated().collect::<Vec<_>>()
        {
            return Err(format!("{s} -> {}: {} step changed rated opinions", e.target, e.rule.name()));
        }
        match &e.label {
            TransitionLabel::Internal(i) => {
                let changed: Vec<_> = src
                    .groups
                    .iter()
                    .zip(dst.groups.iter())
                    .filter(|((_, a), (_, b))| a != b)
                    .map(|((g, a), (_, b))| (g, a.clone(), b.clone()))
                    .collect();
                match e.rule {
                    RuleKind::Ent | RuleKind::Esc => {
                        if changed.len() > 1 {
                            return Err(format!("{s} -> {}: several groups changed", e.target));
                        }
                        for (_, before, after) in changed {
                            let diff: BTreeSet<_> = before.symmetric_difference(&after).copied().collect();
                            let added = after.len() > before.len();
                            if diff != BTreeSet::from([*i]) || added != (e.rule == RuleKind::Ent) {
                                return Err(format!("{s} -> {}: group change is not the actor", e.target));
                            }
                        }
                    }
                    RuleKind::Tau | RuleKind::Obs | RuleKind::FakeObs => {}
                    other => return Err(format!("internal label with rule {}", other.name())),
                }
            }
            TransitionLabel::Sync {
                governing,
                out,
                reacting,
                input,
            } => {
                if governing == reacting {
                    return Err(format!("{s} -> {}: agent synchronizes with itself", e.target));
                }
                if !spec.sync.iter().any(|p| &p.out == out && &p.input == input) {
                    return Err(format!("{s} -> {}: {out} x {input} is not a sync pair", e.target));
                }
                if !src.groups.share_group(*governing, *reacting) {
                    return Err(format!("{s} -> {}: sync outside any shared group", e.target));
                }
                let t = model.trust(*governing, *reacting, &src.groups, &src.opinions).get();
                let th = spec.agent(*governing).threshold;
                let ok = match (spec.class_of(out), e.rule) {
                    (ActionClass::High, RuleKind::SyncHigh) => t >= th,
                    (ActionClass::Low, RuleKind::SyncLow) => t < th,
                    (ActionClass::Neutral, RuleKind::SyncNeutral) => true,
                    _ => false,
                };
                if !ok {
                    return Err(format!(
                        "{s} -> {}: {} step with t = {t}, th = {th} violates its guard",
                        e.target,
                        e.rule.name()
                    ));
                }
            }
        }
    }
    Ok(())
}

// ------------------------------------------------- random transition systems

/// A transition system with arbitrary edges and a pseudo-random trust
/// table, for exercising the checker independently of the semantics.
pub struct RandomTs {
    pub agents: Vec<String>,
    pub edges: Vec<Vec<Edge>>,
    pub truncated: Vec<bool>,
    pub seed: u64,
}

pub const TRUST_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const ACTIONS: [&str; 2] = ["a", "b"];

fn mix(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^ (x >> 33)
}

impl TransitionSystem for RandomTs {
    fn state_count(&self) -> usize {
        self.edges.len()
    }

    fn initial(&self) -> usize {
        0
    }

    fn edges(&self, s: usize) -> &[Edge] {
        &self.edges[s]
    }

    fn is_truncated(&self, s: usize) -> bool {
        self.truncated[s]
    }

    fn agent_names(&self) -> &[String] {
        &self.agents
    }

    fn trust_value(&self, s: usize, var: &VarRef) -> Option<f64> {
        let agg = var.aggregate.map_or(0, |f| 1 + f as u64);
        let h = mix(self.seed ^ mix((s as u64) << 16 | agg << 8 | (var.rater.0 as u64) << 4 | var.target.0 as u64));
        match h % 7 {
            k @ 0..=4 => Some(TRUST_GRID[k as usize]),
            5 => Some(-1.0),
            _ => None,
        }
    }
}

fn random_label<R: Rng>(rng: &mut R, agents: usize) -> (TransitionLabel, RuleKind) {
    let i = rng.gen_range(0..agents);
    if rng.gen_bool(0.4) {
        let rule = *[RuleKind::Tau, RuleKind::Obs, RuleKind::Ent].choose(rng).unwrap();
        return (TransitionLabel::Internal(AgentId(i)), rule);
    }
    let j = (i + rng.gen_range(1..agents)) % agents;
    let label = TransitionLabel::Sync {
        governing: AgentId(i),
        out: ACTIONS.choose(rng).unwrap().to_string(),
        reacting: AgentId(j),
        input: ACTIONS.choose(rng).unwrap().to_string(),
    };
    (label, RuleKind::SyncNeutral)
}

/// `n` states over 3 agents with out-degree 0..=3 and no truncation unless
/// `truncate` is set.
pub fn random_ts<R: Rng>(rng: &mut R, n: usize, truncate: bool) -> RandomTs {
    let agents = 3;
    let edges = (0..n)
        .map(|_| {
            let degree = *[0, 1, 1, 2, 2, 3].choose(rng).unwrap();
            let mut out: Vec<Edge> = Vec::new();
            for _ in 0..degree {
                let (label, rule) = random_label(rng, agents);
                let e = Edge {
                    label,
                    rule,
                    target: rng.gen_range(0..n),
                };
                if !out.contains(&e) {
                    out.push(e);
                }
            }
            out
        })
        .collect();
    let truncated = (0..n).map(|_| truncate && rng.gen_bool(0.1)).collect();
    RandomTs {
        agents: (0..agents).map(|i| format!("A{i}")).collect(),
        edges,
        truncated,
        seed: rng.gen(),
    }
}

fn random_slot<R: Rng>(rng: &mut R, pool: &[&str]) -> Option<String> {
    if rng.gen_bool(0.3) {
        None
    } else {
        Some(pool.choose(rng).unwrap().to_string())
    }
}

pub fn random_pattern<R: Rng>(rng: &mut R, agents: &[&str], actions: &[&str]) -> Pattern {
    match rng.gen_range(0..5) {
        0 => Pattern::Any,
        1 => Pattern::Internal(random_slot(rng, agents)),
        2 => Pattern::Agent(random_slot(rng, agents)),
        3 => Pattern::Performs(random_slot(rng, agents), actions.choose(rng).unwrap().to_string()),
        _ => Pattern::Sync {
            governing: random_slot(rng, agents),
            out: random_slot(rng, actions),
            reacting: random_slot(rng, agents),
            input: random_slot(rng, actions),
        },
    }
}

fn random_atom<R: Rng>(rng: &mut R, agents: &[&str], actions: &[&str]) -> Formula {
    match rng.gen_range(0..6) {
        0 => Formula::True,
        1 => Formula::False,
        2 | 3 => Formula::Action(random_pattern(rng, agents, actions)),
        _ => {
            let r = rng.gen_range(0..agents.len());
            let t = (r + rng.gen_range(1..agents.len())) % agents.len();
            let (rater, target) = (agents[r].to_string(), agents[t].to_string());
            let var = if rng.gen_bool(0.5) {
                TrustVariable::Model { rater, target }
            } else {
                let f = *[AggregateFn::Sum, AggregateFn::Min, AggregateFn::Max, AggregateFn::Count]
                    .choose(rng)
                    .unwrap();
                TrustVariable::Aggregate { f, rater, target }
            };
            let rel = *[Relation::Ge, Relation::Gt, Relation::Le, Relation::Lt, Relation::Eq]
                .choose(rng)
                .unwrap();
            let k = *TRUST_GRID.choose(rng).unwrap();
            Formula::Trust { var, rel, k }
        }
    }
}

/// A formula of depth at most `depth` over the given agent and action names.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, agents: &[&str], actions: &[&str]) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_atom(rng, agents, actions);
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1, agents, actions);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => {
            let p = random_pattern(rng, agents, actions);
            Formula::ex(p, sub(rng))
        }
        4 => Formula::ef(sub(rng)),
        5 => Formula::ag(sub(rng)),
        6 | 7 => Formula::eu(sub(rng), sub(rng)),
        _ => Formula::au(sub(rng), sub(rng)),
    }
}

// ------------------------------------------------------- reference checker

fn slot_is(slot: &Option<String>, actual: &str) -> bool {
    slot.as_deref().is_none_or(|s| s == actual)
}

/// Pattern matching written directly from the pattern table.
pub fn matches(p: &Pattern, label: &TransitionLabel, agents: &[String]) -> bool {
    let name = |a: &AgentId| agents[a.0].as_str();
    match (p, label) {
        (Pattern::Any, _) => true,
        (Pattern::Internal(x), TransitionLabel::Internal(i)) => slot_is(x, name(i)),
        (Pattern::Internal(_), _) => false,
        (Pattern::Agent(x), TransitionLabel::Internal(i)) => slot_is(x, name(i)),
        (Pattern::Agent(x), TransitionLabel::Sync { governing, .. }) => slot_is(x, name(governing)),
        (Pattern::Performs(..), TransitionLabel::Internal(_)) => false,
        (
            Pattern::Performs(x, a),
            TransitionLabel::Sync {
                governing,
                out,
                reacting,
                input,
            },
        ) => (slot_is(x, name(governing)) && out == a) || (slot_is(x, name(reacting)) && input == a),
        (Pattern::Sync { .. }, TransitionLabel::Internal(_)) => false,
        (
            Pattern::Sync {
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
        ) => slot_is(g, name(governing)) && slot_is(o, out) && slot_is(r, name(reacting)) && slot_is(i, input),
    }
}

/// States reachable from `s` (including `s`) moving only through states
/// in `allowed`; `s` itself is always entered.
fn reach_within<T: TransitionSystem>(ts: &T, s: usize, allowed: &[bool]) -> Vec<usize> {
    let mut seen = vec![false; ts.state_count()];
    let mut stack = vec![s];
    let mut out = Vec::new();
    seen[s] = true;
    while let Some(u) = stack.pop() {
        out.push(u);
        for e in ts.edges(u) {
            if allowed[e.target] && !seen[e.target] {
                seen[e.target] = true;
                stack.push(e.target);
            }
        }
    }
    out
}

/// True iff the subgraph induced by `nodes` has a cycle.
fn has_cycle<T: TransitionSystem>(ts: &T, nodes: &[usize]) -> bool {
    let inside: HashSet<usize> = nodes.iter().copied().collect();
    // 0 unvisited, 1 on the stack, 2 done
    let mut color = vec![0u8; ts.state_count()];
    for &root in nodes {
        if color[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            let es = ts.edges(u);
            if *next < es.len() {
                let v = es[*next].target;
                *next += 1;
                if !inside.contains(&v) {
                    continue;
                }
                match color[v] {
                    1 => return true,
                    0 => {
                        color[v] = 1;
                        stack.push((v, 0));
                    }
                    _ => {}
                }
            } else {
                color[u] = 2;
                stack.pop();
            }
        }
    }
    false
}

fn var_ref(agents: &[String], var: &TrustVariable) -> VarRef {
    let id = |n: &str| AgentId(agents.iter().position(|a| a == n).expect("known agent"));
    let aggregate = match var {
        TrustVariable::Model { .. } => None,
        TrustVariable::Aggregate { f, .. } => Some(*f),
    };
    VarRef {
        aggregate,
        rater: id(var.rater()),
        target: id(var.target()),
    }
}

/// Satisfaction on an untruncated system, evaluated by searching paths
/// from each state separately.
pub fn oracle<T: TransitionSystem>(ts: &T, f: &Formula) -> Vec<bool> {
    let n = ts.state_count();
    let agents = ts.agent_names();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Action(p) => (0..n)
            .map(|s| ts.edges(s).iter().any(|e| matches(p, &e.label, agents)))
            .collect(),
        Formula::Trust { var, rel, k } => {
            let v = var_ref(agents, var);
            (0..n)
                .map(|s| ts.trust_value(s, &v).is_some_and(|x| rel.holds(x, *k)))
                .collect()
        }
        Formula::Not(a) => oracle(ts, a).into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => oracle(ts, a).into_iter().zip(oracle(ts, b)).map(|(x, y)| x && y).collect(),
        Formula::Or(a, b) => oracle(ts, a).into_iter().zip(oracle(ts, b)).map(|(x, y)| x || y).collect(),
        Formula::Ex(p, a) => {
            let sa = oracle(ts, a);
            (0..n)
                .map(|s| ts.edges(s).iter().any(|e| matches(p, &e.label, agents) && sa[e.target]))
                .collect()
        }
        Formula::Ef(a) => {
            let sa = oracle(ts, a);
            let all = vec![true; n];
            (0..n).map(|s| reach_within(ts, s, &all).iter().any(|&u| sa[u])).collect()
        }
        Formula::Ag(a) => {
            let sa = oracle(ts, a);
            let all = vec![true; n];
            (0..n).map(|s| reach_within(ts, s, &all).iter().all(|&u| sa[u])).collect()
        }
        Formula::Eu(a, b) => {
            let (sa, sb) = (oracle(ts, a), oracle(ts, b));
            (0..n)
                .map(|s| {
                    if sb[s] {
                        return true;
                    }
                    if !sa[s] {
                        return false;
                    }
                    // walk through a-states; a b-state may end the walk
                    let region = reach_within(ts, s, &sa);
                    region.iter().any(|&u| ts.edges(u).iter().any(|e| sb[e.target]))
                })
                .collect()
        }
        Formula::Au(a, b) => {
            let (sa, sb) = (oracle(ts, a), oracle(ts, b));
            let pending: Vec<bool> = (0..n).map(|s| sa[s] && !sb[s]).collect();
            (0..n)
                .map(|s| {
                    if sb[s] {
                        return true;
                    }
                    if !sa[s] {
                        return false;
                    }
                    // a maximal path avoiding b: a deadlock, an exit to a
                    // state with neither a nor b, or a cycle
                    let region = reach_within(ts, s, &pending);
                    let escapes = region.iter().any(|&u| {
                        let es = ts.edges(u);
                        es.is_empty() || es.iter().any(|e| !sa[e.target] && !sb[e.target])
                    });
                    !escapes && !has_cycle(ts, &region)
                })
                .collect()
        }
    }
}

/// BFS distance from the initial state to the nearest state in `goal`.
pub fn distance_to<T: TransitionSystem>(ts: &T, goal: &[bool]) -> Option<usize> {
    let mut dist = vec![usize::MAX; ts.state_count()];
    let mut queue = std::collections::VecDeque::from([ts.initial()]);
    dist[ts.initial()] = 0;
    while let Some(u) = queue.pop_front() {
        if goal[u] {
            return Some(dist[u]);
        }
        for e in ts.edges(u) {
            if dist[e.target] == usize::MAX {
                dist[e.target] = dist[u] + 1;
                queue.push_back(e.target);
            }
        }
    }
    None
}

/// Every witness step is an edge of `ts`, consecutive, starting at the
/// initial state.
pub fn witness_is_path<T: TransitionSystem>(ts: &T, w: &Witness) -> bool {
    if w.start != ts.initial() {
        return false;
    }
    let mut at = w.start;
    for step in &w.steps {
        if step.from != at
            || !ts
                .edges(step.from)
                .iter()
                .any(|e| e.label == step.label && e.rule == step.rule && e.target == step.to)
        {
            return false;
        }
        at = step.to;
    }
    true
}

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::calculus::parse_term;
use crate::system::{AgentId, Groups, OpinionMultiset, SystemSpec};

use super::{Bounds, Configuration, Edge, RuleKind, SemanticsError, Tlts, TransitionLabel};

/// Graphviz rendering. Nodes carry group and opinion summaries; truncated
/// states are dashed.
pub fn export_dot(t: &Tlts) -> String {
    let mut out = String::from("digraph tlts {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n");
    out.push_str("  init [shape=point];\n  init -> s0;\n");
    for (s, c) in t.states().iter().enumerate() {
        let mut text = format!("s{s}\\n{}", escape(&c.terms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | ")));
        text.push_str("\\nG: ");
        text.push_str(&escape(&groups_summary(t, &c.groups)));
        text.push_str("\\nE: ");
        text.push_str(&escape(&opinions_summary(t, &c.opinions)));
        let style = if t.is_truncated(s) { ", style=dashed" } else { "" };
        let _ = writeln!(out, "  s{s} [label=\"{text}\"{style}];");
    }
    for (s, e) in t.transitions() {
        let _ = writeln!(
            out,
            "  s{s} -> s{} [label=\"{}\"];",
            e.target,
            escape(&e.label.render(t.agents()))
        );
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn groups_summary(t: &Tlts, groups: &Groups) -> String {
    groups
        .iter()
        .map(|(g, m)| {
            let names: Vec<&str> = m.iter().map(|a| t.agents()[a.0].as_str()).collect();
            format!("{}={{{}}}", t.group_names()[g.0], names.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn opinions_summary(t: &Tlts, e: &OpinionMultiset) -> String {
    let name = |a: AgentId| t.agents()[a.0].as_str();
    let mut parts: Vec<String> = e
        .rated()
        .map(|(i, j, v, m)| format!("({},{v})_{} x{m}", name(j), name(i)))
        .collect();
    parts.extend(e.placeholders().map(|(i, j)| format!("({},?)_{}", name(j), name(i))));
    if parts.is_empty() {
        "{}".into()
    } else {
        parts.join(" ")
    }
}

/// Canonical JSON. Keys are sorted and output is identical for identical
/// systems, so it is suitable for byte comparison.
///
/// Besides the transition triples `[src, label, dst]`, a parallel `rules`
/// array records which semantic rule produced each transition.
pub fn export_json(t: &Tlts) -> String {
    let agents = t.agents();
    let name = |a: AgentId| agents[a.0].clone();
    let states: Vec<Value> = t
        .states()
        .iter()
        .map(|c| Value::from(c.terms.iter().map(ToString::to_string).collect::<Vec<_>>()))
        .collect();
    let labeling: Vec<Value> = t
        .states()
        .iter()
        .map(|c| {
            let groups: Vec<Value> = c
                .groups
                .iter()
                .map(|(g, m)| json!([t.group_names()[g.0], m.iter().map(|&a| name(a)).collect::<Vec<_>>()]))
                .collect();
            let rated: Vec<Value> = c
                .opinions
                .rated()
                .map(|(i, j, v, m)| json!([name(i), name(j), v, m]))
                .collect();
            let placeholders: Vec<Value> = c.opinions.placeholders().map(|(i, j)| json!([name(i), name(j)])).collect();
            json!({
                "groups": groups,
                "opinions": { "rated": rated, "placeholders": placeholders },
            })
        })
        .collect();
    let transitions: Vec<Value> = t
        .transitions()
        .map(|(s, e)| json!([s, e.label.render(agents), e.target]))
        .collect();
    let rules: Vec<&str> = t.transitions().map(|(_, e)| e.rule.name()).collect();
    let b = t.bounds();
    let doc = json!({
        "agents": agents,
        "states": states,
        "initial": t.initial(),
        "transitions": transitions,
        "rules": rules,
        "labeling": labeling,
        "truncated": t.truncated,
        "bounds": {
            "max_states": b.max_states,
            "max_depth": b.max_depth,
            "opinion_cap": b.opinion_cap,
        },
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    text
}

fn bad(msg: impl Into<String>) -> SemanticsError {
    SemanticsError::Import(msg.into())
}

/// Reads a system written by [`export_json`]. The spec supplies the action
/// signature used to parse process terms.
pub fn import_json(text: &str, spec: &SystemSpec) -> Result<Tlts, SemanticsError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let field = |k: &str| doc.get(k).ok_or_else(|| bad(format!("missing key `{k}`")));
    let strings = |v: &Value, what: &str| -> Result<Vec<String>, SemanticsError> {
        v.as_array()
            .ok_or_else(|| bad(format!("`{what}` is not an array")))?
            .iter()
            .map(|x| x.as_str().map(str::to_owned).ok_or_else(|| bad(format!("`{what}` holds a non-string"))))
            .collect()
    };
    let uint = |v: &Value, what: &str| v.as_u64().ok_or_else(|| bad(format!("`{what}` is not a natural number")));

    let agents = strings(field("agents")?, "agents")?;
    let by_name: HashMap<&str, AgentId> = agents.iter().enumerate().map(|(i, a)| (a.as_str(), AgentId(i))).collect();
    let agent = |v: &Value| {
        v.as_str()
            .and_then(|n| by_name.get(n).copied())
            .ok_or_else(|| bad(format!("unknown agent {v}")))
    };

    if uint(field("initial")?, "initial")? != 0 {
        return Err(bad("initial state must be 0"));
    }

    let term_lists = field("states")?.as_array().ok_or_else(|| bad("`states` is not an array"))?;
    let labeling = field("labeling")?.as_array().ok_or_else(|| bad("`labeling` is not an array"))?;
    if labeling.len() != term_lists.len() {
        return Err(bad("`labeling` and `states` differ in length"));
    }
    let mut group_names: Option<Vec<String>> = None;
    let mut states = Vec::with_capacity(term_lists.len());
    for (terms, label) in term_lists.iter().zip(labeling) {
        let terms = strings(terms, "states")?
            .iter()
            .map(|s| parse_term(s, &spec.signature).map_err(|e| bad(format!("term `{s}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if terms.len() != agents.len() {
            return Err(bad("state vector length differs from agent count"));
        }
        let groups_v = label
            .get("groups")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("labeling entry lacks `groups`"))?;
        let mut names = Vec::new();
        let mut members = Vec::new();
        for g in groups_v {
            let pair = g.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("malformed group entry"))?;
            names.push(pair[0].as_str().ok_or_else(|| bad("group name is not a string"))?.to_owned());
            let set = pair[1]
                .as_array()
                .ok_or_else(|| bad("group members are not an array"))?
                .iter()
                .map(agent)
                .collect::<Result<BTreeSet<_>, _>>()?;
            members.push(set);
        }
        match &group_names {
            None => group_names = Some(names),
            Some(known) if *known != names => return Err(bad("group names differ between states")),
            Some(_) => {}
        }
        let ops = label.get("opinions").ok_or_else(|| bad("labeling entry lacks `opinions`"))?;
        let mut e = OpinionMultiset::new();
        for r in ops.get("rated").and_then(Value::as_array).ok_or_else(|| bad("missing `rated`"))? {
            let r = r.as_array().filter(|r| r.len() == 4).ok_or_else(|| bad("malformed rated entry"))?;
            let v = r[2].as_i64().ok_or_else(|| bad("score is not an integer"))?;
            let m = uint(&r[3], "multiplicity")?;
            let m = u32::try_from(m).ok().filter(|&m| m > 0).ok_or_else(|| bad("multiplicity out of range"))?;
            e = e.with_rated(agent(&r[0])?, agent(&r[1])?, v, m);
        }
        for p in ops
            .get("placeholders")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `placeholders`"))?
        {
            let p = p.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("malformed placeholder"))?;
            e = e.with_placeholder(agent(&p[0])?, agent(&p[1])?);
        }
        states.push(Configuration {
            terms,
            groups: Groups::new(members),
            opinions: e,
        });
    }
    if states.is_empty() {
        return Err(bad("no states"));
    }

    let n = states.len();
    let rules = strings(field("rules")?, "rules")?;
    let transitions = field("transitions")?.as_array().ok_or_else(|| bad("`transitions` is not an array"))?;
    if rules.len() != transitions.len() {
        return Err(bad("`rules` and `transitions` differ in length"));
    }
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); n];
    for (tr, rule) in transitions.iter().zip(&rules) {
        let tr = tr.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("malformed transition"))?;
        let src = uint(&tr[0], "source")? as usize;
        let dst = uint(&tr[2], "target")? as usize;
        if src >= n || dst >= n {
            return Err(bad("transition refers to a missing state"));
        }
        let label = parse_label(tr[1].as_str().ok_or_else(|| bad("label is not a string"))?, &by_name)?;
        let rule = RuleKind::from_name(rule).ok_or_else(|| bad(format!("unknown rule `{rule}`")))?;
        edges[src].push(Edge {
            label,
            rule,
            target: dst,
        });
    }

    let truncated = field("truncated")?
        .as_array()
        .ok_or_else(|| bad("`truncated` is not an array"))?
        .iter()
        .map(|v| v.as_bool().ok_or_else(|| bad("`truncated` holds a non-boolean")))
        .collect::<Result<Vec<_>, _>>()?;
    if truncated.len() != n {
        return Err(bad("`truncated` length differs from state count"));
    }

    let b = field("bounds")?;
    let get = |k: &str| b.get(k).ok_or_else(|| bad(format!("bounds lack `{k}`"))).and_then(|v| uint(v, k));
    let bounds = Bounds {
        max_states: get("max_states")? as usize,
        max_depth: get("max_depth")? as usize,
        opinion_cap: u32::try_from(get("opinion_cap")?).map_err(|_| bad("opinion_cap out of range"))?,
    };

    Ok(Tlts {
        agents,
        group_names: group_names.unwrap_or_default(),
        states,
        edges,
        truncated,
        bounds,
    })
}

fn parse_label(text: &str, agents: &HashMap<&str, AgentId>) -> Result<TransitionLabel, SemanticsError> {
    let split = |part: &str| -> Result<(AgentId, String), SemanticsError> {
        let (a, act) = part.split_once('.').ok_or_else(|| bad(format!("malformed label `{text}`")))?;
        let a = agents.get(a).copied().ok_or_else(|| bad(format!("unknown agent in label `{text}`")))?;
        Ok((a, act.to_owned()))
    };
    match text.split_once('*') {
        None => {
            let (a, act) = split(text)?;
            if act != "tau" {
                return Err(bad(format!("malformed label `{text}`")));
            }
            Ok(TransitionLabel::Internal(a))
        }
        Some((l, r)) => {
            let (governing, out) = split(l)?;
            let (reacting, input) = split(r)?;
            Ok(TransitionLabel::Sync {
                governing,
                out,
                reacting,
                input,
            })
        }
    }
}

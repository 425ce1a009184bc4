use std::fmt;
use std::str::FromStr;

use crate::system::{validate_spec, ActionClass, ModelSpec};

use super::{initial_trust, sync_guard_property, Extender, Params, Property, ScenarioBundle, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    BadMouthing,
    BallotStuffing,
    Collusion,
    OnOff,
    Sybil,
    WhiteWashing,
}

impl AttackKind {
    pub const ALL: [AttackKind; 6] = [
        AttackKind::BadMouthing,
        AttackKind::BallotStuffing,
        AttackKind::Collusion,
        AttackKind::OnOff,
        AttackKind::Sybil,
        AttackKind::WhiteWashing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::BadMouthing => "bad-mouthing",
            AttackKind::BallotStuffing => "ballot-stuffing",
            AttackKind::Collusion => "collusion",
            AttackKind::OnOff => "on-off",
            AttackKind::Sybil => "sybil",
            AttackKind::WhiteWashing => "white-washing",
        }
    }

    /// Accepted parameter names, with the defaults of those that have one.
    pub fn params(self) -> &'static [(&'static str, Option<&'static str>)] {
        match self {
            AttackKind::BadMouthing => &[("n_attackers", Some("1")), ("target", None), ("observer", None)],
            AttackKind::BallotStuffing => &[("n_attackers", Some("1")), ("accomplice", None), ("observer", None)],
            AttackKind::Collusion => &[("n_attackers", Some("2")), ("target", None), ("observer", None)],
            AttackKind::OnOff => &[("period", None), ("nondeterministic", Some("false")), ("target", None)],
            AttackKind::Sybil => &[("n_identities", None), ("target", None), ("observer", None)],
            AttackKind::WhiteWashing => &[("target", None)],
        }
    }

    /// Parameters that are enough to build a small regression instance.
    pub fn minimal_params(self) -> Params {
        let mut p = Params::new();
        match self {
            AttackKind::OnOff => {
                p.insert("period".into(), "1".into());
            }
            AttackKind::Sybil => {
                p.insert("n_identities".into(), "1".into());
            }
            _ => {}
        }
        p
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = ScenarioError;

    /// Case, `-` and `_` are ignored: `BadMouthing`, `bad-mouthing` and
    /// `bad_mouthing` all parse.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .flat_map(char::to_lowercase)
            .collect();
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name().replace('-', "") == key)
            .ok_or_else(|| ScenarioError::UnknownKind(s.to_string()))
    }
}

struct Knobs<'a> {
    kind: AttackKind,
    params: &'a Params,
}

impl Knobs<'_> {
    fn raw(&self, name: &'static str) -> Option<&str> {
        self.params.get(name).map(String::as_str).or_else(|| {
            self.kind
                .params()
                .iter()
                .find(|(n, _)| *n == name)
                .and_then(|(_, d)| *d)
        })
    }

    fn count(&self, name: &'static str, min: usize) -> Result<usize, ScenarioError> {
        let raw = self.raw(name).ok_or(ScenarioError::MissingParam(name))?;
        let bad = |reason: String| ScenarioError::BadParam {
            name: name.to_string(),
            value: raw.to_string(),
            reason,
        };
        let n: usize = raw.trim().parse().map_err(|_| bad("not a non-negative integer".into()))?;
        if n < min {
            return Err(bad(format!("must be at least {min}")));
        }
        Ok(n)
    }

    fn flag(&self, name: &'static str) -> Result<bool, ScenarioError> {
        match self.raw(name).map(str::trim) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(other) => Err(ScenarioError::BadParam {
                name: name.to_string(),
                value: other.to_string(),
                reason: "expected `true` or `false`".into(),
            }),
        }
    }

    /// An agent name from `params`, else `default`; an empty default
    /// means the caller has no role to fall back on.
    fn agent(&self, name: &'static str, default: &str, spec: &crate::system::SystemSpec) -> Result<String, ScenarioError> {
        let a = self.raw(name).unwrap_or(default).to_string();
        if a.is_empty() {
            return Err(ScenarioError::MissingParam(name));
        }
        if spec.agent_id(&a).is_none() {
            return Err(ScenarioError::UnknownAgent(a));
        }
        Ok(a)
    }
}

/// Adds the adversaries of `kind` to `base`. The added agents and groups
/// are recorded in the bundle; the returned properties are the base
/// bundle's sync guards recomputed for the new spec plus the properties
/// the attack is about. Expected verdicts for the latter are stated for
/// the trust model of the base.
pub fn apply_attack(base: &ScenarioBundle, kind: AttackKind, params: &Params) -> Result<ScenarioBundle, ScenarioError> {
    for key in params.keys() {
        if !kind.params().iter().any(|(n, _)| n == key) {
            return Err(ScenarioError::UnknownParam(key.clone()));
        }
    }
    let knobs = Knobs { kind, params };
    let mut spec = base.spec.clone();
    let club = matches!(spec.model, ModelSpec::Club { .. });
    let mut props = Vec::new();
    let (agents, groups, processes, actions) = {
        let mut ext = Extender::new(&mut spec);
        match kind {
            AttackKind::BadMouthing => bad_mouthing(&mut ext, &knobs, base, club, &mut props)?,
            AttackKind::BallotStuffing => ballot_stuffing(&mut ext, &knobs, base, &mut props)?,
            AttackKind::Collusion => collusion(&mut ext, &knobs, base, club, &mut props)?,
            AttackKind::OnOff => on_off(&mut ext, &knobs, base, club, &mut props)?,
            AttackKind::Sybil => sybil(&mut ext, &knobs, base, club, &mut props)?,
            AttackKind::WhiteWashing => white_washing(&mut ext, &knobs, base, club, &mut props)?,
        }
        (ext.agents, ext.groups, ext.processes, ext.actions)
    };
    let diags = validate_spec(&spec);
    if !diags.is_empty() {
        return Err(ScenarioError::Invalid(diags));
    }
    // Initial-value properties are computed on the finished spec, since
    // adding agents can move EigenTrust's uniform fallback rows.
    let props = props
        .into_iter()
        .map(|p| p.finish(&spec))
        .collect::<Result<Vec<_>, _>>()?;
    let mut properties = vec![Property::new("sync-guards", sync_guard_property(&spec), true)];
    properties.extend(props);
    let mut added_agents = base.added_agents.clone();
    added_agents.extend(agents);
    let mut added_groups = base.added_groups.clone();
    added_groups.extend(groups);
    let mut added_processes = base.added_processes.clone();
    added_processes.extend(processes);
    let mut added_actions = base.added_actions.clone();
    added_actions.extend(actions);
    Ok(ScenarioBundle {
        spec,
        properties,
        bounds: base.bounds,
        observer: base.observer.clone(),
        target: base.target.clone(),
        added_agents,
        added_groups,
        added_processes,
        added_actions,
    })
}

/// A property whose text may mention `{t0}`, the initial value of
/// `t[rater, target]` in the attacked spec.
struct Pending {
    name: &'static str,
    text: String,
    baseline: Option<(String, String)>,
    expected: bool,
}

impl Pending {
    fn fixed(name: &'static str, text: String, expected: bool) -> Self {
        Pending {
            name,
            text,
            baseline: None,
            expected,
        }
    }

    fn above_initial(name: &'static str, rater: &str, target: &str) -> Self {
        Pending {
            name,
            text: format!("EF(t[{rater},{target}] > {{t0}})"),
            baseline: Some((rater.to_string(), target.to_string())),
            expected: true,
        }
    }

    fn finish(self, spec: &crate::system::SystemSpec) -> Result<Property, ScenarioError> {
        let text = match &self.baseline {
            Some((r, t)) => self.text.replace("{t0}", &initial_trust(spec, r, t)?.to_string()),
            None => self.text,
        };
        Ok(Property::parsed(self.name, &text, self.expected))
    }
}

/// The group an adversary joins to reach `agent`: its club under the club
/// model, otherwise the first group containing it.
fn home_group(spec: &crate::system::SystemSpec, agent: &str) -> Result<String, ScenarioError> {
    let managers: Vec<&str> = spec
        .cdsr_agents()
        .into_iter()
        .map(|id| spec.agent_name(id))
        .collect();
    let holding: Vec<&crate::system::GroupDecl> =
        spec.groups.iter().filter(|g| g.members.iter().any(|m| m == agent)).collect();
    holding
        .iter()
        .find(|g| g.members.iter().any(|m| managers.contains(&m.as_str())))
        .or_else(|| holding.first())
        .map(|g| g.name.clone())
        .ok_or_else(|| ScenarioError::Homeless(agent.to_string()))
}

/// Threshold and seed opinion for a fresh watchdog: the seed alone puts
/// its trust in the watched agent above the threshold.
fn watchdog_threshold(spec: &crate::system::SystemSpec) -> f64 {
    match spec.model {
        ModelSpec::Club { lambda, .. } => (1.0 - lambda) / 2.0,
        ModelSpec::EigenTrust { .. } => super::eigentrust::PEER_THRESHOLD,
    }
}

fn bad_mouthing(
    ext: &mut Extender,
    k: &Knobs,
    base: &ScenarioBundle,
    club: bool,
    props: &mut Vec<Pending>,
) -> Result<(), ScenarioError> {
    let n = k.count("n_attackers", 1)?;
    let target = k.agent("target", &base.target, ext.spec)?;
    let observer = k.agent("observer", &base.observer, ext.spec)?;
    let home = home_group(ext.spec, &target)?;
    ext.process("BadMouth", &format!("fake_obs({target}, -1) . BadMouth"))?;
    for i in 1..=n {
        let a = format!("Bad{i}");
        ext.agent(&a, "BadMouth", 0.0)?;
        ext.join(&home, &a);
    }
    props.push(Pending::fixed(
        "fabricated-feedback-recorded",
        format!("EF(tf[count,Bad1,{target}] >= 1)"),
        true,
    ));
    if club {
        props.push(Pending::fixed("bad-mouthing-zeroes-trust", format!("EF(t[{observer},{target}] = 0)"), true));
        props.push(Pending::fixed(
            "zero-without-negative-experience",
            format!("EF(t[{observer},{target}] = 0 and not tf[min,{observer},{target}] < 0)"),
            true,
        ));
    }
    Ok(())
}

fn ballot_stuffing(
    ext: &mut Extender,
    k: &Knobs,
    base: &ScenarioBundle,
    props: &mut Vec<Pending>,
) -> Result<(), ScenarioError> {
    let n = k.count("n_attackers", 1)?;
    let observer = k.agent("observer", &base.observer, ext.spec)?;
    let home = home_group(ext.spec, &observer)?;
    let accomplice = match k.raw("accomplice") {
        Some(_) => k.agent("accomplice", "", ext.spec)?,
        None => {
            ext.process("Inert", "0")?;
            ext.agent("Mal", "Inert", 0.0)?;
            ext.join(&home, "Mal");
            "Mal".to_string()
        }
    };
    ext.process("Stuff", &format!("fake_obs({accomplice}, 1) . Stuff"))?;
    for i in 1..=n {
        let a = format!("Stuff{i}");
        ext.agent(&a, "Stuff", 0.0)?;
        ext.join(&home, &a);
    }
    props.push(Pending::above_initial("stuffing-raises-trust", &observer, &accomplice));
    Ok(())
}

fn collusion(
    ext: &mut Extender,
    k: &Knobs,
    base: &ScenarioBundle,
    club: bool,
    props: &mut Vec<Pending>,
) -> Result<(), ScenarioError> {
    let n = k.count("n_attackers", 2)?;
    let target = k.agent("target", &base.target, ext.spec)?;
    let observer = k.agent("observer", &base.observer, ext.spec)?;
    let home = home_group(ext.spec, &target)?;
    for i in 1..=n {
        let next = i % n + 1;
        ext.process(
            &format!("Collude{i}"),
            &format!("fake_obs({target}, -1) . fake_obs(Coll{next}, 1) . Collude{i}"),
        )?;
    }
    for i in 1..=n {
        let a = format!("Coll{i}");
        ext.agent(&a, &format!("Collude{i}"), 0.0)?;
        ext.join(&home, &a);
    }
    props.push(Pending::above_initial("colluders-promoted", &observer, "Coll1"));
    if club {
        props.push(Pending::fixed("collusion-zeroes-target", format!("EF(t[{observer},{target}] = 0)"), true));
    }
    Ok(())
}

/// `OnOff` answers requests from `Watch`, `period` times well and then
/// `period` times badly, forever. With `nondeterministic=true` every
/// answer is a free choice and `period` only has to be positive.
fn on_off(
    ext: &mut Extender,
    k: &Knobs,
    base: &ScenarioBundle,
    club: bool,
    props: &mut Vec<Pending>,
) -> Result<(), ScenarioError> {
    let period = k.count("period", 1)?;
    let target = k.agent("target", &base.target, ext.spec)?;
    let home = home_group(ext.spec, &target)?;
    ext.channel("onoff_req", "onoff_recv", ActionClass::High)?;
    ext.channel("onoff_ok", "onoff_ok_in", ActionClass::Neutral)?;
    ext.channel("onoff_bad", "onoff_bad_in", ActionClass::Neutral)?;
    ext.process(
        "Watch",
        "onoff_req . (onoff_ok_in . obs(1) . Watch + onoff_bad_in . obs(-1) . Watch)",
    )?;
    if k.flag("nondeterministic")? {
        ext.process("OnOff_0", "onoff_recv . (onoff_ok . OnOff_0 + onoff_bad . OnOff_0)")?;
    } else {
        for s in 0..2 * period {
            let reply = if s < period { "onoff_ok" } else { "onoff_bad" };
            ext.process(
                &format!("OnOff_{s}"),
                &format!("onoff_recv . {reply} . OnOff_{}", (s + 1) % (2 * period)),
            )?;
        }
    }
    ext.agent("OnOff", "OnOff_0", 0.0)?;
    ext.agent("Watch", "Watch", watchdog_threshold(ext.spec))?;
    ext.join(&home, "OnOff");
    ext.join(&home, "Watch");
    ext.opinion("Watch", "OnOff", 1, 1);
    props.push(Pending::fixed("misbehavior-detected", "EF(tf[min,Watch,OnOff] <= -1)".into(), true));
    if club {
        props.push(Pending::fixed(
            "no-service-after-misbehavior",
            "AG(not (tf[min,Watch,OnOff] <= -1 and <Watch.onoff_req*OnOff.onoff_recv>))".into(),
            true,
        ));
    }
    Ok(())
}

/// An inert principal `Sybil0` plus `n_identities` identities that join the
/// target's group and bad-mouth it.
fn sybil(
    ext: &mut Extender,
    k: &Knobs,
    base: &ScenarioBundle,
    club: bool,
    props: &mut Vec<Pending>,
) -> Result<(), ScenarioError> {
    let n = k.count("n_identities", 0)?;
    let target = k.agent("target", &base.target, ext.spec)?;
    let observer = k.agent("observer", &base.observer, ext.spec)?;
    let home = home_group(ext.spec, &target)?;
    ext.process("SybilIdle", "0")?;
    ext.agent("Sybil0", "SybilIdle", 0.0)?;
    if n == 0 {
        return Ok(());
    }
    ext.process("SybilBad", &format!("fake_obs({target}, -1) . SybilBad"))?;
    ext.process("SybilJoin", &format!("ent({home}) . SybilBad"))?;
    for i in 1..=n {
        ext.agent(&format!("Sybil{i}"), "SybilJoin", 0.0)?;
    }
    props.push(Pending::fixed(
        "identities-rate-target",
        format!("EF(tf[count,Sybil1,{target}] >= 1)"),
        true,
    ));
    if club {
        props.push(Pending::fixed("sybil-zeroes-trust", format!("EF(t[{observer},{target}] = 0)"), true));
    }
    Ok(())
}

/// `WwOld` serves `Watch` badly, leaves the group and hands over to
/// `WwNew`, which joins and serves well.
fn white_washing(
    ext: &mut Extender,
    k: &Knobs,
    base: &ScenarioBundle,
    club: bool,
    props: &mut Vec<Pending>,
) -> Result<(), ScenarioError> {
    let target = k.agent("target", &base.target, ext.spec)?;
    let home = home_group(ext.spec, &target)?;
    ext.channel("ww_req", "ww_recv", ActionClass::High)?;
    ext.channel("ww_ok", "ww_ok_in", ActionClass::Neutral)?;
    ext.channel("ww_bad", "ww_bad_in", ActionClass::Neutral)?;
    ext.channel("ww_link", "ww_link_in", ActionClass::Neutral)?;
    ext.process("Watch", "ww_req . (ww_ok_in . obs(1) . Watch + ww_bad_in . obs(-1) . Watch)")?;
    ext.process("WwOld", &format!("ww_recv . ww_bad . esc({home}) . ww_link . 0"))?;
    ext.process("WwGood", "ww_recv . ww_ok . WwGood")?;
    ext.process("WwNew", &format!("ww_link_in . ent({home}) . WwGood"))?;
    ext.agent("WwOld", "WwOld", 0.0)?;
    ext.agent("WwNew", "WwNew", 0.0)?;
    ext.agent("Watch", "Watch", watchdog_threshold(ext.spec))?;
    ext.join(&home, "WwOld");
    ext.join(&home, "Watch");
    ext.group("WwHandoff", &["WwOld", "WwNew"])?;
    ext.opinion("Watch", "WwOld", 1, 1);
    props.push(Pending::fixed("old-identity-exposed", "EF(tf[min,Watch,WwOld] <= -1)".into(), true));
    props.push(Pending::fixed(
        "fresh-identity-clean",
        "EF(tf[min,Watch,WwOld] <= -1 and tf[count,Watch,WwNew] = 0 and <WwNew.tau>)".into(),
        true,
    ));
    if club {
        props.push(Pending::fixed("newcomer-untrusted", "AG(t[Watch,WwNew] = 0)".into(), true));
    } else {
        props.push(Pending::fixed("newcomer-trusted", "EF(t[Watch,WwNew] > 0)".into(), true));
    }
    Ok(())
}

use std::fmt::Write;

use crate::system::{parse_system, validate_spec, SystemSpec};

use super::{initial_trust, suggested_bounds, sync_guard_property, Property, ScenarioBundle, ScenarioError};

/// Consumer `C1`, producers `P{i}_{j}` and one manager `D{i}` per club.
///
/// The consumer picks a club, requests service (H) from a producer it
/// trusts, and rates the outcome. A producer delivers (H) to consumers it
/// trusts and denies (L) the rest; after delivering it rates the consumer.
/// Managers rate every producer of their club and, with two clubs, each
/// other, which seeds the trust needed for the first request.
pub fn build_club_example(n_producers: usize, n_clubs: usize, lambda: f64) -> Result<ScenarioBundle, ScenarioError> {
    let bad = |name: &str, value: String, reason: &str| ScenarioError::BadParam {
        name: name.to_string(),
        value,
        reason: reason.to_string(),
    };
    if n_producers == 0 {
        return Err(bad("n_producers", "0".into(), "need at least one producer"));
    }
    if !(1..=2).contains(&n_clubs) {
        return Err(bad("n_clubs", n_clubs.to_string(), "must be 1 or 2"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(bad("lambda", lambda.to_string(), "must lie in (0, 1)"));
    }

    let clubs = 1..=n_clubs;
    let producers = || clubs.clone().flat_map(|i| (1..=n_producers).map(move |j| (i, j)));
    let mut src = String::new();

    src.push_str("actions {\n");
    for i in clubs.clone() {
        writeln!(src, "  out send_request_{i} @H in receive_request_{i} @H").unwrap();
    }
    for (i, j) in producers() {
        writeln!(
            src,
            "  out deliver_{i}_{j} @H in receive_service_{i}_{j} @H out deny_{i}_{j} @L in receive_denial_{i}_{j} @L"
        )
        .unwrap();
    }
    src.push_str("}\nsync {\n");
    for i in clubs.clone() {
        writeln!(src, "  send_request_{i} x receive_request_{i};").unwrap();
    }
    for (i, j) in producers() {
        writeln!(src, "  deliver_{i}_{j} x receive_service_{i}_{j};").unwrap();
        writeln!(src, "  deny_{i}_{j} x receive_denial_{i}_{j};").unwrap();
    }
    src.push_str("}\n");

    let rate = |k: &str| format!("(obs(1) . {k} + obs(-1) . {k})");
    let branches: Vec<String> = clubs
        .clone()
        .map(|i| {
            let replies: Vec<String> = (1..=n_producers)
                .map(|j| {
                    format!(
                        "receive_service_{i}_{j} . {} + receive_denial_{i}_{j} . obs(-1) . Cons",
                        rate("Cons")
                    )
                })
                .collect();
            format!("tau . send_request_{i} . ({})", replies.join(" + "))
        })
        .collect();
    writeln!(src, "process Cons := {}", branches.join(" + ")).unwrap();
    for (i, j) in producers() {
        let k = format!("Prod_{i}_{j}");
        writeln!(
            src,
            "process {k} := receive_request_{i} . (deliver_{i}_{j} . {} + deny_{i}_{j} . {k})",
            rate(&k)
        )
        .unwrap();
    }
    src.push_str("process CDSR := 0\n");

    // Thresholds are filled in once the initial trust values are known.
    src.push_str("agent C1 : Cons threshold 0\n");
    for (i, j) in producers() {
        writeln!(src, "agent P{i}_{j} : Prod_{i}_{j} threshold 0").unwrap();
    }
    for i in clubs.clone() {
        writeln!(src, "agent D{i} : CDSR threshold 0").unwrap();
    }

    for i in clubs.clone() {
        let mut members = vec![format!("D{i}")];
        if i == 1 {
            members.push("C1".into());
        }
        members.extend((1..=n_producers).map(|j| format!("P{i}_{j}")));
        writeln!(src, "group G{i} = {{ {} }}", members.join(", ")).unwrap();
    }
    for (i, j) in producers().filter(|&(i, _)| i != 1) {
        writeln!(src, "group Visit{i}_{j} = {{ C1, P{i}_{j} }}").unwrap();
    }

    for (i, j) in producers() {
        writeln!(src, "opinion D{i} -> P{i}_{j} : 1 x 2").unwrap();
    }
    src.push_str("opinion D1 -> C1 : 1 x 2\n");
    if n_clubs == 2 {
        src.push_str("opinion D1 -> D2 : 1 x 2\nopinion D2 -> D1 : 1 x 2\n");
    }
    writeln!(src, "model club {{ lambda {lambda} cdsr {{ CDSR }} }}").unwrap();

    let mut spec = parse_system(&src)?;
    let threshold = club_threshold(&spec, n_producers, n_clubs)?;
    for a in &mut spec.agents {
        if a.behavior != "CDSR" {
            a.threshold = threshold;
        }
    }
    let diags = validate_spec(&spec);
    if !diags.is_empty() {
        return Err(ScenarioError::Invalid(diags));
    }
    let properties = club_properties(&spec, n_producers, threshold);
    Ok(ScenarioBundle {
        spec,
        properties,
        bounds: suggested_bounds(),
        observer: "C1".into(),
        target: "P1_1".into(),
        added_agents: Default::default(),
        added_groups: Default::default(),
        added_processes: Default::default(),
        added_actions: Default::default(),
    })
}

/// 0.5 when every initial consumer/producer trust reaches it, otherwise
/// half the smallest such value, so that every first request can happen.
fn club_threshold(spec: &SystemSpec, n_producers: usize, n_clubs: usize) -> Result<f64, ScenarioError> {
    let mut lowest = f64::INFINITY;
    for i in 1..=n_clubs {
        for j in 1..=n_producers {
            let p = format!("P{i}_{j}");
            lowest = lowest.min(initial_trust(spec, "C1", &p)?);
            lowest = lowest.min(initial_trust(spec, &p, "C1")?);
        }
    }
    Ok(if lowest >= 0.5 { 0.5 } else { lowest / 2.0 })
}

fn club_properties(spec: &SystemSpec, n_producers: usize, threshold: f64) -> Vec<Property> {
    let after_denial: Vec<String> = (1..=n_producers)
        .map(|j| format!("not EX<P1_{j}.deny_1_{j}*C1.receive_denial_1_{j}>(not EF(tf[min,C1,P1_{j}] <= -1))"))
        .collect();
    vec![
        Property::new("sync-guards", sync_guard_property(spec), true),
        Property::parsed("denial-then-negative", &format!("AG({})", after_denial.join(" and ")), true),
        Property::parsed("denial-reachable", "EF(<P1_1.deny_1_1*C1.receive_denial_1_1>)", true),
        Property::parsed("pretrusted-initial", "t[C1,P1_1] > 0", true),
        Property::parsed(
            "trust-without-experience",
            &format!("EF(t[C1,P1_1] >= {threshold} and tf[count,C1,P1_1] = 0)"),
            true,
        ),
    ]
}

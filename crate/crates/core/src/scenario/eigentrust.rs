use std::fmt::Write;

use crate::system::{parse_system, validate_spec};

use super::{suggested_bounds, sync_guard_property, Property, ScenarioBundle, ScenarioError};

pub(crate) const PEER_THRESHOLD: f64 = 0.3;

/// Peers `P1..Pn` in one group `Net`. Each peer serves requests forever
/// and may itself request service once, rating the server afterwards.
pub fn build_eigentrust_example(n_peers: usize) -> Result<ScenarioBundle, ScenarioError> {
    if n_peers < 2 {
        return Err(ScenarioError::BadParam {
            name: "n_peers".into(),
            value: n_peers.to_string(),
            reason: "need at least two peers".into(),
        });
    }
    let mut src = String::from(
        "actions { out request @H in serve @H }
         sync { request x serve; }
         process Peer := request . (obs(1) . Idle + obs(-1) . Idle) + serve . Peer
         process Idle := serve . Idle
         ",
    );
    let peers: Vec<String> = (1..=n_peers).map(|i| format!("P{i}")).collect();
    for p in &peers {
        writeln!(src, "agent {p} : Peer threshold {PEER_THRESHOLD}").unwrap();
    }
    writeln!(src, "group Net = {{ {} }}", peers.join(", ")).unwrap();
    src.push_str("model eigentrust { }\n");

    let spec = parse_system(&src)?;
    let diags = validate_spec(&spec);
    if !diags.is_empty() {
        return Err(ScenarioError::Invalid(diags));
    }
    let properties = vec![
        Property::new("sync-guards", sync_guard_property(&spec), true),
        Property::parsed("initial-trust", "t[P1,P2] > 0", true),
        Property::parsed("negative-feedback-reachable", "EF(tf[min,P1,P2] <= -1)", true),
        Property::parsed("one-rating-per-request", "AG(not tf[count,P1,P2] >= 2)", true),
    ];
    Ok(ScenarioBundle {
        spec,
        properties,
        bounds: suggested_bounds(),
        observer: "P1".into(),
        target: "P2".into(),
        added_agents: Default::default(),
        added_groups: Default::default(),
        added_processes: Default::default(),
        added_actions: Default::default(),
    })
}

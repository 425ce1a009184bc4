use std::collections::HashMap;

use rayon::prelude::*;

use crate::system::{validate_spec, Groups, OpinionMultiset, SystemSpec};
use crate::trust::TrustModel;

use super::{Configuration, Engine, RuleKind, SemanticsError, Step, TransitionLabel};

/// Exploration limits. The opinion cap saturates every rated
/// multiplicity so cyclic behaviors yield finitely many states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_states: usize,
    pub max_depth: usize,
    pub opinion_cap: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_states: 100_000,
            max_depth: 64,
            opinion_cap: 8,
        }
    }
}

impl Bounds {
    pub fn new(max_states: usize, max_depth: usize, opinion_cap: u32) -> Result<Self, SemanticsError> {
        if max_states == 0 {
            return Err(SemanticsError::Bounds("max_states"));
        }
        if max_depth == 0 {
            return Err(SemanticsError::Bounds("max_depth"));
        }
        if opinion_cap == 0 {
            return Err(SemanticsError::Bounds("opinion_cap"));
        }
        Ok(Bounds {
            max_states,
            max_depth,
            opinion_cap,
        })
    }

    /// No practical limit; only safe on finite-state specs.
    pub fn unlimited() -> Self {
        Bounds {
            max_states: usize::MAX,
            max_depth: usize::MAX,
            opinion_cap: u32::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub label: TransitionLabel,
    pub rule: RuleKind,
    pub target: usize,
}

/// A trust labeled transition system. State 0 is initial, states are
/// numbered in breadth-first discovery order, and each state is labeled
/// by the groups and opinions of its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Tlts {
    pub(super) agents: Vec<String>,
    pub(super) group_names: Vec<String>,
    pub(super) states: Vec<Configuration>,
    pub(super) edges: Vec<Vec<Edge>>,
    pub(super) truncated: Vec<bool>,
    pub(super) bounds: Bounds,
}

impl Tlts {
    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn state(&self, s: usize) -> &Configuration {
        &self.states[s]
    }

    pub fn successors(&self, s: usize) -> &[Edge] {
        &self.edges[s]
    }

    /// All transitions as `(source, edge)`, ordered by source.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(s, es)| es.iter().map(move |e| (s, e)))
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn labeling(&self, s: usize) -> (&Groups, &OpinionMultiset) {
        (&self.states[s].groups, &self.states[s].opinions)
    }

    pub fn is_truncated(&self, s: usize) -> bool {
        self.truncated[s]
    }

    pub fn truncated_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.truncated.iter().enumerate().filter(|(_, &t)| t).map(|(s, _)| s)
    }

    pub fn any_truncated(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// True iff feedback stays well defined in every state along `path`.
    pub fn path_is_well_defined(&self, path: &[usize]) -> bool {
        crate::system::is_well_defined(path.iter().map(|&s| &self.states[s].opinions))
    }
}

/// Breadth-first exploration from the initial configuration.
///
/// `threads > 1` expands each BFS level in parallel; the merge is
/// sequential in frontier order, so the result does not depend on the
/// thread count.
pub fn build_tlts(
    spec: &SystemSpec,
    trust: &dyn TrustModel,
    bounds: Bounds,
    threads: usize,
) -> Result<Tlts, SemanticsError> {
    let diags = validate_spec(spec);
    if !diags.is_empty() {
        return Err(SemanticsError::InvalidSpec(diags));
    }
    let bounds = Bounds::new(bounds.max_states, bounds.max_depth, bounds.opinion_cap)?;
    let engine = Engine::new(spec, trust, bounds.opinion_cap);
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| SemanticsError::Threads(e.to_string()))?,
        )
    } else {
        None
    };

    let init = Configuration::initial(spec);
    let mut index: HashMap<Configuration, usize> = HashMap::from([(init.clone(), 0)]);
    let mut states = vec![init];
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new()];
    let mut truncated = vec![false];
    let mut frontier = vec![0usize];
    let mut depth = 0usize;

    while !frontier.is_empty() {
        let expand = |s: &usize| engine.successors(&states[*s]);
        let succs: Vec<Vec<Step>> = match &pool {
            Some(pool) => pool.install(|| frontier.par_iter().map(expand).collect()),
            None => frontier.iter().map(expand).collect(),
        };
        if depth >= bounds.max_depth {
            for (&s, st) in frontier.iter().zip(&succs) {
                if !st.is_empty() {
                    truncated[s] = true;
                }
            }
            break;
        }
        let mut next = Vec::new();
        for (&s, st) in frontier.iter().zip(succs) {
            for step in st {
                let target = match index.get(&step.target) {
                    Some(&d) => d,
                    None if states.len() < bounds.max_states => {
                        let d = states.len();
                        index.insert(step.target.clone(), d);
                        states.push(step.target);
                        edges.push(Vec::new());
                        truncated.push(false);
                        next.push(d);
                        d
                    }
                    None => {
                        truncated[s] = true;
                        continue;
                    }
                };
                edges[s].push(Edge {
                    label: step.label,
                    rule: step.rule,
                    target,
                });
            }
        }
        frontier = next;
        depth += 1;
    }

    Ok(Tlts {
        agents: spec.agents.iter().map(|a| a.name.clone()).collect(),
        group_names: spec.groups.iter().map(|g| g.name.clone()).collect(),
        states,
        edges,
        truncated,
        bounds,
    })
}

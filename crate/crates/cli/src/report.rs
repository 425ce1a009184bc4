use serde::Serialize;
use sha2::{Digest, Sha256};

use tas_core::scenario::Property;
use tas_core::semantics::{Bounds, Tlts};
use tas_core::ttl::CheckResult;

/// `sha256:` followed by the hex digest of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

#[derive(Debug, Serialize)]
pub struct BoundsReport {
    pub max_states: usize,
    pub max_depth: usize,
    pub opinion_cap: u32,
}

impl From<Bounds> for BoundsReport {
    fn from(b: Bounds) -> Self {
        BoundsReport {
            max_states: b.max_states,
            max_depth: b.max_depth,
            opinion_cap: b.opinion_cap,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerdictReport {
    pub name: String,
    pub formula: String,
    pub verdict: &'static str,
    pub bounded: bool,
    pub satisfying_count: usize,
    pub witness: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<bool>,
}

impl VerdictReport {
    pub fn new(p: &Property, r: &CheckResult, agents: &[String]) -> Self {
        VerdictReport {
            name: p.name.clone(),
            formula: p.formula.to_string(),
            verdict: r.verdict.name(),
            bounded: r.bounded,
            satisfying_count: r.satisfying.len(),
            witness: r.witness.as_ref().map(|w| w.labels(agents)).unwrap_or_default(),
            expected: p.expected,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TrustReport {
    /// `None` for the initial configuration read without exploring.
    pub state: Option<usize>,
    pub agents: Vec<String>,
    /// Row = rater, column = target; the diagonal is null.
    pub matrix: Vec<Vec<Option<f64>>>,
}

/// What a run prints on stdout. Apart from `duration_ms` it depends only
/// on the command line and the input files.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transitions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trust: Option<TrustReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<VerdictReport>,
    pub duration_ms: u64,
    #[serde(skip)]
    pub suppressed: bool,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        RunReport {
            command,
            spec_digest: None,
            bounds: None,
            states: None,
            transitions: None,
            truncated: None,
            diagnostics: None,
            trust: None,
            verdicts: Vec::new(),
            duration_ms: 0,
            suppressed: false,
        }
    }

    pub fn record_exploration(&mut self, t: &Tlts) {
        self.bounds = Some(t.bounds().into());
        self.states = Some(t.state_count());
        self.transitions = Some(t.transition_count());
        self.truncated = Some(t.any_truncated());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    kind: &'static str,
    message: String,
    details: Vec<String>,
}

#[derive(Serialize)]
struct FailureJson<'a> {
    error: &'a str,
    kind: &'a str,
    exit_code: u8,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    details: &'a [String],
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage",
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn spec(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "spec",
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn with_details(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }

    pub fn emit(&self, json: bool) {
        if json {
            let doc = FailureJson {
                error: &self.message,
                kind: self.kind,
                exit_code: self.code,
                details: &self.details,
            };
            eprintln!("{}", serde_json::to_string(&doc).expect("error serializes"));
        } else {
            eprintln!("error: {}", self.message);
            for d in &self.details {
                eprintln!("  {d}");
            }
        }
    }
}

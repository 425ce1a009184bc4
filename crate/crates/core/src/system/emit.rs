use std::fmt;

use crate::calculus::ActionKind;

use super::{ModelSpec, SystemSpec};

/// Renders the spec in the `.tas` DSL; [`parse_system`](super::parse_system)
/// reads the output back to an equal spec.
impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "actions {{")?;
        for (name, kind) in self.signature.iter() {
            let dir = match kind {
                ActionKind::Output => "out",
                _ => "in",
            };
            let class = if self.classification.high.contains(name) {
                " @H"
            } else if self.classification.low.contains(name) {
                " @L"
            } else {
                ""
            };
            writeln!(f, "  {dir} {name}{class}")?;
        }
        writeln!(f, "}}")?;

        if !self.sync.is_empty() {
            writeln!(f, "sync {{")?;
            for p in &self.sync {
                writeln!(f, "  {} x {};", p.out, p.input)?;
            }
            writeln!(f, "}}")?;
        }

        for (name, body) in self.defs.iter() {
            writeln!(f, "process {name} := {body}")?;
        }
        for a in &self.agents {
            writeln!(f, "agent {} : {} threshold {}", a.name, a.behavior, a.threshold)?;
        }
        for g in &self.groups {
            writeln!(f, "group {} = {{ {} }}", g.name, g.members.join(", "))?;
        }
        for o in &self.opinions {
            write!(f, "opinion {} -> {} : {}", o.rater, o.target, o.score)?;
            if o.count != 1 {
                write!(f, " x {}", o.count)?;
            }
            writeln!(f)?;
        }
        match &self.model {
            ModelSpec::Club { lambda, cdsr } => {
                let cdsr: Vec<&str> = cdsr.iter().map(String::as_str).collect();
                writeln!(f, "model club {{ lambda {lambda} cdsr {{ {} }} }}", cdsr.join(" "))
            }
            ModelSpec::EigenTrust {
                damping,
                pretrusted,
                epsilon,
                max_iter,
                per_group,
            } => {
                write!(f, "model eigentrust {{ damping {damping}")?;
                if !pretrusted.is_empty() {
                    write!(f, " pretrusted {{ {} }}", pretrusted.join(" "))?;
                }
                write!(f, " epsilon {epsilon} max_iter {max_iter}")?;
                if *per_group {
                    write!(f, " per_group")?;
                }
                writeln!(f, " }}")
            }
        }
    }
}

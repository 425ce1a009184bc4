//! Trust temporal logic: formulas over transition labels and trust
//! predicates, checked by explicit fixpoint computation.

mod check;
mod parse;

use std::fmt;

pub use check::{
    check, check_tlts, eval_trust_variable, CheckError, CheckResult, ModelView, TransitionSystem, VarRef,
    Verdict, Witness, WitnessStep,
};
pub use parse::parse_formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregateFn {
    Sum,
    Min,
    Max,
    Count,
}

impl AggregateFn {
    pub fn name(self) -> &'static str {
        match self {
            AggregateFn::Sum => "sum",
            AggregateFn::Min => "min",
            AggregateFn::Max => "max",
            AggregateFn::Count => "count",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sum" => Some(AggregateFn::Sum),
            "min" => Some(AggregateFn::Min),
            "max" => Some(AggregateFn::Max),
            "count" => Some(AggregateFn::Count),
            _ => None,
        }
    }
}

/// `t[I,J]` reads the trust model; `tf[f,I,J]` aggregates the scores
/// `I` gave `J`.
#[derive(Debug, Clone, PartialEq)]
pub enum TrustVariable {
    Model { rater: String, target: String },
    Aggregate { f: AggregateFn, rater: String, target: String },
}

impl TrustVariable {
    pub fn rater(&self) -> &str {
        match self {
            TrustVariable::Model { rater, .. } | TrustVariable::Aggregate { rater, .. } => rater,
        }
    }

    pub fn target(&self) -> &str {
        match self {
            TrustVariable::Model { target, .. } | TrustVariable::Aggregate { target, .. } => target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl Relation {
    /// Absolute tolerance used by `=`.
    pub const EQ_TOLERANCE: f64 = 1e-12;

    pub fn holds(self, value: f64, k: f64) -> bool {
        match self {
            Relation::Ge => value >= k,
            Relation::Gt => value > k,
            Relation::Le => value <= k,
            Relation::Lt => value < k,
            Relation::Eq => (value - k).abs() <= Self::EQ_TOLERANCE,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
        }
    }
}

/// An agent or action position in a pattern; `None` is a wildcard.
pub type Slot = Option<String>;

/// Transition label patterns.
///
/// | syntax      | matches                                          |
/// |-------------|--------------------------------------------------|
/// | `*`         | every transition                                 |
/// | `I.tau`     | internal steps of `I`                            |
/// | `I.*`       | internal steps of `I` and syncs `I` governs      |
/// | `I.a`       | syncs in which `I` performs `a`, in either role  |
/// | `I.a*J.b`   | syncs with `I` sending `a` and `J` receiving `b` |
///
/// `*` or `?` in any agent or action position is a wildcard.
#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Any,
    Internal(Slot),
    Agent(Slot),
    Performs(Slot, String),
    Sync {
        governing: Slot,
        out: Slot,
        reacting: Slot,
        input: Slot,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Action(Pattern),
    Trust { var: TrustVariable, rel: Relation, k: f64 },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Ex(Pattern, Box<Formula>),
    Ef(Box<Formula>),
    Ag(Box<Formula>),
    Eu(Box<Formula>, Box<Formula>),
    Au(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn ex(p: Pattern, f: Formula) -> Self {
        Formula::Ex(p, Box::new(f))
    }

    pub fn ef(f: Formula) -> Self {
        Formula::Ef(Box::new(f))
    }

    pub fn ag(f: Formula) -> Self {
        Formula::Ag(Box::new(f))
    }

    pub fn eu(a: Formula, b: Formula) -> Self {
        Formula::Eu(Box::new(a), Box::new(b))
    }

    pub fn au(a: Formula, b: Formula) -> Self {
        Formula::Au(Box::new(a), Box::new(b))
    }

    /// Nesting depth; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Action(_) | Formula::Trust { .. } => 0,
            Formula::Not(f) | Formula::Ex(_, f) | Formula::Ef(f) | Formula::Ag(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Eu(a, b) | Formula::Au(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

fn slot(f: &mut fmt::Formatter<'_>, s: &Slot) -> fmt::Result {
    f.write_str(s.as_deref().unwrap_or("*"))
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Any => f.write_str("*"),
            Pattern::Internal(a) => {
                slot(f, a)?;
                f.write_str(".tau")
            }
            Pattern::Agent(a) => {
                slot(f, a)?;
                f.write_str(".*")
            }
            Pattern::Performs(a, act) => {
                slot(f, a)?;
                write!(f, ".{act}")
            }
            Pattern::Sync {
                governing,
                out,
                reacting,
                input,
            } => {
                slot(f, governing)?;
                f.write_str(".")?;
                slot(f, out)?;
                f.write_str("*")?;
                slot(f, reacting)?;
                f.write_str(".")?;
                slot(f, input)
            }
        }
    }
}

impl fmt::Display for TrustVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrustVariable::Model { rater, target } => write!(f, "t[{rater},{target}]"),
            TrustVariable::Aggregate { f: func, rater, target } => {
                write!(f, "tf[{},{rater},{target}]", func.name())
            }
        }
    }
}

/// Prints a fully parenthesized formula that [`parse_formula`] reads back.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Action(p) => write!(f, "<{p}>"),
            Formula::Trust { var, rel, k } => write!(f, "{var} {} {k}", rel.symbol()),
            Formula::Not(a) => write!(f, "not ({a})"),
            Formula::And(a, b) => write!(f, "({a}) and ({b})"),
            Formula::Or(a, b) => write!(f, "({a}) or ({b})"),
            Formula::Ex(p, a) => write!(f, "EX<{p}>({a})"),
            Formula::Ef(a) => write!(f, "EF({a})"),
            Formula::Ag(a) => write!(f, "AG({a})"),
            Formula::Eu(a, b) => write!(f, "EU({a}, {b})"),
            Formula::Au(a, b) => write!(f, "AU({a}, {b})"),
        }
    }
}

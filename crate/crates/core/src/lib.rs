//! Trust-aware process calculus: syntax, composition semantics, trust
//! models and a model checker for the trust temporal logic.

pub mod calculus;
pub mod scenario;
pub mod semantics;
mod syntax;
pub mod system;
pub mod trust;
pub mod ttl;

pub use syntax::ParseError;

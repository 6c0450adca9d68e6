//! Generic MILP layer: model IR, exact-enough simplex, branch-and-bound and
//! LP/MPS exchange files.

pub mod branch;
pub mod lpfile;
pub mod model;
pub mod mps;
pub mod simplex;

pub use branch::{solve_milp, MilpOutcome, MilpStatus, SolverError};
pub use model::{rat, Combo, Domain, Family, LinearConstraint, MilpModel, Rational, Sense, Symbol, Tag, VarId, Violation};
pub use lpfile::{emit_lp, read_lp, ReadError};
pub use mps::{emit_mps, read_mps};
pub use simplex::{solve_lp, LpOutcome, LpStatus};

/// Which fractional binary to branch on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    /// value closest to 0.5, lowest variable id on ties
    #[default]
    MostFractional,
    /// lowest variable id
    FirstFractional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// `None` disables the limit.
    pub node_limit: Option<u64>,
    pub time_limit_ms: Option<u64>,
    pub branching: Branching,
    /// Worker threads for the tree search; 1 runs on the calling thread.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            integrality_tol: 1e-6,
            node_limit: None,
            time_limit_ms: None,
            branching: Branching::default(),
            threads: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::InvalidConfig(what.to_string()));
        if !(self.feasibility_tol > 0.0) {
            return bad("feasibility_tol must be positive");
        }
        if !(self.integrality_tol > 0.0 && self.integrality_tol < 0.5) {
            return bad("integrality_tol must lie in (0, 0.5)");
        }
        if self.node_limit == Some(0) || self.time_limit_ms == Some(0) {
            return bad("limits must be positive");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }
}

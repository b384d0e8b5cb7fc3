//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument (non-positive coefficient, bad mesh orders, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Requested resolution exceeds the configured memory budget.
    #[error("resolution exceeds budget: need {need} fine dofs, cap is {cap}")]
    Budget { need: usize, cap: usize },

    /// A local 9x9 element system could not be factorized.
    #[error("singular local solver system on element {element}")]
    SingularLocalSystem { element: usize },

    /// A linear solve did not reach the required residual.
    #[error("solver breakdown: achieved relative residual {residual:e}")]
    SolverBreakdown { residual: f64 },

    /// Constraint block of a corrector saddle problem is rank deficient.
    #[error("inf-sup failure: rank-deficient constraint block on patch of element {element}")]
    InfSup { element: usize },

    /// Skeletal vectors or operators tagged with incompatible dof spaces.
    #[error("dof space mismatch: expected {expected}, got {got}")]
    LevelMismatch {
        expected: &'static str,
        got: &'static str,
    },

    /// Two solutions compared with different mesh/coefficient/tau metadata.
    #[error("metadata mismatch: {0}")]
    MetadataMismatch(String),

    /// Malformed input file (coefficient grid, corrector cache).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

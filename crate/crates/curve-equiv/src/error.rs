//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by model evaluation, data ingestion, fitting, constrained
/// optimization, and the test procedures.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter vector does not match the model's dimension.
    #[error("parameter vector has length {got}, model `{id}` expects {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },

    /// A family-specific parameter restriction is violated (e.g. the EMAX
    /// half-effect parameter must be positive).
    #[error("model domain violation: {0}")]
    Domain(String),

    /// Attempt to register a model id that already exists.
    #[error("duplicate model id `{0}`")]
    DuplicateId(String),

    /// Lookup of an unknown model id or scenario preset.
    #[error("unknown id `{0}`")]
    NotFound(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A data file contains no observations for one of the two groups.
    #[error("group {0} has no observations")]
    EmptyGroup(u8),

    /// Invalid argument or configuration detected before any numerics run.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The least-squares solver reached no start that satisfies the
    /// gradient-norm tolerance.
    #[error("least-squares fit did not converge: {0}")]
    NonConvergence(String),

    /// The information matrix fails the condition-number check, so its
    /// inverse (and everything downstream of it) is unreliable.
    #[error("information matrix is numerically singular (condition number {cond:.3e})")]
    SingularInformation { cond: f64 },

    /// Group 2 is empty, so the allocation ratio n/n1 degenerates to 1.
    #[error("group 2 is empty; allocation ratio is degenerate")]
    DegenerateAllocation,

    /// No iterate of the constrained fit reached the feasibility tolerance,
    /// e.g. because the target distance exceeds what the parameter boxes
    /// allow.
    #[error("constraint d = {eps} is infeasible: best residual {residual:.3e}")]
    ConstraintInfeasible { eps: f64, residual: f64 },

    /// The maximal deviation is attained at more than one point (or on a
    /// plateau), so the asymptotic sup test does not apply.
    #[error(
        "maximal deviation attained at {count} extremal point(s){}; \
         the asymptotic sup test requires a unique extremum — use the bootstrap test instead",
        if *.plateau { " (plateau)" } else { "" }
    )]
    NonUniqueExtremum { count: usize, plateau: bool },

    /// A bootstrap quantile was requested from an empty statistic set.
    #[error("empty bootstrap statistic set")]
    EmptyStats,

    /// More than 5% of bootstrap replications failed to refit even after a
    /// retry.
    #[error("{dropped} of {total} bootstrap replications failed to refit (more than 5%)")]
    DroppedReplicates { dropped: usize, total: usize },

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Exact computational laboratory for groups acting on simplicial trees.
//!
//! Everything on a verdict path is integer or rational arithmetic: distances
//! and translation lengths on trees are integers (quadrupled where interior
//! points of edges are in play), Gromov products are eighth-integers carried
//! as `gromov4` values, and growth inequalities are decided by
//! cross-multiplied big-integer power comparisons. Floating point appears
//! only in display fields.

pub mod config;
pub mod displacement;
pub mod group;
pub mod growth;
pub mod loxo;
pub mod ratio;
pub mod report;
pub mod schreier;
pub mod suite;
pub mod tree;

/// Library-wide error type. The CLI maps these onto distinct exit codes:
/// configuration problems (2), inconclusive searches (3), invariant
/// violations (4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A word, element, or quotient does not match the group it claims to
    /// live in (bad generator index, exponent out of range, wrong shape).
    #[error("spec mismatch: {0}")]
    SpecMismatch(String),

    /// An operation's stated precondition does not hold for the given input.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A configured resource cap was hit before the computation finished.
    /// Reported explicitly rather than silently truncating.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A bounded search ended without settling the question either way.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// A certified invariant failed to re-verify. This is always a bug or a
    /// genuine counterexample and is never downgraded.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

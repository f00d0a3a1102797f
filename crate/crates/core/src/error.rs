//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    /// Non-finite values or magnitudes past the overflow threshold. Blow-up
    /// is expected behaviour under study, so this is a signal, not a panic.
    #[error("overflow: non-finite or oversized values encountered")]
    Overflow,

    #[error("field not resolvable in basis: tail energy fraction {tail:.3e} exceeds {limit:.1e}")]
    Resolution { tail: f64, limit: f64 },

    #[error("grid too coarse: need at least {required} nodes, have {actual}")]
    GridTooCoarse { required: usize, actual: usize },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("solution blew up before probe time {0}")]
    BlowupBeforeProbe(f64),

    #[error("hypotheses not satisfied: {0}")]
    PreconditionViolated(String),

    #[error("no feasible tuple: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

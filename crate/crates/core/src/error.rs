use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unknown vertex handle {0}")]
    UnknownVertex(String),
    #[error("kernel range {needed} exceeds available ball radius {available}")]
    RangeExceeded { needed: usize, available: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("predicate is not saturated: value changes under re-rooting of atom {0}")]
    NotSaturated(usize),
    #[error("measure is not conjugation invariant: conjugator {conjugator} sends atom {atom} outside the weighted orbit")]
    NotInvariant { conjugator: usize, atom: usize },
    #[error("action is not free: element {element} fixes vertex {vertex}")]
    NotFree { element: usize, vertex: usize },
    #[error("core mass oracle missing for generator atom {0}")]
    MissingCoreOracle(usize),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {id} is outside 1..={n}")]
    NodeOutOfRange { id: u32, n: u32 },

    #[error("nodes {0} and {1} share no physical link")]
    NotPhysicallyAdjacent(u32, u32),

    #[error("edges {0} and {1} share no endpoint")]
    NotAdjacentEdges(u32, u32),

    #[error("edges {0} and {1} connect the same pair")]
    DegenerateSwap(u32, u32),

    #[error("an entangled edge already joins {0} and {1}")]
    DuplicateTargetEdge(u32, u32),

    #[error("nodes {0} and {1} are physically adjacent; entangle them directly")]
    PhysicalSwapTarget(u32, u32),

    #[error("unknown edge id {0}")]
    UnknownEdge(u32),

    #[error("node has no neighbors to select from")]
    EmptyNeighborhood,

    #[error("connection request joins node {0} to itself")]
    DegenerateRequest(u32),

    #[error("snapshot step {step} does not follow last recorded step {last}")]
    OutOfOrderStep { step: u64, last: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("need at least {needed} usable points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("config error in {path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error("malformed CSV {path}: {msg}")]
    MalformedCsv { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

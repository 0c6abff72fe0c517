use std::path::PathBuf;

use thiserror::Error;

use crate::netsim::RoundTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("point ids must be 0..n-1 in order; found id {found} at position {position}")]
    BadPointIds { position: usize, found: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Net(#[from] NetError),

    #[error("verification failed ({what}); instance saved to {}", instance.display())]
    VerificationFailed { what: String, instance: PathBuf },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failures raised by the round engine.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("round limit {limit} exceeded")]
    RoundLimit { limit: u64, trace: Box<RoundTrace> },

    #[error("record of {words} words exceeds the CONGEST width of {limit} words")]
    WidthViolation { words: usize, limit: usize },

    #[error("node {src} tried to send to non-neighbor {dst}")]
    NonNeighbor { src: usize, dst: usize },

    #[error("k-hop gathering is only available in the LOCAL model")]
    GatherUnderCongest,

    #[error("message for stage {stage} arrived at round {round}, after its window closed at {deadline}")]
    ScheduleOverrun { stage: usize, round: u64, deadline: u64 },
}

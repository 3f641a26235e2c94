use thiserror::Error;

use crate::graph::AgentId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("need at least 2 agents, got {0}")]
    TooFewAgents(usize),

    #[error("self-loop on agent {0}")]
    SelfLoop(AgentId),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(AgentId, AgentId),

    #[error("edge ({i}, {j}) has an endpoint outside 1..={n}")]
    EndpointOutOfRange { i: usize, j: usize, n: usize },

    #[error("not a leader-follower structure: {0}")]
    NotLeaderFollower(String),

    #[error("bearing undefined between agents {i} and {j} (distance {dist:e} m)")]
    BearingUndefined { i: AgentId, j: AgentId, dist: f64 },

    #[error("bearing undefined between agents {i} and {j} at t = {t} s")]
    BearingUndefinedAt { i: AgentId, j: AgentId, t: f64 },

    #[error("gains must be positive (kp = {kp}, kd = {kd})")]
    NonpositiveGain { kp: f64, kd: f64 },

    #[error("gain bound violated: {0}")]
    InadmissibleGains(String),

    #[error("edge ({0}, {1}) is not in the graph")]
    UnknownEdge(AgentId, AgentId),

    #[error("signal span {span} s is shorter than the window T = {window} s")]
    SpanTooShort { span: f64, window: f64 },

    #[error("sample grids do not match")]
    GridMismatch,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("non-finite state for agent {agent} at t = {t} s")]
    NonFinite { agent: AgentId, t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing sections: {}", .0.join(", "))]
    MissingSections(Vec<String>),

    #[error("separation guard violated between agents {i} and {j} at t = {t} s (distance {dist:e} m)")]
    SeparationViolated { i: AgentId, j: AgentId, t: f64, dist: f64 },

    #[error("{0}")]
    Io(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: scenario, graph, gains, arguments.
    Validation,
    /// The run started but could not finish.
    Runtime,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::BearingUndefinedAt { .. } | Error::NonFinite { .. } | Error::SeparationViolated { .. } | Error::Io(_) => {
                ErrorClass::Runtime
            }
            _ => ErrorClass::Validation,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

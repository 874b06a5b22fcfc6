use thiserror::Error;

/// Every failure the framework can report.
///
/// Each variant has a stable name (see [`Error::name`]) so that front ends can
/// map errors onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} parties, got {actual}")]
    Arity { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state threading mismatch between round {round} and round {next}: {detail}")]
    Threading {
        round: usize,
        next: usize,
        detail: String,
    },

    #[error("oracle call {call} is missing the query of party {party}")]
    IncompleteCall { call: usize, party: usize },

    #[error("oracle tape violation for party {party}: {detail}")]
    TapeViolation { party: usize, detail: String },

    #[error("only {eligible} eligible clients, {required} required")]
    InsufficientClients { eligible: usize, required: usize },

    #[error("client {0} was not selected for this round")]
    Selection(u64),

    #[error("value {value} does not fit the centered range of Z_{modulus}")]
    Overflow { value: String, modulus: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("aggregation round incomplete: {received} of {expected} masked updates")]
    IncompleteRound { expected: usize, received: usize },

    #[error("corruption set {0} is not supported by this simulator")]
    UnsupportedCorruption(String),

    #[error("enumeration needs {required} points, budget is {budget}")]
    Budget { required: u128, budget: u128 },

    #[error("simulator read honest party {0}")]
    Hygiene(usize),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

impl Error {
    /// Stable identifier of the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Arity { .. } => "ArityError",
            Error::Domain(_) => "DomainError",
            Error::Threading { .. } => "ThreadingError",
            Error::IncompleteCall { .. } => "IncompleteCallError",
            Error::TapeViolation { .. } => "TapeViolationError",
            Error::InsufficientClients { .. } => "InsufficientClientsError",
            Error::Selection(_) => "SelectionError",
            Error::Overflow { .. } => "OverflowError",
            Error::Config(_) => "ConfigError",
            Error::IncompleteRound { .. } => "IncompleteRoundError",
            Error::UnsupportedCorruption(_) => "UnsupportedCorruptionError",
            Error::Budget { .. } => "BudgetError",
            Error::Hygiene(_) => "HygieneError",
            Error::Parse { .. } => "ParseError",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

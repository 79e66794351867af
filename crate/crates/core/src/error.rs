use thiserror::Error;

/// Crate-wide error type. `category()` yields the stable machine-readable
/// string that the CLI prints on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state is terminal: {0}")]
    TerminalState(String),
    #[error("state is not terminal: {0}")]
    NonTerminalState(String),
    #[error("state is not a chance node: {0}")]
    NonChanceState(String),
    #[error("strategy missing infoset {0}")]
    MissingInfoset(String),
    #[error("belief has zero total mass at {0}")]
    ZeroTotalBelief(String),
    #[error("strategies cover different infoset scopes: {0}")]
    ScopeMismatch(String),
    #[error("subgame is not closed under infoset membership: {0}")]
    ClosureViolation(String),
    #[error("solve target infosets cannot be enumerated: {0}")]
    UnenumerableTarget(String),
    #[error("no value available for leaf {0}")]
    UndefinedLeafValue(String),
    #[error("missing alternative payoff for root infoset {0}")]
    MissingAltValue(String),
    #[error("entry weights sum to zero: {0}")]
    ZeroTotalReach(String),
    #[error("illegal action {action} at {at}")]
    IllegalAction { action: String, at: String },
    #[error("no state consistent with observation {0}")]
    NoCandidate(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::TerminalState(_) => "terminal-state",
            Error::NonTerminalState(_) => "non-terminal-state",
            Error::NonChanceState(_) => "non-chance-state",
            Error::MissingInfoset(_) => "missing-infoset",
            Error::ZeroTotalBelief(_) => "zero-total-belief",
            Error::ScopeMismatch(_) => "scope-mismatch",
            Error::ClosureViolation(_) => "closure-violation",
            Error::UnenumerableTarget(_) => "unenumerable-target",
            Error::UndefinedLeafValue(_) => "undefined-leaf-value",
            Error::MissingAltValue(_) => "missing-alt-value",
            Error::ZeroTotalReach(_) => "zero-total-reach",
            Error::IllegalAction { .. } => "illegal-action",
            Error::NoCandidate(_) => "no-candidate",
            Error::OutOfRange(_) => "out-of-range",
            Error::ProtocolViolation(_) => "protocol-violation",
            Error::Parse(_) => "parse-error",
            Error::Io(_) => "io-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

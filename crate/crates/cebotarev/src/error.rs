use thiserror::Error;

/// Crate-wide error type. The CLI maps variants onto exit codes: input and
/// validation problems exit 2, exhausted search bounds exit 3, internal
/// invariant violations exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),

    #[error("subgroup is not normal: {0}")]
    NotNormal(String),

    #[error("group order {order} exceeds the configured bound {bound}")]
    OrderBound { order: usize, bound: usize },

    #[error("unknown level label {0:?}")]
    UnknownLevel(String),

    #[error("invalid level label {0:?}: {1}")]
    BadLabel(String, String),

    #[error("operation requires singleton class sets: {0}")]
    NotSingleton(String),

    #[error("class is not central: {0}")]
    NotCentral(String),

    #[error("element index {index} out of range for group of order {order}")]
    ElementRange { index: usize, order: usize },

    #[error("class sets belong to different contexts")]
    ContextMismatch,

    #[error("invalid radicand {0}: must be squarefree and neither 0 nor 1")]
    BadRadicand(i64),

    #[error("invalid cyclotomic conductor {0}: need n >= 3 and n != 2 mod 4")]
    BadConductor(u64),

    #[error("invalid atom: {0}")]
    BadAtom(String),

    #[error("invalid set presentation: {0}")]
    BadPresentation(String),

    #[error("atom not representable in the universe: {0}")]
    Unregistered(String),

    #[error("sieve bound {bound} exceeds the configured cap {cap}")]
    SieveCap { bound: u64, cap: u64 },

    #[error("search bound exhausted: {0}")]
    SearchExhausted(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("invalid command: {0}")]
    BadCommand(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SearchExhausted(_) => 3,
            Error::Internal(_) => 4,
            _ => 2,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },

    /// The degree window of the star sampler failed on every attempt.
    #[error("randomness exhausted after {attempts} attempts; {violations} vertices outside the degree window on the last attempt")]
    RandomnessExhausted { attempts: u32, violations: usize },

    /// The lower-bounded flow had no feasible solution although the degree
    /// window held. This is an internal-consistency failure.
    #[error("Hall condition violated: only {routed} of {required} required leaves could be routed")]
    HallViolation { routed: usize, required: usize },

    #[error("no chain survives for any anchor pair")]
    AnchorTooSparse,

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("inconsistent bounds at (s={s}, q={q}): lower {lower} ({lower_provenance}) > upper {upper} ({upper_provenance})")]
    InconsistentBounds {
        s: u32,
        q: usize,
        lower: u64,
        lower_provenance: String,
        upper: u64,
        upper_provenance: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

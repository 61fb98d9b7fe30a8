use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transition matrix is not stochastic: {0}")]
    NonStochastic(String),
    #[error("transition matrix must have at least 2 states, got {0}")]
    TooSmall(usize),
    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),
    #[error("stationary distribution has zero mass at state {0}")]
    ZeroStationaryMass(usize),
    #[error("d(t) = {d_last:.3e} > {epsilon} at horizon t_max = {t_max}")]
    NotMixedWithinHorizon { epsilon: f64, t_max: usize, d_last: f64 },
    #[error("chain never mixes within the profile horizon")]
    NeverMixes,
    #[error("distribution is not absolutely continuous at state {0}")]
    NotAbsolutelyContinuous(usize),
    #[error("chain {0} has absolute spectral gap 0 (lambda = 1)")]
    DegenerateGap(usize),
    #[error("chain {chain}: {source}")]
    InChain {
        chain: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("chain pool is empty")]
    EmptyPool,
    #[error("chain {0} has no emission table")]
    MissingEmissionTable(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid combination weights: {0}")]
    InvalidWeights(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("kernel {0} is unbounded without a domain bound")]
    UnboundedKernel(usize),
    #[error("no registered pseudo-dimension bound for this kernel family")]
    UnknownFamily,
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("margin must lie in (0, 1], got {0}")]
    InvalidMargin(f64),
    #[error("missing input: {0}")]
    MissingInput(&'static str),
    #[error("invalid conjugate exponents: {0}")]
    InvalidConjugates(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_chain(chain: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::InChain {
            chain,
            source: Box::new(source),
        }
    }

    /// Strips `InChain` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InChain { source, .. } => source.root(),
            e => e,
        }
    }
}

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Graph validation failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex `{0}` is declared twice")]
    DuplicateVertex(String),
    #[error("special vertex `{0}` is not among the declared vertices")]
    MissingX0(String),
    #[error("edge refers to undeclared vertex `{0}`")]
    UnknownVertex(String),
    #[error("self-loop at vertex `{0}`")]
    SelfLoop(String),
    #[error("edge {0}-{1} is declared twice")]
    DuplicateEdge(String, String),
    #[error("edge {u}-{v} has weight {weight}; weights must be finite and positive")]
    NonPositiveWeight { u: String, v: String, weight: f64 },
    #[error("graph is disconnected: vertex `{0}` is unreachable from `{1}`")]
    Disconnected(String, String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vector has {found} entries but the graph has {expected} vertices")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vertex index {0} is out of range")]
    UnknownVertex(usize),
    #[error("field value at x0 must be 0, got {0}")]
    NonzeroAtX0(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("entry {vertex} of {name} must be positive and finite, got {value}")]
    NonPositiveEntry { name: &'static str, vertex: usize, value: f64 },
    #[error("time {t} is outside the path range [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },
    #[error("time {t} is past the depletion time {depletion}")]
    PastDepletion { t: f64, depletion: f64 },
    #[error("amplitude at vertex {0} vanished although the process is not there")]
    ZeroAmplitude(usize),
    #[error("exhaustive enumeration supports at most {max} free vertices, got {found}")]
    TooManyVertices { max: usize, found: usize },
    #[error("coupling on edge {edge} is {value}; couplings must be finite and nonnegative")]
    NegativeCoupling { edge: usize, value: f64 },
    #[error("spin at vertex {vertex} is {value}; spins are ±1 with +1 at x0")]
    BadSpin { vertex: usize, value: i8 },
    #[error("this stopping rule needs a start vertex different from x0")]
    StartAtX0,
    #[error("magnetization at the current vertex {vertex} underflowed before depletion")]
    MagnetizationUnderflow { vertex: usize },
    #[error("hazard integration failed to meet tolerance: {0}")]
    Integration(&'static str),
    #[error("simulation exceeded the jump budget of {0}")]
    JumpLimit(usize),
}

impl Error {
    /// Numerical failures are counted by experiments instead of aborting them.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::MagnetizationUnderflow { .. } | Error::Integration(_) | Error::JumpLimit(_)
        )
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("ball of radius {r} self-overlaps on a torus of side {n} with reach {rho} (need n > 2*rho*r)")]
    SelfOverlap { n: usize, rho: usize, r: usize },

    #[error("invalid ring: inner radius {r_in} must be below outer radius {r_out}")]
    InvalidRing { r_in: usize, r_out: usize },

    #[error("enumeration of 2^{size} states exceeds the cap of 2^{cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("invalid potentials: {0}")]
    InvalidParams(String),

    #[error("patch supports overlap at vertex {0}")]
    OverlappingSupports(usize),

    #[error("boundary assignment incomplete: expected {expected} vertices of the ball boundary, got {got}")]
    IncompleteBoundary { expected: usize, got: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("event is not monotone: {0}")]
    NonMonotone(String),

    #[error("scope of {size} vertices too large for an exhaustive scan (max {max})")]
    ScopeTooLarge { size: usize, max: usize },

    #[error("invalid chain settings: {0}")]
    InvalidSettings(String),

    #[error("clamp conflict: {0}")]
    ClampConflict(String),

    #[error("empty configuration family: {0}")]
    EmptyFamily(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("unschedulable: {0}")]
    Unschedulable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ring colatitudes must be strictly increasing (ring {index})")]
    NonMonotoneTheta { index: usize },
    #[error("ring {index} at theta={theta} has no mirror ring across the equator")]
    AsymmetricGrid { index: usize, theta: f64 },
    #[error("ring {index} at theta={theta} touches a pole (sin theta <= 0)")]
    PolarRing { index: usize, theta: f64 },
    #[error("grid has no rings")]
    EmptyGrid,
    #[error("ring {index} has zero samples")]
    EmptyRing { index: usize },
    #[error("beta undefined for l={l}, m={m} (requires l > m)")]
    DegenerateIndex { l: usize, m: usize },
    #[error("rescale index {scale_k} exceeds the rescale table")]
    ScaleOverflow { scale_k: i32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("ring synthesis produced an imaginary residue {residue:e} (bound {bound:e})")]
    NonRealOutput { residue: f64, bound: f64 },
    #[error("{n_procs} processes cannot be placed on mmax={mmax} and {n_rings} rings")]
    TooManyProcs { n_procs: usize, mmax: usize, n_rings: usize },
    #[error("distributed delta is in the wrong phase: expected {expected}")]
    PhaseError { expected: &'static str },
    #[error("lmax={lmax} exceeds the oracle limit {limit}")]
    TooLarge { lmax: usize, limit: usize },
    #[error("closed form available only for l <= 4 (got l={l})")]
    UnsupportedDegree { l: usize },
    #[error("invalid coefficient index l={l}, m={m}")]
    InvalidIndex { l: usize, m: usize },
    #[error("real field requires Im(a_l0) = 0 (l={l})")]
    ComplexZonal { l: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

impl Error {
    /// Name of the module an error originates from.
    pub fn module(&self) -> &'static str {
        match self {
            Error::NonMonotoneTheta { .. }
            | Error::AsymmetricGrid { .. }
            | Error::PolarRing { .. }
            | Error::EmptyGrid
            | Error::EmptyRing { .. } => "grid",
            Error::DegenerateIndex { .. } | Error::ScaleOverflow { .. } => "legendre",
            Error::InvalidIndex { .. } | Error::ComplexZonal { .. } | Error::InvalidParams(_) => "synthesis",
            Error::DimensionMismatch(_) | Error::NonRealOutput { .. } => "ringfft",
            Error::TooManyProcs { .. } | Error::PhaseError { .. } => "layout",
            Error::TooLarge { .. } | Error::UnsupportedDegree { .. } => "oracle",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

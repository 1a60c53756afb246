use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input in `{0}`")]
    NonFinite(&'static str),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("null field")]
    NullField,

    #[error("no real normalization constant: {0}")]
    NoNormalization(String),

    #[error("lattice spacing violates a >> l0 (a = {a}, l0 = {l0})")]
    LatticeSpacing { a: f64, l0: f64 },

    #[error("spectral support leaves the Brillouin zone: {0}")]
    BrillouinZone(String),

    #[error("density too concentrated for n particles")]
    DensityTooConcentrated,

    #[error("degenerate matching")]
    DegenerateMatching,

    #[error("beam misses slit")]
    BeamMissesSlit,

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("point {0} is not on the path grid")]
    OffGrid(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("impact parameter {0} outside transmitted support")]
    OutsideSupport(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("hermiticity violated: imaginary part {0:e}")]
    NotHermitian(f64),

    #[error("too few bins after merging: {0}")]
    TooFewBins(usize),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice {width}x{depth}: need width >= 2 and depth >= 1")]
    InvalidLattice { width: usize, depth: usize },

    #[error("cell ({x}, {t}) lies outside the {width}x{depth} lattice")]
    CellOutOfRange {
        x: usize,
        t: usize,
        width: usize,
        depth: usize,
    },

    #[error("regions live on different lattices")]
    LatticeMismatch,

    #[error("slot `{0}` appears more than once")]
    SlotCollision(String),

    #[error("unknown slot `{0}`")]
    UnknownSlot(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("time window [{from}, {to}) invalid for depth {depth}")]
    BadWindow { from: usize, to: usize, depth: usize },

    #[error("layout collision: {0}")]
    LayoutCollision(String),

    #[error("operator is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator is not an effect: {0}")]
    NotAnEffect(String),

    #[error("invalid probe `{probe}`: {reason}")]
    InvalidProbe { probe: String, reason: String },

    #[error("no separating slice exists on this lattice; enlarge the depth")]
    NoSliceFound,

    #[error("success probability {probability:e} is below the post-selection threshold")]
    ZeroProbability { probability: f64 },

    #[error("observers are not causally orderable in the given sequence: {0}")]
    NotOrderable(String),

    #[error("geometric hypotheses violated: {}", .0.join("; "))]
    GeometryViolation(Vec<String>),

    #[error("observable is not localisable in its declared region (commutator {deviation:e})")]
    LocalizationViolation { deviation: f64 },

    #[error("no signalling witness found within {budget} candidates (best delta {best_delta:e})")]
    NoWitnessFound { budget: usize, best_delta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

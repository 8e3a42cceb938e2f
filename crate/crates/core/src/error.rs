use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state: vector has zero norm")]
    DegenerateState,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frame is not orthonormal: Gram deviation {deviation:.3e} exceeds {tolerance:.1e}")]
    NonOrthonormalFrame { deviation: f64, tolerance: f64 },

    #[error("frame vector {index} is not horizontal at the base state (overlap {overlap:.3e})")]
    NonHorizontalFrame { index: usize, overlap: f64 },

    #[error("invalid ensemble spec: {0}")]
    InvalidEnsemble(String),

    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary: max |U^dagger U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("too few levels: {0}")]
    TooFewLevels(String),

    #[error("under-resolved Gaussian: {0}")]
    UnderResolved(String),

    #[error("momentum aliasing: |p| h / hbar = {ratio:.3} must be below pi/4")]
    Aliasing { ratio: f64 },

    #[error("closed form overlap requires zero momentum")]
    NonzeroMomentum,

    #[error("grid mismatch between manifold points")]
    GridMismatch,

    #[error("angle {0} must lie strictly inside (0, pi/2)")]
    AngleOutOfRange(f64),

    #[error("displacement {eps} outside the small-displacement regime for sigma = {sigma}")]
    DisplacementTooLarge { eps: f64, sigma: f64 },

    #[error("stepper accuracy bound violated: v*dt/hbar = {ratio:.4} exceeds {bound}")]
    StepperBound { ratio: f64, bound: f64 },

    #[error("overlapping capture regions: targets {i} and {j} are {distance:.4} apart, need > {needed:.4}")]
    OverlappingTargets { i: usize, j: usize, distance: f64, needed: f64 },

    #[error("domain exit: packet support [{lo:.3}, {hi:.3}] leaves the grid [{grid_lo:.3}, {grid_hi:.3}]")]
    DomainExit { lo: f64, hi: f64, grid_lo: f64, grid_hi: f64 },

    #[error("time stride too coarse: {0}")]
    StrideTooCoarse(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("targets not equidistant from the initial state: spread {spread:.3e}")]
    NotEquidistant { spread: f64 },

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

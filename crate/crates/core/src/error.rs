use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice needs an even point count of at least 2, got {0}")]
    InvalidLatticeSize(usize),
    #[error("lattice half-width must be finite and positive, got {0}")]
    InvalidLatticeExtent(f64),
    #[error("array of length {got} does not match lattice size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("moment function is non-finite on sample {index}")]
    NonFiniteMoment { index: usize },
    #[error("sample has {got} modes, ensemble has {expected}")]
    ModeCountMismatch { expected: usize, got: usize },
    #[error("sample violates beta = conj(alpha) required for s = {s}")]
    ConjugacyViolation { s: f64 },
    #[error("ordering parameter s = {0} is not supported here")]
    UnsupportedOrdering(f64),

    #[error("covariance matrix is not symmetric, max |sigma - sigma^T| = {0:.3e}")]
    AsymmetricCovariance(f64),
    #[error("covariance lacks the conjugate block structure required for s > 0 (residual {0:.3e})")]
    CovarianceStructure(f64),
    #[error("no admissible noise factor found, residual |B B^T - sigma| = {0:.3e}")]
    FactorizationResidual(f64),
    #[error("covariance is not positive semi-definite, eigenvalue {0:.3e}")]
    IndefiniteCovariance(f64),
    #[error("noise factor is {got}x{got}, covariance spec is {expected}x{expected}")]
    FactorDimensionMismatch { expected: usize, got: usize },

    #[error("von Mises concentration must be finite and non-negative, got {0}")]
    InvalidConcentration(f64),
    #[error("contour radius must be finite and positive for occupied modes, got {0}")]
    InvalidRadius(f64),
    #[error("Laguerre recurrence is only certified up to n = {max}, requested n = {n}")]
    LaguerreOrder { n: usize, max: usize },
    #[error("non-finite log-weight term for n = {n}, r = {r}")]
    NonFiniteWeight { n: u64, r: f64 },

    #[error("convolution target ordering must have s > 0, got {0}")]
    InvalidTargetOrdering(f64),
    #[error("convolution input must come from a doubled (positive/complex P) ensemble")]
    NotDoubled,
    #[error("kernel bandwidth must be finite and positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("linear symbol is non-finite at k = {k}")]
    NonFiniteSymbol { k: f64 },
    #[error("field became non-finite at t = {t:.6} (step {step}, max |psi| = {max_abs:.3e})")]
    Unstable { t: f64, step: usize, max_abs: f64 },
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),

    #[error("apodiser order must be even and at least 4, got {0}")]
    InvalidAbsorberOrder(usize),
    #[error("boundary absorption must be finite and non-negative, got {0}")]
    NegativeAbsorption(f64),
    #[error("absorption record does not match the lattice (expected {expected} points, got {got})")]
    NoiseShapeMismatch { expected: usize, got: usize },
    #[error("apodisation profile contains non-finite values")]
    NonFiniteProfile,
}

pub type Result<T> = std::result::Result<T, Error>;

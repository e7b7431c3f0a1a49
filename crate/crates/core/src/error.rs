use thiserror::Error;

/// Every failure the workbench can report.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("zero leading coefficient: {0}")]
    ZeroLeadingCoefficient(String),
    #[error("incompatible series: {0}")]
    Incompatible(String),
    #[error("empty sample grid")]
    EmptyGrid,
    #[error("point {zeta} lies within the guard distance of the singularity {sing}")]
    NearSingularity { zeta: String, sing: String },
    #[error("continuation diverged: {0}")]
    ContinuationDiverged(String),
    #[error("growth too fast for exponential size one: {0}")]
    GrowthTooFast(String),
    #[error("Laplace integral diverges: {0}")]
    DivergentLaplace(String),
    #[error("integration ray meets a singularity: {0}")]
    SingularRay(String),
    #[error("degenerate lattice: {0}")]
    DegenerateLattice(String),
    #[error("exponential sum is not decaying on the arc: {0}")]
    NotDecaying(String),
    #[error("endomorphism does not lower the filtration: {0}")]
    NotLowering(String),
    #[error("not a valid 1-form: {0}")]
    NotOneForm(String),
    #[error("support property fails: {0}")]
    SupportPropertyFailure(String),
    #[error("path passes through a pole: {0}")]
    PathThroughPole(String),
    #[error("flow line approached another zero: {0}")]
    SaddleEncounter(String),
    #[error("flow line not captured by any pole: {0}")]
    NoCapture(String),
    #[error("integrand tail does not decay: {0}")]
    TailNotDecaying(String),
    #[error("Stokes factor fit residual too large: {0}")]
    FitResidualTooLarge(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),
    #[error("{name} out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("horizontal vectors are based at different points")]
    BaseMismatch,
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("geodesic endpoint equals the identity")]
    IdentityEndpoint,
    #[error("root finder did not converge: bracket [{lo}, {hi}] after {iterations} iterations")]
    RootNotConverged { lo: f64, hi: f64, iterations: usize },
    #[error("geodesic round trip missed the endpoint by {error}")]
    RoundTrip { error: f64 },
    #[error("center point needs a reference direction to fix the geodesic")]
    MissingDirection,
    #[error("direction grid does not positively span its space")]
    NotSpanning,
    #[error("direction {index} is not a unit vector (norm {norm})")]
    NotUnit { index: usize, norm: f64 },
    #[error("support values must be positive (min {0})")]
    NonPositiveSupport(f64),
    #[error("body has no points")]
    EmptyBody,
    #[error("degenerate bounding box")]
    DegenerateBox,
    #[error("sample count {got} below the minimum {min}")]
    TooFewSamples { got: usize, min: usize },
    #[error("no constraint is active at the boundary sample (margin {margin})")]
    NoActiveConstraint { margin: f64 },
    #[error("measure has no positive mass")]
    ZeroMass,
    #[error("centroid violation: |centroid| = {norm:.3e} exceeds {limit:.3e}")]
    CentroidViolation { norm: f64, limit: f64 },
    #[error("hemisphere concentration: measure lies in a closed hemisphere (margin {margin:.3e})")]
    HemisphereConcentration { margin: f64 },
    #[error("infeasible input: {0}")]
    InfeasibleInput(Box<Error>),
    #[error("solver did not converge after {iterations} sweeps")]
    NonConvergence { iterations: usize, trace: Vec<f64> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

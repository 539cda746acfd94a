use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {value} out of range {min}..={max} for {what}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("spectrum sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("{what} must be strictly positive (found {value})")]
    NonPositive { what: &'static str, value: f64 },

    #[error("polynomial of degree 0 has no derivative")]
    ConstantPolynomial,

    #[error("bracket {index} invalid: polynomial sign at {at} is inconsistent with one root per interval")]
    InvalidBracket { index: usize, at: f64 },

    #[error("{0} values must be finite")]
    NonFinite(&'static str),

    #[error("top-row entries {i} and {j} coincide or are out of order ({value}); the β-corners process needs y_1 < ... < y_N")]
    CoincidentTop { i: usize, j: usize, value: f64 },

    #[error("interlacing violated at level {level}, index {index}")]
    Interlacing { level: usize, index: usize },

    #[error("density is infinite at coincident points for β = {beta} < 2")]
    SingularDensity { beta: f64 },

    #[error("permutation oracle limited to N <= {max} (got {n})")]
    TooLarge { n: usize, max: usize },

    #[error("quadrature failed to converge (last change {change:e}, tolerance {tol:e})")]
    Quadrature { change: f64, tol: f64 },

    #[error("matrix is not self-adjoint (asymmetry {0:e})")]
    NotSelfAdjoint(f64),

    #[error("precision matrix is not positive definite (pivot {pivot:e} at {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("lattice points coincide at level {level}; field requires distinct points")]
    DegenerateLattice { level: usize },

    #[error("resonant Jack parameter: pivot {0:e}")]
    Resonance(f64),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid sampler configuration: {0}")]
    Config(String),
}

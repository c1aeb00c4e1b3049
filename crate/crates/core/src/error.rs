use thiserror::Error;

/// Errors raised by the solver modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point at distance {distance:.3e} lies outside the tubular neighborhood of radius {radius:.3e}")]
    OutsideTubularNeighborhood { distance: f64, radius: f64 },

    #[error("vector is not tangent: projector residual {residual:.3e}")]
    NonTangentInput { residual: f64 },

    #[error("chart metric is singular or ill-conditioned (condition number {condition:.3e})")]
    SingularMetric { condition: f64 },

    #[error("ball of radius {radius} around {center:?} leaves the domain")]
    BallExceedsDomain { center: [f64; 3], radius: f64 },

    #[error("projection failed at {side} node {node}: {source}")]
    ProjectionFailure {
        side: &'static str,
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line search exhausted after {halvings} halvings at iteration {iteration}")]
    StepFailure { iteration: usize, halvings: usize },

    #[error("boundary oscillation {measured:.3e} exceeds the admissible threshold {threshold:.3e}")]
    OscillationTooLarge { measured: f64, threshold: f64 },

    #[error("linear solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    LinearSolveFailure { iterations: usize, residual: f64 },

    #[error("iterate left the unit coordinate ball (|U| = {norm:.3e}) at sweep {sweep}")]
    ChartExit { sweep: usize, norm: f64 },

    #[error("Picard map is not contractive: measured ratio {ratio:.3e}")]
    NoContraction { ratio: f64 },

    #[error("coupling matrix is numerically singular (smallest singular value {sigma_min:.3e})")]
    SingularCoupling { sigma_min: f64 },

    #[error("scale {radius} is below four grid spacings ({min})")]
    ScaleBelowGrid { radius: f64, min: f64 },

    #[error("trajectory does not cover time {needed} (earliest frame {earliest})")]
    InsufficientHistory { needed: f64, earliest: f64 },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable kebab-case name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutsideTubularNeighborhood { .. } => "outside-tubular-neighborhood",
            Error::NonTangentInput { .. } => "non-tangent-input",
            Error::SingularMetric { .. } => "singular-metric",
            Error::BallExceedsDomain { .. } => "ball-exceeds-domain",
            Error::ProjectionFailure { .. } => "projection-failure",
            Error::StepFailure { .. } => "step-failure",
            Error::OscillationTooLarge { .. } => "oscillation-too-large",
            Error::LinearSolveFailure { .. } => "linear-solve-failure",
            Error::ChartExit { .. } => "chart-exit",
            Error::NoContraction { .. } => "no-contraction",
            Error::SingularCoupling { .. } => "singular-coupling",
            Error::ScaleBelowGrid { .. } => "scale-below-grid",
            Error::InsufficientHistory { .. } => "insufficient-history",
            Error::Config { .. } => "config",
            Error::InvalidInput(_) => "invalid-input",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

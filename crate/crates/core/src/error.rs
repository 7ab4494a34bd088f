use std::fmt;

use thiserror::Error;

/// Pipeline stage attached to errors raised inside a transformation or filter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    SigmaPoints,
    Propagation,
    Mean,
    Covariance,
    ProcessNoise,
    MeasurementNoise,
    StatePrediction,
    MeasurementPrediction,
    Gain,
    Correction,
    Transport,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::SigmaPoints => "sigma points",
            Stage::Propagation => "propagation",
            Stage::Mean => "sample mean",
            Stage::Covariance => "sample covariance",
            Stage::ProcessNoise => "process noise",
            Stage::MeasurementNoise => "measurement noise",
            Stage::StatePrediction => "state prediction",
            Stage::MeasurementPrediction => "measurement prediction",
            Stage::Gain => "gain",
            Stage::Correction => "correction",
            Stage::Transport => "covariance transport",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("manifold mismatch: expected {expected}, found {found}")]
    ManifoldMismatch { expected: String, found: String },

    #[error("tangent vector is not based at the given point")]
    BaseMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("tangent vector of norm {norm} is outside the injective domain (limit {limit})")]
    OutsideInjectiveDomain { norm: f64, limit: f64 },

    #[error("{b:?} lies in the cut locus of {a:?} (gap {gap:e})")]
    CutLocus { a: Vec<f64>, b: Vec<f64>, gap: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Cholesky factorization failed after jitter retry")]
    Factorization,

    #[error("Karcher mean did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },

    #[error("point {index} is at distance {distance} from the initial guess, outside the ball of radius {radius}")]
    OutsideBall { index: usize, distance: f64, radius: f64 },

    #[error("sigma point {index} has tangent norm {norm}, outside the ball of radius {radius}")]
    SigmaOutOfBall { index: usize, norm: f64, radius: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular innovation covariance (condition number {condition:e})")]
    SingularInnovation { condition: f64 },

    #[error("state covariance lost positiveness at step {step} during {stage} (min eigenvalue {min_eigenvalue:e})")]
    PositivenessLoss {
        step: usize,
        stage: Stage,
        min_eigenvalue: f64,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage and step tags peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_positiveness_loss(&self) -> bool {
        matches!(self.root(), Error::PositivenessLoss { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}

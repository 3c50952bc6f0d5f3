use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("unsupported backend `{0}`")]
    UnsupportedBackend(String),

    #[error("normalization failed: {0}")]
    NormalizationFailed(String),

    #[error("grid mismatch: expected {expected} samples, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("positivity lost at node {node} (tau = {tau}): value {value}")]
    PositivityLost { node: usize, tau: f64, value: f64 },

    #[error("degree {degree} out of range {min}..={max}")]
    DegreeOutOfRange { degree: usize, min: usize, max: usize },

    #[error("path leaves the cone at t = {t} (margin {margin})")]
    PathLeavesCone { t: f64, margin: f64 },

    #[error("invalid momentum profile: {0}")]
    InvalidProfile(String),

    #[error("Newton iteration diverged at t = {t} after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged {
        t: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("singular linearization at t = {t}")]
    SingularLinearization { t: f64 },

    #[error("continuation step underflow after t = {last_t}")]
    StepUnderflow {
        last_t: f64,
        /// `(t, I(φ_t))` for every accepted step.
        history: Vec<(f64, f64)>,
    },

    #[error("insufficient path resolution: {0}")]
    InsufficientPathResolution(String),

    #[error("automorphism flow left the cone at t = {t} (margin {margin})")]
    FlowLeftCone { t: f64, margin: f64 },

    #[error("no sign change of the invariant on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

use std::fmt;

use crate::domain::Point;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("ball centered at {center:?} with radius {radius} contains no cell center")]
    EmptyBall { center: Point, radius: f64 },

    #[error("degenerate mask: {0}")]
    DegenerateMask(&'static str),

    #[error("radius {radius} outside admissible range [{min}, {max}]")]
    BadRadius { radius: f64, min: f64, max: f64 },

    #[error("rho_a is only evaluated at ratios >= 1, got r = {0}")]
    DomainError(f64),

    #[error("step {step} too large for Lipschitz constant {lip} (step * lip = {product})")]
    StepTooLarge { step: f64, lip: f64, product: f64 },

    #[error("point {0:?} lies outside the non-periodic window")]
    OutOfDomain(Point),

    #[error("seminorm of the reference function vanishes")]
    ZeroSeminorm,

    #[error("bound violated at {witness:?}: {detail}")]
    ViolatedBound { witness: Point, detail: String },

    #[error("cover radius {radius} exceeds source radius {source_radius}")]
    RadiusViolation { radius: f64, source_radius: f64 },

    #[error("box height {height} exceeds density horizon {horizon}")]
    HeightExceeded { height: f64, horizon: f64 },

    #[error("operation requires a periodic grid")]
    NonPeriodic,

    #[error("need at least {needed} points with strictly increasing x, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("value is not finite at cell {0}")]
    NonFinite(usize),

    #[error(transparent)]
    Spec(#[from] SpecError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse or validation failure in a textual specification, with the
/// offending field name.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub field: String,
    pub message: String,
}

impl SpecError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for SpecError {}

pub type Result<T, E = Error> = std::result::Result<T, E>;

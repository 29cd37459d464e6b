use thiserror::Error;

/// Errors raised by the geometry kernels, samplers and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not a point of the hyperboloid: -<p,q> = {value} < 1")]
    InvalidPoint { value: f64 },

    #[error("points coincide within {tolerance}; geodesic is undefined")]
    CoincidentPoints { tolerance: f64 },

    #[error("isometry drifted off the Lorentz group (relative residual {residual:.3e})")]
    Drift { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hexagon failed to close (residual {residual:.3e})")]
    HexagonClosure { residual: f64 },

    #[error("hexagon center verification failed: {0}")]
    CenterOutside(String),

    #[error("two distinct words collide at the same orbit point: {first} and {second}")]
    OrbitCollision { first: String, second: String },

    #[error("count exceeded the cap of {cap}")]
    CapExceeded { cap: u64 },

    #[error("counts are not monotone in R at R = {radius}")]
    NonMonotone { radius: f64 },

    #[error("fit window too small: {0}")]
    WindowTooSmall(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("frontier ledger mismatch at step {step}: expected {expected}, found {found}")]
    LedgerMismatch {
        step: usize,
        expected: i64,
        found: i64,
    },

    #[error("half-edge pool depleted at step {step}")]
    DepletedPool { step: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("diameter bounds inconsistent: lower {lower} > upper {upper}")]
    BoundsViolated { lower: f64, upper: f64 },

    #[error("developed frames collide for vertex {vertex}")]
    FrameCollision { vertex: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

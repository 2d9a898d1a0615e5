//! Error types shared across the library.

use thiserror::Error;

/// Errors raised while validating model parameters or deriving exponents.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("dimension must lie in 2..=4, got {0}")]
    InvalidDimension(u32),
    #[error("parameter set violates {condition}: {detail}")]
    Inadmissible { condition: String, detail: String },
}

/// Errors raised while building grids, bases or initial data.
#[derive(Debug, Error)]
pub enum SetupError {
    #[error("grid resolution must be an even integer >= 8, got {0}")]
    InvalidResolution(u32),
    #[error("domain extent must be positive and finite, got {0}")]
    InvalidExtent(f64),
    #[error("requested {requested} {kind} modes, but the {n}x{n} grid resolves at most {capacity}")]
    ModeCapacity {
        kind: &'static str,
        requested: usize,
        capacity: usize,
        n: u32,
    },
    #[error("eigenvalue solve for the velocity modes failed: {0}")]
    EigenSolve(String),
    #[error("initial turbulent energy must be >= its floor {floor}, found node value {found}")]
    InitialDataBelowFloor { floor: f64, found: f64 },
    #[error("field length {found} does not match grid ({expected} nodes)")]
    FieldLength { expected: usize, found: usize },
    #[error("{0}")]
    Io(String),
}

/// Errors raised by the time integrator.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("step size underflow at t = {t}: dt = {dt} fell below {floor} (stiffness abort)")]
    StepUnderflow { t: f64, dt: f64, floor: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("{0}")]
    Setup(#[from] SetupError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("run configuration: {0}")]
    Config(String),
}

/// Errors raised while reading or writing artifacts.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure on {path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a field container (bad magic)")]
    BadMagic { path: String },
    #[error("{path}: unsupported container version {version}")]
    BadVersion { path: String, version: u32 },
    #[error("{path}: {detail}")]
    Corrupt { path: String, detail: String },
}

/// Errors raised by the estimate auditor.
#[derive(Debug, Error)]
pub enum AuditError {
    #[error("audit parameter `{name}` must be {requirement}, got {value}")]
    Domain {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("trajectory is missing {0}")]
    MissingSamples(String),
    #[error("audit configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Errors raised while parsing or validating run configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{detail}")]
    Syntax { path: String, detail: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Setup(#[from] SetupError),
}

//! CLI failure classes mapped to disjoint exit codes.

use meltsim_core::error::CoreError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Simulation(String),
    Io(String),
}

pub type Result<T> = std::result::Result<T, AppError>;

impl AppError {
    pub fn config(message: String) -> Self {
        AppError::Config(message)
    }

    pub fn io(message: String) -> Self {
        AppError::Io(message)
    }

    pub fn simulation(message: String) -> Self {
        AppError::Simulation(message)
    }

    /// Core errors raised while interpreting user input are config errors.
    pub fn from_config_err(e: CoreError) -> Self {
        match e {
            CoreError::Io(io) => AppError::Io(io.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }

    /// Core errors raised mid-computation are simulation errors.
    pub fn from_simulation_err(e: CoreError) -> Self {
        match e {
            CoreError::Io(io) => AppError::Io(io.to_string()),
            other => AppError::Simulation(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => EXIT_CONFIG,
            AppError::Simulation(_) => EXIT_SIMULATION,
            AppError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "config error: {m}"),
            AppError::Simulation(m) => write!(f, "simulation error: {m}"),
            AppError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for AppError {}

//! Error types shared by every solver module.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: expected 2 or 3")]
    InvalidDimension(usize),

    #[error("invalid resolution {0}: at least 8 cells per axis are required")]
    InvalidResolution(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("negative coefficient {value:e} at cell {cell}")]
    NegativeCoefficient { cell: usize, value: f64 },

    #[error("smoothing width {width:e} is below the minimum of 1.5 cells ({min:e})")]
    WidthTooSmall { width: f64, min: f64 },

    #[error("negative density {value:e} in `{field}` at cell {cell}")]
    NegativeDensity {
        field: &'static str,
        cell: usize,
        value: f64,
    },

    #[error("nutrient {value:e} at cell {cell} is outside [0, {c_bar:e}]")]
    NutrientOutOfRange { cell: usize, value: f64, c_bar: f64 },

    #[error("time step {dt:e} exceeds the advective stability bound {max_dt:e}")]
    CflViolation { dt: f64, max_dt: f64 },

    #[error("non-finite value in `{field}` at cell {cell}")]
    NonfiniteField { field: &'static str, cell: usize },

    #[error("momentum {momentum:e} in vacuum cell {cell} (density {density:e})")]
    MomentumInVacuum {
        cell: usize,
        momentum: f64,
        density: f64,
    },

    #[error("maximum principle violated at t = {t:e}: C in [{min:e}, {max:e}], bound {bound:e}")]
    MaxPrincipleViolated {
        t: f64,
        min: f64,
        max: f64,
        bound: f64,
    },

    #[error("instability detected at t = {t:e}: {reason}")]
    Instability { t: f64, reason: String },

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Configuration problems, split so the CLI can report them uniformly.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {rule}")]
    Validation { rule: String },
}

impl ConfigError {
    pub fn validation(rule: impl Into<String>) -> Self {
        ConfigError::Validation { rule: rule.into() }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

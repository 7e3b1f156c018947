use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The inputs are well formed but the requested computation is undefined.
    Domain,
    /// Reading, parsing or writing failed.
    Input,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("profile must contain at least one unit")]
    EmptyProfile,
    #[error("effect {value} at unit {index} is outside [0, 1]")]
    EffectOutOfRange { index: usize, value: f64 },
    #[error("budget {budget} is outside [1, {units}]")]
    BudgetOutOfRange { budget: usize, units: usize },
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("estimate profile has {estimates} units but the effect profile has {effects}")]
    LengthMismatch { estimates: usize, effects: usize },
    #[error("threshold effect is zero, so the relative accuracy target is unattainable")]
    ZeroThreshold,
    #[error("bound is undefined: {0}")]
    DegenerateBound(&'static str),
    #[error(
        "overspend formula does not apply: threshold {threshold} is not above 2*rho = {two_rho}"
    )]
    OverspendInapplicable { threshold: f64, two_rho: f64 },
    #[error("degenerate normalization: all {units} unit effects equal {value}")]
    DegenerateNormalization { units: usize, value: f64 },
    #[error("no unit survived filtering ({dropped} dropped)")]
    NoSurvivingUnits { dropped: usize },
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Format { .. }
            | Error::Config(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => ErrorClass::Input,
            _ => ErrorClass::Domain,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit_interval_open(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} is not in (0, 1)")))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("{value} is not a positive finite number"),
        ))
    }
}

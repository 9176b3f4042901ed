use std::path::PathBuf;

use thiserror::Error;

use crate::carbon_climate::{CarbonCycleParams, ClimateParams};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed input row. `row` is the 1-based line number in the file
    /// (the header is line 1).
    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-contiguous years: {previous} followed by {next}")]
    NonContiguousYears { previous: i32, next: i32 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("year series are misaligned: {0}")]
    Misaligned(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error(
        "calibration did not converge after {iterations} sweeps; \
         best ecs={:.4}, lag={:.3}, max residual {max_residual:.4} °C",
        best.1.ecs, best.1.lag_years
    )]
    NonConvergence {
        iterations: usize,
        best: Box<(CarbonCycleParams, ClimateParams)>,
        residuals: Vec<f64>,
        max_residual: f64,
    },

    #[error("temperature ceiling {ceiling:.2} °C is infeasible; minimum achievable peak is {min_peak:.3} °C")]
    Infeasible { ceiling: f64, min_peak: f64 },

    #[error("unknown bundled dataset `{0}`")]
    UnknownBundle(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

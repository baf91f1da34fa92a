use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Error, Debug)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge for mode {mode}: residual {residual:.3e}")]
    NonConvergence { mode: usize, residual: f64 },

    #[error("rates are near-degenerate (min gap {gap:.3e}); use density_from_cf instead")]
    NearDegenerateRates { gap: f64 },

    #[error("characteristic function not negligible at s_max = {s_max}: |phi| = {modulus:.3e}; increase s_max")]
    CfTruncation { s_max: f64, modulus: f64 },

    #[error("Fourier inversion clipped {clipped:.3e} of negative mass (budget 1e-3)")]
    ClippedMass { clipped: f64 },

    #[error("grid under-resolves a feature: {0}")]
    UnderResolved(String),

    #[error("effective sample size {ess:.1} below {threshold:.1} (heavy-tailed weights)")]
    HeavyTail { ess: f64, threshold: f64 },

    #[error("single sample carries {fraction:.3} of the total weight")]
    WeightConcentration { fraction: f64 },

    #[error("MCMC acceptance rate {acceptance:.3} outside [0.1, 0.9]")]
    Tuning { acceptance: f64 },

    #[error("state is rank deficient on the support of its argument")]
    RankDeficient,

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("malformed file {path:?}: {reason}")]
    Format { path: Option<PathBuf>, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{suite} at {point}: {source}")]
    SweepPoint { suite: String, point: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Tag an error with the suite and sweep point that produced it.
    pub fn at(self, suite: impl Into<String>, point: impl Into<String>) -> Self {
        Error::SweepPoint { suite: suite.into(), point: point.into(), source: Box::new(self) }
    }
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

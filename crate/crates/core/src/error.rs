use std::path::PathBuf;

use thiserror::Error;

use crate::topology::SatelliteId;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cloud data center needs at least one covering satellite")]
    EmptyCloudCoverage,

    #[error("satellite {0} does not exist in this network")]
    UnknownSatellite(SatelliteId),

    #[error("ground point ({x}, {y}) lies outside the modeled area")]
    OutsideArea { x: f64, y: f64 },

    #[error("request {request} has no {side} neighbouring satellite; it runs locally")]
    NoCoverage { request: u64, side: &'static str },

    #[error("no cloud data center is attached to the network")]
    NoCloud,

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("strategy for request {0} is infeasible on the current state")]
    Infeasible(u64),

    #[error("strategy for request {0} is not committed")]
    NotCommitted(u64),

    #[error("strategy for request {0} is already committed")]
    AlreadyCommitted(u64),

    #[error("instance exceeds the brute-force tractability guard: {0}")]
    Intractable(String),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON output failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }
}

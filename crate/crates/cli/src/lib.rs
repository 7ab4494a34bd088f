//! Experiment harness for the Riemannian unscented Kalman filters: a satellite
//! attitude tracking benchmark and a scalar example on which the noise-free
//! baseline filter breaks down.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod quaternion;
pub mod satellite;
pub mod scalar;

pub use config::{OmegaProfile, SatelliteConfig, Variant};
pub use satellite::{gen_truth, run_satellite, SatelliteReport};
pub use scalar::{run_scalar, ScalarReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Filter(#[from] riukf_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

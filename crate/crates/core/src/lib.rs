//! Simulation of VNF service-chain placement on a LEO satellite
//! constellation with a ground cloud data center as fallback.
//!
//! The crate builds the constellation and coverage model, generates
//! service-chain workloads, and places them with a distributed
//! beam-search procedure (`Algorithm::Dvnfp`) or one of two centralized
//! baselines. Results are reported as mean ISL bandwidth, mean end-to-end
//! delay and the fraction of requests served off-device.

pub mod algorithms;
pub mod config;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod pathing;
pub mod requests;
pub mod runner;
pub mod scenario;
pub mod state;
pub mod topology;
pub mod units;

pub use algorithms::{Algorithm, SolverParams};
pub use error::{Error, Result};
pub use scenario::Scenario;
pub use state::{NetworkState, PlacementStrategy};
pub use units::Fixed;

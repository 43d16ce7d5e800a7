//! The M(t)/G(t)/∞ queue: piecewise-constant NHPP arrivals, mixture service
//! times, the expected-occupancy integral and a seeded simulator that serves
//! as ground truth for the rest of the crate.

mod cdf;
mod mixture;
mod nhpp;
mod occupancy;
mod rate;
mod sim;

pub use cdf::{EmpiricalCdf, Knot};
pub use mixture::{ServiceMixture, ShareSource, ShareTable};
pub use nhpp::{sample_nhpp, sample_nhpp_thinning};
pub use occupancy::{expected_occupancy, survival_weighted_arrivals};
pub use rate::{PopulationRates, RateFunction};
pub use sim::{simulate_lot, spot_name, SimConfig, SimulatedLot, SimulatedVehicle};

use thiserror::Error;

/// Seconds per hour; rates are per hour, times are in seconds.
pub const HOUR: f64 = 3600.0;

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("invalid rate function: {0}")]
    InvalidRate(String),
    #[error("invalid service distribution: {0}")]
    InvalidCdf(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("rates are not defined back to t={t}")]
    UndefinedHistory { t: f64 },
}

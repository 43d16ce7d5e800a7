//! Parking-lot occupancy as an M(t)/G(t)/∞ queue.
//!
//! The crate covers the whole pipeline for a single lot:
//!
//! * [`eventlog`]: CSV ingestion of arrival/departure sensor events, repair of
//!   missing events, spot filtering, stays and occupancy traces.
//! * [`queue`]: NHPP arrivals, the four-population service mixture, the
//!   expected-occupancy integral and a seeded simulator.
//! * [`verify`]: the assumption battery (capacity check, service-time
//!   independence, Poisson-arrival KS tests, P-P/Q-Q data).
//! * [`seasonal`]: population decomposition, ACF/PACF, weekday×hour fixed
//!   effects and the SARIMA(1,0,0)×(0,1,1)₂₄ residual model.
//! * [`forecast`]: microscopic and macroscopic probabilistic forecasts, the
//!   intrinsic-variance lower bound, the M/M/C baseline and backtesting.
//! * [`scenario`]: synthetic lots with seasonal, randomly perturbed demand.
//! * [`cli`]: the batch commands behind the `parkq` binary.

pub mod cli;
pub mod eventlog;
pub mod forecast;
pub mod queue;
pub mod scenario;
pub mod seasonal;
pub mod stats;
pub mod verify;

pub use queue::HOUR;

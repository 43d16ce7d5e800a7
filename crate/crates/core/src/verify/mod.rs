//! Assumption checks for the infinite-server model: no censoring (capacity
//! is never reached), service times independent of each other, and
//! Poisson arrivals within one-hour windows.

mod arrivals;
mod battery;
mod capacity;
mod independence;
mod plots;

pub use arrivals::{
    group_by_window, ks_cu, ks_lewis, ks_log, ks_standard, ks_standard_windows, lewis_transform, log_transform,
    normalized_interarrivals, ArrivalWindow, NormalizedInterarrivals,
};
pub use battery::{run_battery, BatteryConfig, BatteryReport};
pub use capacity::{max_occupancy_check, MaxOccupancy};
pub use independence::{
    chi_square_independence, pearson_independence, service_pairs_by_window, PearsonResult,
};
pub use plots::{
    conditional_interarrival_histogram, pp_qq_data, total_variation, ConditionalHistogram, PpQq,
    Reference,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("window {window} has {n} arrivals; at least one is required")]
    WindowTooSmall { window: usize, n: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    EventLog(#[from] crate::eventlog::EventLogError),
}

/// Outcome of one test. `p_value` belongs to the pooled test over all
/// usable windows; `window_p_values` holds the same test run on each window
/// separately and `mean_window_p` their average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
    pub p_value: f64,
    pub windows_used: usize,
    pub windows_skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_window_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub window_p_values: Vec<f64>,
}

impl TestResult {
    pub(crate) fn single(statistic: f64, n: usize, p_value: f64) -> Self {
        TestResult {
            statistic,
            n,
            dof: None,
            p_value,
            windows_used: 1,
            windows_skipped: 0,
            mean_window_p: None,
            window_p_values: Vec::new(),
        }
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

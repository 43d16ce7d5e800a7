use serde::{Deserialize, Serialize};

use super::{
    chi_square_independence, group_by_window, ks_cu, ks_lewis, ks_log, ks_standard_windows,
    max_occupancy_check, normalized_interarrivals, service_pairs_by_window, MaxOccupancy,
    TestResult, VerifyError,
};
use crate::eventlog::{stays_from_log, EventLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    /// Window length in seconds.
    pub window: f64,
    pub bins: usize,
    /// Number of spots; defaults to the spot count of the log.
    pub capacity: Option<usize>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            window: 3600.0,
            bins: 5,
            capacity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub stays: usize,
    pub windows: usize,
    pub max_occupancy: MaxOccupancy,
    pub chi_square: Option<TestResult>,
    pub ks_standard: TestResult,
    pub ks_cu: TestResult,
    pub ks_log: TestResult,
    pub ks_lewis: TestResult,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BatteryReport {
    pub fn tests(&self) -> Vec<(&'static str, &TestResult)> {
        let mut v = vec![
            ("ks_standard", &self.ks_standard),
            ("ks_cu", &self.ks_cu),
            ("ks_log", &self.ks_log),
            ("ks_lewis", &self.ks_lewis),
        ];
        if let Some(c) = &self.chi_square {
            v.insert(0, ("chi_square", c));
        }
        v
    }
}

/// Runs the capacity check, the service-time independence test and the four
/// Poisson-arrival KS tests on a repaired log of one location.
pub fn run_battery(log: &EventLog, cfg: &BatteryConfig) -> Result<BatteryReport, VerifyError> {
    let stays = stays_from_log(log)?;
    if stays.len() < 2 {
        return Err(VerifyError::InsufficientData(format!(
            "{} stays; at least two are required",
            stays.len()
        )));
    }
    let origin = (log.span().map_or(stays[0].arrival_time, |s| s.start) / cfg.window).floor()
        * cfg.window;
    let capacity = cfg.capacity.unwrap_or_else(|| log.spot_count()).max(1);
    let max_occupancy = max_occupancy_check(log, capacity)?;

    let mut notes = Vec::new();
    let chi_square = match chi_square_independence(
        &service_pairs_by_window(&stays, origin, cfg.window),
        cfg.bins,
    ) {
        Ok(r) => Some(r),
        Err(VerifyError::InsufficientData(msg)) => {
            notes.push(format!("chi_square skipped: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };

    let arrivals: Vec<f64> = stays.iter().map(|s| s.arrival_time).collect();
    let windows = group_by_window(&arrivals, origin, cfg.window);
    let normalized = normalized_interarrivals(&arrivals, origin, cfg.window);
    if normalized.is_empty() {
        return Err(VerifyError::InsufficientData(
            "no window holds two arrivals".into(),
        ));
    }
    Ok(BatteryReport {
        stays: stays.len(),
        windows: windows.len(),
        max_occupancy,
        chi_square,
        ks_standard: ks_standard_windows(&normalized),
        ks_cu: ks_cu(&windows),
        ks_log: ks_log(&windows)?,
        ks_lewis: ks_lewis(&windows)?,
        notes,
    })
}

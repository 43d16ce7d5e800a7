//! Probabilistic occupancy forecasts.
//!
//! The microscopic forecast conditions on the arrival times of the vehicles
//! parked at the forecast origin; the macroscopic forecast models the hourly
//! occupancy series directly; the M/M/C baseline relaxes the current
//! occupancy toward a per-cell equilibrium.

mod backtest;
mod eval;
mod macroscopic;
mod micro;
mod mmc;
mod sigma;

pub use backtest::{
    calibrate_sigma, fit_models, occupancy_snapshots, population_history, run_backtest, BacktestConfig,
    BacktestRecord, FittedModels, Method, Truth,
};
pub use eval::{evaluate, evaluate_pairs, HorizonSummary};
pub use macroscopic::macro_forecast;
pub use micro::{
    expected_new, expected_remaining, micro_forecast, perfect_arrival_micro_forecast,
    survival_prob, var_lower_bound, LotState, MicroInputs, Remaining, SurvivalProb,
};
pub use mmc::{mmc_fit, mmc_forecast, MmcCell, MmcParams};
pub use sigma::{estimate_sigma_pred, SigmaPredTable, DEFAULT_HORIZONS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::queue::QueueError;
use crate::seasonal::SeasonalError;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("horizon {horizon}s has {n} backtest points; at least {min} are required")]
    InsufficientBacktest { horizon: f64, n: usize, min: usize },
    #[error("{forecasts} forecasts but {actuals} actual values")]
    LengthMismatch { forecasts: usize, actuals: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Seasonal(#[from] SeasonalError),
}

/// E[N_o], E[N_n], Var_o, Var_n.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForecastParts {
    pub mean_remaining: f64,
    pub mean_new: f64,
    pub var_remaining: f64,
    pub var_new: f64,
}

/// Gaussian occupancy forecast at horizon `horizon` (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastDistribution {
    pub horizon: f64,
    pub mean: f64,
    pub var_lb: f64,
    pub sigma_pred_sq: f64,
    pub var_total: f64,
    pub parts: ForecastParts,
    /// Parked vehicles older than every component support (treated as gone).
    #[serde(default)]
    pub flagged_vehicles: usize,
}

impl ForecastDistribution {
    pub(crate) fn new(horizon: f64, mean: f64, var_lb: f64, sigma_pred_sq: f64, parts: ForecastParts) -> Self {
        ForecastDistribution {
            horizon,
            mean,
            var_lb,
            sigma_pred_sq,
            var_total: var_lb * (1.0 + sigma_pred_sq),
            parts,
            flagged_vehicles: 0,
        }
    }

    /// Symmetric interval with the given central coverage under the Gaussian
    /// approximation.
    pub fn interval(&self, coverage: f64) -> (f64, f64) {
        let z = crate::stats::std_normal_quantile(0.5 + coverage / 2.0);
        let sd = self.var_total.sqrt();
        (self.mean - z * sd, self.mean + z * sd)
    }

    /// (actual - mean) / √var_lb, or `None` when var_lb is zero.
    pub fn normalized_error(&self, actual: f64) -> Option<f64> {
        (self.var_lb > 0.0).then(|| (actual - self.mean) / self.var_lb.sqrt())
    }
}

use serde::{Deserialize, Serialize};

use super::{ForecastDistribution, ForecastError};
use crate::stats::variance;

/// 5 min, 1 h, 6 h, 24 h.
pub const DEFAULT_HORIZONS: [f64; 4] = [300.0, 3600.0, 21_600.0, 86_400.0];

/// Minimum backtest points per calibrated horizon.
pub const MIN_BACKTEST: usize = 30;

/// σ²_pred at calibrated horizons, interpolated linearly in ln Δt and held
/// constant outside the calibrated range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaPredTable {
    pub horizons: Vec<f64>,
    pub values: Vec<f64>,
}

impl SigmaPredTable {
    pub fn zero() -> Self {
        SigmaPredTable {
            horizons: DEFAULT_HORIZONS.to_vec(),
            values: vec![0.0; DEFAULT_HORIZONS.len()],
        }
    }

    pub fn at(&self, dt: f64) -> f64 {
        let h = &self.horizons;
        if h.is_empty() || dt <= h[0] {
            return self.values.first().copied().unwrap_or(0.0);
        }
        let k = h.partition_point(|&x| x <= dt);
        if k >= h.len() {
            return *self.values.last().expect("nonempty");
        }
        let w = (dt.ln() - h[k - 1].ln()) / (h[k].ln() - h[k - 1].ln());
        self.values[k - 1] + w * (self.values[k] - self.values[k - 1])
    }
}

/// σ²_pred = max(0, Var[(actual - mean) / √var_lb] - 1) per horizon.
///
/// `backtest` holds, per horizon, the forecasts paired with realized values.
pub fn estimate_sigma_pred(
    backtest: &[(f64, Vec<(ForecastDistribution, f64)>)],
) -> Result<SigmaPredTable, ForecastError> {
    let mut rows: Vec<(f64, f64)> = Vec::with_capacity(backtest.len());
    for (h, pts) in backtest {
        let z: Vec<f64> = pts
            .iter()
            .filter_map(|(f, a)| f.normalized_error(*a))
            .collect();
        if z.len() < MIN_BACKTEST {
            return Err(ForecastError::InsufficientBacktest {
                horizon: *h,
                n: z.len(),
                min: MIN_BACKTEST,
            });
        }
        rows.push((*h, (variance(&z) - 1.0).max(0.0)));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SigmaPredTable {
        horizons: rows.iter().map(|r| r.0).collect(),
        values: rows.iter().map(|r| r.1).collect(),
    })
}

use serde::{Deserialize, Serialize};

use super::{BacktestRecord, ForecastDistribution, ForecastError, Method};

/// Accuracy of one method at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub method: Method,
    pub horizon: f64,
    pub n: usize,
    pub rmse: f64,
    pub mean_error: f64,
    /// Mean of √var_lb over the forecasts.
    pub mean_sqrt_var_lb: f64,
    /// Interval coverage under N(mean, var_total); `None` for point forecasts.
    pub coverage90: Option<f64>,
    pub coverage95: Option<f64>,
    /// (actual - mean) / √var_lb where var_lb > 0.
    pub normalized_errors: Vec<f64>,
}

pub fn evaluate_pairs(
    method: Method,
    horizon: f64,
    forecasts: &[ForecastDistribution],
    actuals: &[f64],
) -> Result<HorizonSummary, ForecastError> {
    if forecasts.len() != actuals.len() {
        return Err(ForecastError::LengthMismatch {
            forecasts: forecasts.len(),
            actuals: actuals.len(),
        });
    }
    if forecasts.is_empty() {
        return Err(ForecastError::InvalidInput("no forecasts to evaluate".into()));
    }
    let n = forecasts.len();
    let nf = n as f64;
    let errors: Vec<f64> = forecasts.iter().zip(actuals).map(|(f, a)| a - f.mean).collect();
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / nf).sqrt();
    let mean_error = errors.iter().sum::<f64>() / nf;
    let mean_sqrt_var_lb = forecasts.iter().map(|f| f.var_lb.sqrt()).sum::<f64>() / nf;
    let probabilistic = forecasts.iter().all(|f| f.var_total > 0.0);
    let coverage = |level: f64| {
        probabilistic.then(|| {
            let hits = forecasts
                .iter()
                .zip(actuals)
                .filter(|(f, a)| {
                    let (lo, hi) = f.interval(level);
                    (lo..=hi).contains(*a)
                })
                .count();
            hits as f64 / nf
        })
    };
    Ok(HorizonSummary {
        method,
        horizon,
        n,
        rmse,
        mean_error,
        mean_sqrt_var_lb,
        coverage90: coverage(0.90),
        coverage95: coverage(0.95),
        normalized_errors: forecasts
            .iter()
            .zip(actuals)
            .filter_map(|(f, a)| f.normalized_error(*a))
            .collect(),
    })
}

/// Groups backtest records by (method, horizon), sorted by method then
/// horizon.
pub fn evaluate(records: &[BacktestRecord]) -> Result<Vec<HorizonSummary>, ForecastError> {
    let mut keys: Vec<(Method, f64)> = records.iter().map(|r| (r.method, r.horizon)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(m, h)| {
            let (f, a): (Vec<_>, Vec<_>) = records
                .iter()
                .filter(|r| r.method == m && r.horizon == h)
                .map(|r| (r.forecast, r.actual))
                .unzip();
            evaluate_pairs(m, h, &f, &a)
        })
        .collect()
}

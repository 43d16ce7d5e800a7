use super::{ForecastDistribution, ForecastError, ForecastParts, SigmaPredTable};
use crate::queue::HOUR;
use crate::seasonal::{HourlySeries, SeriesModel};

/// Occupancy forecast from the fixed-effects + SARIMA model of the hourly
/// occupancy series.
///
/// `history` holds occupancy snapshots at hour marks; its last value is the
/// latest observation at or before `t`. Targets between hour marks are
/// interpolated linearly in mean and variance. The SARIMA forecast variance
/// is reported as `var_lb`.
pub fn macro_forecast(
    model: &SeriesModel,
    history: &HourlySeries,
    t: f64,
    dt: f64,
    sigma: &SigmaPredTable,
) -> Result<ForecastDistribution, ForecastError> {
    if history.is_empty() {
        return Err(ForecastError::InvalidInput("empty occupancy history".into()));
    }
    let last_time = history.time_at(history.len() - 1);
    if t < last_time || t - last_time >= HOUR {
        return Err(ForecastError::InvalidInput(format!(
            "history must end in the hour before t={t}"
        )));
    }
    let u = (t + dt - last_time) / HOUR;
    let k0 = u.floor() as usize;
    let frac = u - k0 as f64;
    let path = model.forecast(history, k0 + 1);
    let last = *history.values.last().expect("nonempty");
    let point = |k: usize| if k == 0 { (last, 0.0) } else { path[k - 1] };
    let (m0, v0) = point(k0);
    let (m1, v1) = point(k0 + 1);
    let mean = m0 + frac * (m1 - m0);
    let var = (v0 + frac * (v1 - v0)).max(0.0);
    Ok(ForecastDistribution::new(
        dt,
        mean,
        var,
        sigma.at(dt),
        ForecastParts::default(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history_gives_constant_forecast() {
        let s = HourlySeries::new(4.0 * 86400.0, 0.0, vec![12.0; 3 * 168]);
        let model = SeriesModel::fit(&s).unwrap();
        let t = s.time_at(s.len() - 1);
        for dt in [0.0, 300.0, 3600.0, 86_400.0] {
            let f = macro_forecast(&model, &s, t, dt, &SigmaPredTable::zero()).unwrap();
            assert!((f.mean - 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_stale_history() {
        let s = HourlySeries::new(0.0, 0.0, vec![1.0; 10]);
        let model = SeriesModel::fit(&HourlySeries::new(0.0, 0.0, vec![1.0; 400])).unwrap();
        assert!(macro_forecast(&model, &s, 20.0 * HOUR, 0.0, &SigmaPredTable::zero()).is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::{
    empirical_component_cdfs, fit_fixed_effects, fit_sarima, forecast_sarima,
    hourly_population_series, residual_series, FixedEffects, HourlySeries, PopulationPartition,
    PopulationSeries, SarimaModel, SeasonalError, SEASON,
};
use crate::eventlog::StayRecord;
use crate::queue::{EmpiricalCdf, PopulationRates, RateFunction, ShareSource};

/// Fixed effects plus a residual SARIMA model for one hourly series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesModel {
    pub effects: FixedEffects,
    pub sarima: SarimaModel,
    /// Set when the residual model could not be fitted and the zero model
    /// (pure cell means) is used instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

impl SeriesModel {
    pub fn fit(series: &HourlySeries) -> Result<Self, SeasonalError> {
        let effects = fit_fixed_effects(series)?;
        let x = residual_series(series, &effects);
        let (sarima, fallback) = match fit_sarima(&x.values) {
            Ok(fit) => (fit.model, None),
            Err(e @ (SeasonalError::DegenerateSeries | SeasonalError::NonConvergence { .. })) => (
                SarimaModel {
                    phi: 0.0,
                    theta: 0.0,
                    sigma2: 0.0,
                },
                Some(e.to_string()),
            ),
            Err(e) => return Err(e),
        };
        Ok(SeriesModel {
            effects,
            sarima,
            fallback,
        })
    }

    /// Mean and variance for the `h` hours following `history`.
    pub fn forecast(&self, history: &HourlySeries, h: usize) -> Vec<(f64, f64)> {
        let x = residual_series(history, &self.effects);
        let steps = if self.fallback.is_none() && x.len() > SEASON {
            forecast_sarima(&self.sarima, &x.values, h).ok()
        } else {
            None
        };
        (0..h)
            .map(|k| {
                let m = self.effects.mean_at(history.time_at(history.len() + k) + 1.0);
                match &steps {
                    Some(s) => (m + s[k].mean, s[k].variance),
                    None => (m, 0.0),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSpan {
    pub origin: f64,
    pub hours: usize,
}

/// Per-population arrival models and the component service distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalArrivalModel {
    pub partition: PopulationPartition,
    pub utc_offset_hours: f64,
    pub components: Vec<EmpiricalCdf>,
    pub empty_classes: Vec<usize>,
    pub populations: Vec<SeriesModel>,
    pub training: TrainingSpan,
}

impl SeasonalArrivalModel {
    /// Fits every population on the hours `[origin, origin + hours)`.
    pub fn fit(
        stays: &[StayRecord],
        partition: &PopulationPartition,
        origin: f64,
        hours: usize,
        utc_offset_hours: f64,
    ) -> Result<(Self, PopulationSeries), SeasonalError> {
        let end = origin + hours as f64 * crate::HOUR;
        let training: Vec<StayRecord> = stays
            .iter()
            .filter(|s| s.arrival_time >= origin && s.arrival_time < end)
            .cloned()
            .collect();
        if training.is_empty() {
            return Err(SeasonalError::InsufficientData(
                "no stays in the training span".into(),
            ));
        }
        let comps = empirical_component_cdfs(&training, partition);
        let series = hourly_population_series(&training, partition, origin, hours, utc_offset_hours);
        let populations = series
            .counts
            .iter()
            .map(SeriesModel::fit)
            .collect::<Result<Vec<_>, _>>()?;
        Ok((
            SeasonalArrivalModel {
                partition: partition.clone(),
                utc_offset_hours,
                components: comps.filled(partition),
                empty_classes: comps.empty_classes,
                populations,
                training: TrainingSpan { origin, hours },
            },
            series,
        ))
    }

    /// Cell-mean shares of each population for the hour containing `t`.
    pub fn cell_shares(&self, t: f64) -> Option<Vec<f64>> {
        let m: Vec<f64> = self
            .populations
            .iter()
            .map(|p| p.effects.mean_at(t).max(0.0))
            .collect();
        let total: f64 = m.iter().sum();
        (total > 0.0).then(|| m.iter().map(|v| v / total).collect())
    }

    /// Realized shares with empty hours filled from the cell-mean shares.
    pub fn shares_with_fallback(&self, series: &PopulationSeries) -> Vec<Vec<f64>> {
        let origin = series.counts[0].origin;
        let mut shares = series.shares.clone();
        for &h in &series.empty_hours {
            let t = origin + (h as f64 + 0.5) * crate::HOUR;
            if let Some(s) = self.cell_shares(t) {
                shares[h] = s;
            }
        }
        shares
    }
}

impl ShareSource for SeasonalArrivalModel {
    fn shares_at(&self, t: f64) -> Option<Vec<f64>> {
        self.cell_shares(t)
    }
}

/// Rate paths M_j for the `hours` hours after the end of `history`:
/// cell mean plus the residual forecast, floored at zero.
pub fn forecast_arrival_rate(
    model: &SeasonalArrivalModel,
    history: &[HourlySeries],
    hours: usize,
) -> Result<PopulationRates, SeasonalError> {
    if history.len() != model.populations.len() {
        return Err(SeasonalError::InvalidInput(format!(
            "{} history series for {} populations",
            history.len(),
            model.populations.len()
        )));
    }
    let rates = model
        .populations
        .iter()
        .zip(history)
        .map(|(p, hist)| {
            let path = p.forecast(hist, hours).into_iter().map(|(m, _)| m.max(0.0)).collect();
            RateFunction::new(hist.end(), path)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SeasonalError::InvalidInput(e.to_string()))?;
    PopulationRates::new(rates).map_err(|e| SeasonalError::InvalidInput(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue::HOUR;

    const MONDAY: f64 = 4.0 * 86400.0;

    #[test]
    fn zero_residual_model_is_cell_means() {
        let values: Vec<f64> = (0..3 * 168).map(|k| (k % 24) as f64).collect();
        let s = HourlySeries::new(MONDAY, 0.0, values);
        let m = SeriesModel::fit(&s).unwrap();
        assert!(m.fallback.is_some());
        let f = m.forecast(&s, 30);
        for (k, (mean, var)) in f.iter().enumerate() {
            assert_eq!(*mean, (k % 24) as f64);
            assert_eq!(*var, 0.0);
        }
    }

    #[test]
    fn forecast_rates_nonnegative_and_aligned() {
        let stays: Vec<StayRecord> = (0..3 * 168)
            .flat_map(|h| {
                let n = if h % 24 < 12 { 3 } else { 0 };
                (0..n).map(move |i| {
                    let a = MONDAY + h as f64 * HOUR + i as f64 * 600.0;
                    StayRecord::new("x", a, a + 40.0 * 60.0 + i as f64)
                })
            })
            .collect();
        let p = PopulationPartition::default();
        let (model, series) = SeasonalArrivalModel::fit(&stays, &p, MONDAY, 3 * 168, 0.0).unwrap();
        let rates = forecast_arrival_rate(&model, &series.counts, 48).unwrap();
        assert_eq!(rates.origin(), MONDAY + 3.0 * 168.0 * HOUR);
        for r in rates.iter() {
            assert!(r.hourly_rates().iter().all(|&v| v >= 0.0));
        }
        assert!((rates.get(2).hourly_rates()[3] - 3.0).abs() < 1e-9);
        assert_eq!(model.cell_shares(MONDAY + 5.0 * HOUR), Some(vec![0.0, 0.0, 1.0, 0.0]));
        assert_eq!(model.cell_shares(MONDAY + 20.0 * HOUR), None);
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    estimate_sigma_pred, macro_forecast, micro_forecast, mmc_fit, mmc_forecast, ForecastDistribution,
    ForecastError, ForecastParts, LotState, MicroInputs, MmcParams, SigmaPredTable,
};
use crate::eventlog::{OccupancyCounter, StayRecord};
use crate::queue::{EmpiricalCdf, PopulationRates, RateFunction, ShareSource, HOUR};
use crate::seasonal::{
    forecast_arrival_rate, hourly_population_series, HourlySeries, PopulationPartition,
    PopulationSeries, SeasonalArrivalModel, SeriesModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Fitted components and shares, SARIMA-forecast arrival rates.
    Micro,
    /// Fitted components and shares, true arrival rates.
    MicroPerfect,
    /// The generating model itself.
    Oracle,
    Macro,
    Mmc,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Micro,
        Method::MicroPerfect,
        Method::Oracle,
        Method::Macro,
        Method::Mmc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Micro => "micro",
            Method::MicroPerfect => "micro-perfect",
            Method::Oracle => "oracle",
            Method::Macro => "macro",
            Method::Mmc => "mmc",
        }
    }

    pub fn needs_truth(&self) -> bool {
        matches!(self, Method::MicroPerfect | Method::Oracle)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ForecastError::InvalidInput(format!("unknown method {s:?}")))
    }
}

/// Everything needed to forecast without the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub arrival: SeasonalArrivalModel,
    /// Fixed effects + SARIMA on hourly occupancy snapshots.
    pub occupancy: SeriesModel,
    pub mmc: MmcParams,
    #[serde(default)]
    pub sigma: BTreeMap<Method, SigmaPredTable>,
}

impl FittedModels {
    pub fn sigma_for(&self, method: Method) -> SigmaPredTable {
        self.sigma
            .get(&method)
            .cloned()
            .unwrap_or_else(SigmaPredTable::zero)
    }

    pub fn training_origin(&self) -> f64 {
        self.arrival.training.origin
    }

    pub fn training_end(&self) -> f64 {
        self.arrival.training.origin + self.arrival.training.hours as f64 * HOUR
    }
}

/// N at each hour mark `origin + k h`, k in `0..hours`.
pub fn occupancy_snapshots(
    stays: &[StayRecord],
    origin: f64,
    hours: usize,
    utc_offset_hours: f64,
) -> HourlySeries {
    snapshots(&OccupancyCounter::new(stays), origin, hours, utc_offset_hours)
}

fn snapshots(counter: &OccupancyCounter, origin: f64, hours: usize, off: f64) -> HourlySeries {
    let values = (0..hours)
        .map(|k| counter.at(origin + k as f64 * HOUR) as f64)
        .collect();
    HourlySeries::new(origin, off, values)
}

/// Fits the arrival, occupancy and M/M/C models on `[origin, origin + hours)`.
pub fn fit_models(
    stays: &[StayRecord],
    partition: &PopulationPartition,
    origin: f64,
    hours: usize,
    utc_offset_hours: f64,
) -> Result<FittedModels, ForecastError> {
    let (arrival, _) = SeasonalArrivalModel::fit(stays, partition, origin, hours, utc_offset_hours)?;
    let snaps = occupancy_snapshots(stays, origin, hours, utc_offset_hours);
    Ok(FittedModels {
        arrival,
        occupancy: SeriesModel::fit(&snaps)?,
        mmc: mmc_fit(&snaps)?,
        sigma: BTreeMap::new(),
    })
}

/// Per-class hourly arrival counts for the whole hours before `t`, as known
/// at `t`.
///
/// `complete` holds the counts with every service time known. Vehicles still
/// parked at `t` have an unknown class: each is removed from its class and
/// spread over the classes with posterior weights ∝ λ_j(τ) S_j(t - τ).
pub fn population_history(
    complete: &PopulationSeries,
    parked: &[StayRecord],
    model: &SeasonalArrivalModel,
    t: f64,
) -> Vec<HourlySeries> {
    let first = &complete.counts[0];
    let k = (((t - first.origin) / HOUR).floor().max(0.0) as usize).min(first.len());
    let mut hist: Vec<HourlySeries> = complete.counts.iter().map(|c| c.slice(0, k)).collect();
    let classes = hist.len();
    for s in parked {
        let h = ((s.arrival_time - first.origin) / HOUR).floor();
        if h < 0.0 || h as usize >= k {
            continue;
        }
        let h = h as usize;
        hist[model.partition.classify(s.service_time)].values[h] -= 1.0;
        let age = t - s.arrival_time;
        let lam = model
            .cell_shares(s.arrival_time)
            .unwrap_or_else(|| vec![1.0 / classes as f64; classes]);
        let w: Vec<f64> = lam
            .iter()
            .zip(&model.components)
            .map(|(l, g)| l * g.survival(age))
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            for (j, wj) in w.iter().enumerate() {
                hist[j].values[h] += wj / total;
            }
        } else {
            hist[classes - 1].values[h] += 1.0;
        }
    }
    hist
}

/// The generating model of a simulated lot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub components: Vec<EmpiricalCdf>,
    pub rates: PopulationRates,
    /// Model class containing each generating population.
    pub classes: Vec<usize>,
}

impl Truth {
    /// True arrival rates summed into `n` model classes.
    pub fn class_rates(&self, n: usize) -> Result<PopulationRates, ForecastError> {
        if self.classes.len() != self.rates.len() || self.classes.iter().any(|&c| c >= n) {
            return Err(ForecastError::InvalidInput(
                "truth class map does not match the rates".into(),
            ));
        }
        let hours = self.rates.get(0).hours();
        let mut sums = vec![vec![0.0; hours]; n];
        for (r, &c) in self.rates.iter().zip(&self.classes) {
            for (s, v) in sums[c].iter_mut().zip(r.hourly_rates()) {
                *s += v;
            }
        }
        let rates = sums
            .into_iter()
            .map(|v| RateFunction::new(self.rates.origin(), v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PopulationRates::new(rates)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub origins: Vec<f64>,
    pub horizons: Vec<f64>,
    pub methods: Vec<Method>,
}

impl BacktestConfig {
    /// Hourly origins `start, start + 1h, ...` (`count` of them).
    pub fn hourly(start: f64, count: usize, horizons: Vec<f64>, methods: Vec<Method>) -> Self {
        BacktestConfig {
            origins: (0..count).map(|k| start + k as f64 * HOUR).collect(),
            horizons,
            methods,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestRecord {
    pub method: Method,
    pub origin: f64,
    pub horizon: f64,
    pub forecast: ForecastDistribution,
    pub actual: f64,
}

/// Forecasts from every origin at every horizon and pairs them with the
/// realized occupancy. Each forecast only uses information available at its
/// origin. Methods that need the generating model require `truth`.
pub fn run_backtest(
    stays: &[StayRecord],
    models: &FittedModels,
    truth: Option<&Truth>,
    cfg: &BacktestConfig,
) -> Result<Vec<BacktestRecord>, ForecastError> {
    if cfg.origins.is_empty() || cfg.horizons.is_empty() {
        return Err(ForecastError::InvalidInput("no origins or horizons".into()));
    }
    if cfg.horizons.iter().any(|h| !(*h >= 0.0)) {
        return Err(ForecastError::InvalidInput("horizons must be non-negative".into()));
    }
    let truth_class_rates = match (cfg.methods.iter().any(Method::needs_truth), truth) {
        (false, _) => None,
        (true, None) => {
            return Err(ForecastError::InvalidInput(
                "perfect-arrival and oracle forecasts need the generating model".into(),
            ))
        }
        (true, Some(tr)) => Some(tr.class_rates(models.arrival.partition.classes())?),
    };
    let arrival = &models.arrival;
    let off = arrival.utc_offset_hours;
    let origin0 = models.training_origin();
    let last = cfg.origins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if cfg.origins.iter().any(|&t| t < origin0) {
        return Err(ForecastError::InvalidInput(
            "forecast origin precedes the training span".into(),
        ));
    }
    let hours = ((last - origin0) / HOUR).floor() as usize + 1;
    let complete = hourly_population_series(stays, &arrival.partition, origin0, hours, off);
    let counter = OccupancyCounter::new(stays);
    let snaps = snapshots(&counter, origin0, hours, off);

    let mut by_arrival: Vec<&StayRecord> = stays.iter().collect();
    by_arrival.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
    let max_service = stays.iter().map(|s| s.service_time).fold(0.0, f64::max);
    let max_h = cfg.horizons.iter().copied().fold(0.0, f64::max);

    let mut out = Vec::with_capacity(cfg.origins.len() * cfg.horizons.len() * cfg.methods.len());
    for &t in &cfg.origins {
        let lo = by_arrival.partition_point(|s| s.arrival_time < t - max_service);
        let hi = by_arrival.partition_point(|s| s.arrival_time <= t);
        let parked: Vec<StayRecord> = by_arrival[lo..hi]
            .iter()
            .filter(|s| s.parked_at(t))
            .map(|s| (*s).clone())
            .collect();
        let state = LotState::new(t, parked.iter().map(|s| s.arrival_time).collect())?;
        let k = ((t - origin0) / HOUR).floor() as usize;
        let mark = origin0 + k as f64 * HOUR;
        let need_hours = ((t + max_h - mark) / HOUR).ceil() as usize + 1;

        let forecast_rates = if cfg.methods.contains(&Method::Micro) {
            let hist = population_history(&complete, &parked, arrival, t);
            Some(forecast_arrival_rate(arrival, &hist, need_hours)?)
        } else {
            None
        };
        for &method in &cfg.methods {
            let sigma = models.sigma_for(method);
            for &dt in &cfg.horizons {
                let forecast = match method {
                    Method::Micro => micro_forecast(
                        &state,
                        &MicroInputs {
                            components: &arrival.components,
                            shares: arrival as &dyn ShareSource,
                            rates: forecast_rates.as_ref().expect("computed above"),
                        },
                        dt,
                        &sigma,
                    )?,
                    Method::MicroPerfect => micro_forecast(
                        &state,
                        &MicroInputs {
                            components: &arrival.components,
                            shares: arrival as &dyn ShareSource,
                            rates: truth_class_rates.as_ref().expect("checked above"),
                        },
                        dt,
                        &sigma,
                    )?,
                    Method::Oracle => {
                        let tr = truth.expect("checked above");
                        micro_forecast(
                            &state,
                            &MicroInputs {
                                components: &tr.components,
                                shares: &tr.rates,
                                rates: &tr.rates,
                            },
                            dt,
                            &sigma,
                        )?
                    }
                    Method::Macro => {
                        macro_forecast(&models.occupancy, &snaps.slice(0, k + 1), t, dt, &sigma)?
                    }
                    Method::Mmc => {
                        let n0 = state.occupancy() as f64;
                        ForecastDistribution::new(
                            dt,
                            mmc_forecast(n0, t, dt, &models.mmc),
                            0.0,
                            0.0,
                            ForecastParts::default(),
                        )
                    }
                };
                out.push(BacktestRecord {
                    method,
                    origin: t,
                    horizon: dt,
                    forecast,
                    actual: counter.at(t + dt) as f64,
                });
            }
        }
    }
    Ok(out)
}

/// σ²_pred tables per method from backtest records (point-forecast methods
/// are skipped).
pub fn calibrate_sigma(
    records: &[BacktestRecord],
) -> Result<BTreeMap<Method, SigmaPredTable>, ForecastError> {
    let mut grouped: BTreeMap<Method, Vec<(f64, Vec<(ForecastDistribution, f64)>)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.method != Method::Mmc) {
        let rows = grouped.entry(r.method).or_default();
        match rows.iter_mut().find(|(h, _)| *h == r.horizon) {
            Some((_, pts)) => pts.push((r.forecast, r.actual)),
            None => rows.push((r.horizon, vec![(r.forecast, r.actual)])),
        }
    }
    grouped
        .into_iter()
        .map(|(m, rows)| {
            let rows: Vec<_> = rows.into_iter().filter(|(h, _)| *h > 0.0).collect();
            Ok((m, estimate_sigma_pred(&rows)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue::{simulate_lot, ServiceMixture, ShareTable, SimConfig};

    const MONDAY: f64 = 4.0 * 86400.0;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let js = serde_json::to_string(&m).unwrap();
            assert_eq!(js, format!("\"{}\"", m.name()));
        }
        assert!("lstm".parse::<Method>().is_err());
    }

    #[test]
    fn truth_class_rates_sum() {
        let r = |v: f64| RateFunction::constant(0.0, v, 3).unwrap();
        let tr = Truth {
            components: vec![EmpiricalCdf::point_mass(60.0).unwrap(); 3],
            rates: PopulationRates::new(vec![r(1.0), r(2.0), r(4.0)]).unwrap(),
            classes: vec![0, 1, 1],
        };
        let cr = tr.class_rates(2).unwrap();
        assert_eq!(cr.get(1).hourly_rates(), &[6.0, 6.0, 6.0]);
        assert!(tr.class_rates(1).is_err());
    }

    #[test]
    fn history_reallocates_parked_vehicles() {
        let partition = PopulationPartition::new(vec![30.0]).unwrap();
        let mut stays = Vec::new();
        for h in 0..400 {
            let a = MONDAY + h as f64 * HOUR;
            stays.push(StayRecord::new("a", a + 10.0, a + 610.0));
            stays.push(StayRecord::new("b", a + 20.0, a + 7220.0));
        }
        let (model, complete) =
            SeasonalArrivalModel::fit(&stays, &partition, MONDAY, 400, 0.0).unwrap();
        let t = MONDAY + 300.0 * HOUR;
        let parked: Vec<StayRecord> = stays.iter().filter(|s| s.parked_at(t)).cloned().collect();
        assert_eq!(parked.len(), 2);
        let hist = population_history(&complete, &parked, &model, t);
        assert_eq!(hist[0].len(), 300);
        let total: f64 = hist.iter().map(|h| h.values.iter().sum::<f64>()).sum();
        assert!((total - 600.0).abs() < 1e-9);
        // the two long stays are older than every short stay, so they stay long
        assert_eq!(hist[1].values[299], 1.0);
        assert_eq!(hist[1].values[298], 1.0);
    }

    #[test]
    fn small_backtest_runs() {
        let hours = 24 * 7 * 3;
        let rate = RateFunction::new(
            MONDAY,
            (0..hours).map(|h| 20.0 + 10.0 * ((h % 24) as f64 / 4.0).sin()).collect(),
        )
        .unwrap();
        let comps = vec![
            EmpiricalCdf::uniform(60.0, 1200.0).unwrap(),
            EmpiricalCdf::uniform(1800.0, 7200.0).unwrap(),
        ];
        let rates = PopulationRates::from_total(&rate, &vec![vec![0.6, 0.4]; hours]).unwrap();
        let cfg = SimConfig {
            location_id: "lot".into(),
            rates: rates.clone(),
            mixture: ServiceMixture::new(comps.clone(), ShareTable::constant(MONDAY, vec![0.6, 0.4], hours).unwrap())
                .unwrap(),
            horizon: hours as f64 * HOUR,
            seed: 3,
        };
        let stays = simulate_lot(&cfg).unwrap().stays();
        let partition = PopulationPartition::new(vec![25.0]).unwrap();
        let models = fit_models(&stays, &partition, MONDAY, 24 * 14, 0.0).unwrap();
        let truth = Truth {
            components: comps,
            rates,
            classes: vec![0, 1],
        };
        let bt = BacktestConfig::hourly(
            MONDAY + 24.0 * 14.0 * HOUR,
            24,
            vec![0.0, 300.0, 3600.0],
            Method::ALL.to_vec(),
        );
        let recs = run_backtest(&stays, &models, Some(&truth), &bt).unwrap();
        assert_eq!(recs.len(), 24 * 3 * 5);
        for r in recs.iter().filter(|r| r.horizon == 0.0) {
            assert_eq!(r.forecast.mean, r.actual, "{:?}", r.method);
        }
        assert!(run_backtest(&stays, &models, None, &bt).is_err());
    }
}

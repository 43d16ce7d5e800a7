//! Synthetic lots with a weekly demand profile, hour-of-day population mixes
//! and an optional multiplicative random effect on the arrival rate.
//!
//! The presets back the examples, the CLI `simulate` command and the
//! benchmark tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, LogNormal};

use crate::forecast::Truth;
use crate::queue::{
    simulate_lot, EmpiricalCdf, Knot, PopulationRates, QueueError, RateFunction, ServiceMixture,
    ShareTable, SimConfig, SimulatedLot, HOUR,
};
use crate::seasonal::{calendar_cell, cell_index, PopulationPartition, WEEK_HOURS};

/// Monday 1970-01-05 00:00 UTC.
pub const FIRST_MONDAY: f64 = 4.0 * 86_400.0;

const KNOTS: usize = 257;
const EFFECT_STREAM: u64 = 1 << 32;

/// Lognormal with the given median (minutes) and log-sd, truncated to
/// `[lo, hi]` minutes; returned in seconds.
pub fn truncated_lognormal(
    median_min: f64,
    log_sd: f64,
    lo_min: f64,
    hi_min: f64,
) -> Result<EmpiricalCdf, QueueError> {
    if !(0.0 <= lo_min && lo_min < hi_min && median_min > 0.0 && log_sd > 0.0) {
        return Err(QueueError::InvalidCdf(
            "truncated lognormal needs 0 <= lo < hi and positive parameters".into(),
        ));
    }
    let d = LogNormal::new(median_min.ln(), log_sd)
        .map_err(|e| QueueError::InvalidCdf(e.to_string()))?;
    let (f_lo, f_hi) = (d.cdf(lo_min), d.cdf(hi_min));
    if f_hi - f_lo < 1e-9 {
        return Err(QueueError::InvalidCdf("truncation interval has no mass".into()));
    }
    let knots = (0..KNOTS)
        .map(|k| {
            let p = k as f64 / (KNOTS - 1) as f64;
            let x = match k {
                0 => lo_min,
                k if k == KNOTS - 1 => hi_min,
                _ => d.inverse_cdf(f_lo + p * (f_hi - f_lo)).clamp(lo_min, hi_min),
            };
            Knot { x: x * 60.0, p }
        })
        .collect();
    EmpiricalCdf::from_knots(lo_min * 60.0, hi_min * 60.0, knots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPopulation {
    pub label: String,
    pub service: EmpiricalCdf,
    /// Relative arrival weight for each local hour of day (24 values).
    pub hourly_weight: Vec<f64>,
}

/// X(t) = exp(z(t) - sd²/2) with (1 - φB)(1 - ΦB²⁴) z = ε, scaled to the
/// stationary standard deviation `sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomEffect {
    pub phi: f64,
    pub seasonal_phi: f64,
    pub sd: f64,
}

impl RandomEffect {
    pub fn sample(&self, hours: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(EFFECT_STREAM);
        let scale = self.sd * ((1.0 - self.phi.powi(2)) * (1.0 - self.seasonal_phi.powi(2))).sqrt();
        let eps = Normal::new(0.0, scale.max(0.0)).expect("finite scale");
        let burn = 24 * 60;
        let mut z = vec![0.0; burn + hours];
        for t in 0..z.len() {
            let lag = |k: usize| if t >= k { z[t - k] } else { 0.0 };
            z[t] = self.phi * lag(1) + self.seasonal_phi * lag(24)
                - self.phi * self.seasonal_phi * lag(25)
                + eps.sample(&mut rng);
        }
        z[burn..]
            .iter()
            .map(|v| (v - 0.5 * self.sd * self.sd).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub location_id: String,
    pub start: f64,
    pub hours: usize,
    pub utc_offset_hours: f64,
    /// Expected total arrivals per hour for each (weekday, hour) cell.
    pub weekly_profile: Vec<f64>,
    pub populations: Vec<SubPopulation>,
    pub random_effect: Option<RandomEffect>,
    pub seed: u64,
}

/// A simulated scenario together with its generating model.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: SimConfig,
    pub lot: SimulatedLot,
    pub truth: Truth,
    /// Realized random-effect multiplier per hour (all ones without one).
    pub effect: Vec<f64>,
}

/// Daily shape with an afternoon peak, damped at weekends.
pub fn weekly_profile(mean_rate: f64, amplitude: f64) -> Vec<f64> {
    (0..WEEK_HOURS)
        .map(|i| {
            let (d, h) = (i / 24, i % 24);
            let day = if d >= 5 { 0.8 } else { 1.0 };
            let phase = 2.0 * std::f64::consts::PI * (h as f64 - 9.0) / 24.0;
            mean_rate * day * (1.0 + amplitude * phase.sin())
        })
        .collect()
}

fn hourly(f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..24)
        .map(|h| f(2.0 * std::f64::consts::PI * (h as f64 - 9.0) / 24.0))
        .collect()
}

impl Scenario {
    pub fn validate(&self) -> Result<(), QueueError> {
        let bad = |m: &str| Err(QueueError::InvalidConfig(m.to_string()));
        if self.weekly_profile.len() != WEEK_HOURS || self.weekly_profile.iter().any(|r| !(*r >= 0.0)) {
            return bad("weekly profile needs 168 non-negative rates");
        }
        if self.populations.is_empty() || self.hours == 0 {
            return bad("scenario needs populations and a positive length");
        }
        for p in &self.populations {
            if p.hourly_weight.len() != 24 || p.hourly_weight.iter().any(|w| !(*w >= 0.0)) {
                return bad("hourly weights need 24 non-negative values");
            }
        }
        if (0..24).any(|h| self.populations.iter().all(|p| p.hourly_weight[h] == 0.0)) {
            return bad("every hour needs a population with positive weight");
        }
        Ok(())
    }

    pub fn effect_path(&self) -> Vec<f64> {
        match &self.random_effect {
            Some(re) => re.sample(self.hours, self.seed),
            None => vec![1.0; self.hours],
        }
    }

    fn shares(&self, hour_of_day: usize) -> Vec<f64> {
        let w: Vec<f64> = self.populations.iter().map(|p| p.hourly_weight[hour_of_day]).collect();
        let total: f64 = w.iter().sum();
        w.iter().map(|v| v / total).collect()
    }

    /// True per-population rates including the random effect.
    pub fn population_rates(&self, effect: &[f64]) -> Result<PopulationRates, QueueError> {
        self.validate()?;
        let k = self.populations.len();
        let mut paths = vec![Vec::with_capacity(self.hours); k];
        for (h, x) in effect.iter().enumerate().take(self.hours) {
            let t = self.start + (h as f64 + 0.5) * HOUR;
            let (d, hod) = calendar_cell(t, self.utc_offset_hours);
            let total = self.weekly_profile[cell_index(d, hod)] * x;
            for (j, s) in self.shares(hod).into_iter().enumerate() {
                paths[j].push(total * s);
            }
        }
        PopulationRates::new(
            paths
                .into_iter()
                .map(|p| RateFunction::new(self.start, p))
                .collect::<Result<_, _>>()?,
        )
    }

    /// Model class of each sub-population; every sub-population must fall
    /// inside one class.
    pub fn classes(&self, partition: &PopulationPartition) -> Result<Vec<usize>, QueueError> {
        self.populations
            .iter()
            .map(|p| {
                let (lo, hi) = p.service.support();
                let c = partition.classify(lo);
                let (_, upper) = partition.interval(c);
                if hi > upper {
                    Err(QueueError::InvalidConfig(format!(
                        "population {} straddles a class boundary",
                        p.label
                    )))
                } else {
                    Ok(c)
                }
            })
            .collect()
    }

    pub fn run(&self, partition: &PopulationPartition) -> Result<ScenarioRun, QueueError> {
        let effect = self.effect_path();
        let rates = self.population_rates(&effect)?;
        let components: Vec<EmpiricalCdf> =
            self.populations.iter().map(|p| p.service.clone()).collect();
        let shares = ShareTable::new(
            self.start,
            (0..self.hours)
                .map(|h| {
                    let t = self.start + (h as f64 + 0.5) * HOUR;
                    self.shares(calendar_cell(t, self.utc_offset_hours).1)
                })
                .collect(),
        )?;
        let config = SimConfig {
            location_id: self.location_id.clone(),
            rates: rates.clone(),
            mixture: ServiceMixture::new(components.clone(), shares)?,
            horizon: self.hours as f64 * HOUR,
            seed: self.seed,
        };
        let lot = simulate_lot(&config)?;
        Ok(ScenarioRun {
            config,
            lot,
            truth: Truth {
                components,
                rates,
                classes: self.classes(partition)?,
            },
            effect,
        })
    }

    /// Four populations, one per default class, with a sinusoidal weekly
    /// profile and no random effect.
    pub fn four_population(mean_rate: f64, weeks: usize, seed: u64) -> Result<Self, QueueError> {
        Ok(Scenario {
            location_id: "sim".into(),
            start: FIRST_MONDAY,
            hours: weeks * WEEK_HOURS,
            utc_offset_hours: 0.0,
            weekly_profile: weekly_profile(mean_rate, 0.5),
            populations: vec![
                SubPopulation {
                    label: "very-short".into(),
                    service: truncated_lognormal(2.0, 0.6, 0.2, 5.0)?,
                    hourly_weight: hourly(|p| 0.15 + 0.05 * p.sin()),
                },
                SubPopulation {
                    label: "short".into(),
                    service: truncated_lognormal(12.0, 0.5, 5.0, 25.0)?,
                    hourly_weight: hourly(|p| 0.35 + 0.1 * p.sin()),
                },
                SubPopulation {
                    label: "normal".into(),
                    service: truncated_lognormal(60.0, 0.8, 25.0, 360.0)?,
                    hourly_weight: hourly(|p| 0.35 - 0.05 * p.sin()),
                },
                SubPopulation {
                    label: "long".into(),
                    service: truncated_lognormal(540.0, 0.4, 360.0, 1200.0)?,
                    hourly_weight: hourly(|p| 0.15 - 0.1 * p.sin()),
                },
            ],
            random_effect: None,
            seed,
        })
    }

    /// Five populations (the default "normal" class holds two with opposite
    /// daily cycles) and a persistent multiplicative random effect.
    pub fn benchmark(weeks: usize, seed: u64) -> Result<Self, QueueError> {
        let mut s = Self::four_population(60.0, weeks, seed)?;
        s.populations[2] = SubPopulation {
            label: "normal-short".into(),
            service: truncated_lognormal(40.0, 0.4, 25.0, 90.0)?,
            hourly_weight: hourly(|p| 0.2 + 0.08 * p.sin()),
        };
        s.populations.insert(
            3,
            SubPopulation {
                label: "normal-long".into(),
                service: truncated_lognormal(200.0, 0.4, 90.0, 360.0)?,
                hourly_weight: hourly(|p| 0.2 - 0.08 * p.sin()),
            },
        );
        s.random_effect = Some(RandomEffect {
            phi: 0.5,
            seasonal_phi: 0.97,
            sd: 0.3,
        });
        Ok(s)
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EmpiricalCdf, PopulationRates, QueueError, HOUR};

/// Anything that can report the population shares λ_j(t) of arrivals at `t`.
pub trait ShareSource {
    fn shares_at(&self, t: f64) -> Option<Vec<f64>>;
}

/// Per-hour share vectors λ(t), each summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareTable {
    origin: f64,
    hourly: Vec<Vec<f64>>,
}

impl ShareTable {
    pub fn new(origin: f64, hourly: Vec<Vec<f64>>) -> Result<Self, QueueError> {
        let k = hourly.first().map(Vec::len).unwrap_or(0);
        for (h, row) in hourly.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != k || row.iter().any(|s| !(*s >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(QueueError::InvalidConfig(format!(
                    "share row {h} is not a probability vector: {row:?}"
                )));
            }
        }
        Ok(ShareTable { origin, hourly })
    }

    /// The same share vector for every hour of `[origin, origin + hours)`.
    pub fn constant(origin: f64, shares: Vec<f64>, hours: usize) -> Result<Self, QueueError> {
        Self::new(origin, vec![shares; hours])
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn hours(&self) -> usize {
        self.hourly.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.hourly
    }

    pub fn populations(&self) -> usize {
        self.hourly.first().map(Vec::len).unwrap_or(0)
    }

    pub fn at(&self, t: f64) -> Option<&[f64]> {
        if t < self.origin {
            return None;
        }
        let k = ((t - self.origin) / HOUR).floor() as usize;
        self.hourly.get(k).map(Vec::as_slice)
    }
}

impl ShareSource for ShareTable {
    fn shares_at(&self, t: f64) -> Option<Vec<f64>> {
        self.at(t).map(<[f64]>::to_vec)
    }
}

impl ShareSource for PopulationRates {
    /// Shares M_j(t) / Σ M(t); `None` where the total rate is zero.
    fn shares_at(&self, t: f64) -> Option<Vec<f64>> {
        let rates: Vec<f64> = self.iter().map(|r| r.rate_at(t)).collect::<Option<_>>()?;
        let total: f64 = rates.iter().sum();
        (total > 0.0).then(|| rates.iter().map(|r| r / total).collect())
    }
}

/// Time-varying service distribution G(t) = Σ_j λ_j(t) G_j with
/// time-invariant components on disjoint, ordered supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceMixture {
    components: Vec<EmpiricalCdf>,
    shares: ShareTable,
}

impl ServiceMixture {
    pub fn new(components: Vec<EmpiricalCdf>, shares: ShareTable) -> Result<Self, QueueError> {
        if components.is_empty() {
            return Err(QueueError::InvalidConfig("mixture needs components".into()));
        }
        for w in components.windows(2) {
            let (a, b) = (w[0].support(), w[1].support());
            if a.1 > b.0 {
                return Err(QueueError::InvalidConfig(format!(
                    "component supports overlap or are out of order: {a:?} then {b:?}"
                )));
            }
        }
        if shares.populations() != components.len() && shares.hours() > 0 {
            return Err(QueueError::InvalidConfig(format!(
                "{} share columns for {} components",
                shares.populations(),
                components.len()
            )));
        }
        Ok(ServiceMixture { components, shares })
    }

    pub fn components(&self) -> &[EmpiricalCdf] {
        &self.components
    }

    pub fn shares(&self) -> &ShareTable {
        &self.shares
    }

    /// Longest service time any component can produce.
    pub fn max_support(&self) -> f64 {
        self.components
            .iter()
            .map(EmpiricalCdf::max_value)
            .fold(0.0, f64::max)
    }

    /// Draws the population from λ(hour of `arrival_time`), then a duration by
    /// inverting that component's CDF. Returns `(population, seconds)`.
    pub fn sample_service<R: Rng + ?Sized>(
        &self,
        arrival_time: f64,
        rng: &mut R,
    ) -> Result<(usize, f64), QueueError> {
        let shares = self
            .shares
            .at(arrival_time)
            .ok_or(QueueError::UndefinedHistory { t: arrival_time })?;
        let j = pick(shares, rng.random::<f64>());
        Ok((j, self.components[j].quantile(rng.random::<f64>())))
    }
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return j;
        }
    }
    // rounding left u at or above the final cumulative weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

use serde::{Deserialize, Serialize};

use super::{QueueError, HOUR};

/// Piecewise-constant arrival intensity M(t) in vehicles per hour, one value
/// per hour slot starting at `origin` (epoch seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    origin: f64,
    hourly_rates: Vec<f64>,
}

impl RateFunction {
    pub fn new(origin: f64, hourly_rates: Vec<f64>) -> Result<Self, QueueError> {
        if !origin.is_finite() {
            return Err(QueueError::InvalidRate("origin must be finite".into()));
        }
        if let Some((i, r)) = hourly_rates
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || **r < 0.0)
        {
            return Err(QueueError::InvalidRate(format!("slot {i} has rate {r}")));
        }
        Ok(RateFunction {
            origin,
            hourly_rates,
        })
    }

    pub fn constant(origin: f64, rate: f64, hours: usize) -> Result<Self, QueueError> {
        Self::new(origin, vec![rate; hours])
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn end(&self) -> f64 {
        self.origin + self.hourly_rates.len() as f64 * HOUR
    }

    pub fn hours(&self) -> usize {
        self.hourly_rates.len()
    }

    pub fn hourly_rates(&self) -> &[f64] {
        &self.hourly_rates
    }

    pub fn max_rate(&self) -> f64 {
        self.hourly_rates.iter().copied().fold(0.0, f64::max)
    }

    /// Slot index holding `t`, if `t` lies in `[origin, end)`.
    pub fn slot(&self, t: f64) -> Option<usize> {
        if t < self.origin {
            return None;
        }
        let k = ((t - self.origin) / HOUR).floor() as usize;
        (k < self.hourly_rates.len()).then_some(k)
    }

    pub fn rate_at(&self, t: f64) -> Option<f64> {
        self.slot(t).map(|k| self.hourly_rates[k])
    }

    /// Whether the function is defined on all of `[a, b]` (right end may
    /// coincide with `end()`).
    pub fn covers(&self, a: f64, b: f64) -> bool {
        a >= self.origin - 1e-9 && b <= self.end() + 1e-9
    }

    /// Expected arrivals in `[a, b]`, the integral of M over that interval.
    /// Parts of the interval outside the definition range contribute zero.
    pub fn integrated(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        for (k, r) in self.hourly_rates.iter().enumerate() {
            let s = self.origin + k as f64 * HOUR;
            let e = s + HOUR;
            let lo = a.max(s);
            let hi = b.min(e);
            if hi > lo {
                total += r * (hi - lo) / HOUR;
            }
        }
        total
    }

    /// Cumulative mean arrivals from the origin up to `t`.
    pub fn cumulative(&self, t: f64) -> f64 {
        self.integrated(self.origin, t)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, QueueError> {
        Self::new(
            self.origin,
            self.hourly_rates.iter().map(|r| r * factor).collect(),
        )
    }

    /// Prepends `hours` zero-rate slots, moving the origin back accordingly.
    /// Models a lot that was empty before the original origin.
    pub fn padded_front(&self, hours: usize) -> Self {
        let mut rates = vec![0.0; hours];
        rates.extend_from_slice(&self.hourly_rates);
        RateFunction {
            origin: self.origin - hours as f64 * HOUR,
            hourly_rates: rates,
        }
    }
}

/// One [`RateFunction`] per population, all on the same hourly grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRates {
    rates: Vec<RateFunction>,
}

impl PopulationRates {
    pub fn new(rates: Vec<RateFunction>) -> Result<Self, QueueError> {
        let first = rates
            .first()
            .ok_or_else(|| QueueError::InvalidConfig("no populations".into()))?;
        if rates
            .iter()
            .any(|r| r.origin != first.origin || r.hours() != first.hours())
        {
            return Err(QueueError::InvalidConfig(
                "population rates must share origin and length".into(),
            ));
        }
        Ok(PopulationRates { rates })
    }

    /// Splits a total rate into populations with per-hour shares.
    pub fn from_total(total: &RateFunction, shares: &[Vec<f64>]) -> Result<Self, QueueError> {
        let k = shares
            .first()
            .map(Vec::len)
            .ok_or_else(|| QueueError::InvalidConfig("empty share table".into()))?;
        if shares.len() != total.hours() {
            return Err(QueueError::InvalidConfig(format!(
                "{} share rows for {} rate slots",
                shares.len(),
                total.hours()
            )));
        }
        let rates = (0..k)
            .map(|j| {
                RateFunction::new(
                    total.origin(),
                    total
                        .hourly_rates()
                        .iter()
                        .zip(shares)
                        .map(|(m, s)| m * s[j])
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rates)
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn get(&self, i: usize) -> &RateFunction {
        &self.rates[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &RateFunction> {
        self.rates.iter()
    }

    pub fn origin(&self) -> f64 {
        self.rates[0].origin()
    }

    pub fn end(&self) -> f64 {
        self.rates[0].end()
    }

    pub fn total(&self) -> RateFunction {
        let n = self.rates[0].hours();
        let sums = (0..n)
            .map(|k| self.rates.iter().map(|r| r.hourly_rates()[k]).sum())
            .collect();
        RateFunction {
            origin: self.origin(),
            hourly_rates: sums,
        }
    }

    pub fn padded_front(&self, hours: usize) -> Self {
        PopulationRates {
            rates: self.rates.iter().map(|r| r.padded_front(hours)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(RateFunction::new(0.0, vec![1.0, -1.0]).is_err());
        assert!(RateFunction::new(0.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn slot_lookup_and_integral() {
        let r = RateFunction::new(3600.0, vec![5.0, 20.0]).unwrap();
        assert_eq!(r.rate_at(3599.0), None);
        assert_eq!(r.rate_at(3600.0), Some(5.0));
        assert_eq!(r.rate_at(7200.0), Some(20.0));
        assert_eq!(r.rate_at(10800.0), None);
        assert!((r.cumulative(r.end()) - 25.0).abs() < 1e-12);
        // half of each slot
        assert!((r.integrated(5400.0, 9000.0) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn padding_keeps_integral() {
        let r = RateFunction::new(0.0, vec![3.0, 4.0]).unwrap();
        let p = r.padded_front(3);
        assert_eq!(p.origin(), -3.0 * HOUR);
        assert_eq!(p.rate_at(-1.0), Some(0.0));
        assert!((p.cumulative(p.end()) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn population_total_and_split() {
        let total = RateFunction::new(0.0, vec![10.0, 20.0]).unwrap();
        let shares = vec![vec![0.5, 0.5], vec![0.25, 0.75]];
        let pops = PopulationRates::from_total(&total, &shares).unwrap();
        assert_eq!(pops.get(1).hourly_rates(), &[5.0, 15.0]);
        assert_eq!(pops.total(), total);
    }
}

use serde::{Deserialize, Serialize};

use super::{HourlySeries, SeasonalError};
use crate::eventlog::StayRecord;
use crate::queue::{EmpiricalCdf, HOUR};

/// Knot budget per component CDF.
pub const MAX_KNOTS: usize = 512;

/// Service-time classes by half-open duration intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationPartition {
    /// Class boundaries in minutes, strictly increasing and positive.
    pub boundaries_min: Vec<f64>,
}

impl Default for PopulationPartition {
    fn default() -> Self {
        PopulationPartition {
            boundaries_min: vec![5.0, 25.0, 360.0],
        }
    }
}

impl PopulationPartition {
    pub fn new(boundaries_min: Vec<f64>) -> Result<Self, SeasonalError> {
        if boundaries_min.is_empty()
            || boundaries_min[0] <= 0.0
            || boundaries_min.windows(2).any(|w| w[0] >= w[1])
            || boundaries_min.iter().any(|b| !b.is_finite())
        {
            return Err(SeasonalError::InvalidInput(
                "boundaries must be positive and strictly increasing".into(),
            ));
        }
        Ok(PopulationPartition { boundaries_min })
    }

    pub fn classes(&self) -> usize {
        self.boundaries_min.len() + 1
    }

    pub fn labels(&self) -> Vec<String> {
        if self.classes() == 4 {
            return ["very-short", "short", "normal", "long"]
                .map(String::from)
                .to_vec();
        }
        (0..self.classes()).map(|i| format!("class-{i}")).collect()
    }

    /// `[lo, hi)` of class `i` in seconds; the last class is open above.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let b = &self.boundaries_min;
        let lo = if i == 0 { 0.0 } else { b[i - 1] * 60.0 };
        let hi = b.get(i).map_or(f64::INFINITY, |m| m * 60.0);
        (lo, hi)
    }

    /// 0-based class of a service time in seconds.
    pub fn classify(&self, service_time: f64) -> usize {
        self.boundaries_min
            .partition_point(|&m| m * 60.0 <= service_time)
    }
}

pub fn classify_stay(service_time: f64, partition: &PopulationPartition) -> usize {
    partition.classify(service_time)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCdfs {
    /// One entry per class; `None` for classes without stays.
    pub components: Vec<Option<EmpiricalCdf>>,
    pub counts: Vec<usize>,
    pub empty_classes: Vec<usize>,
}

impl ComponentCdfs {
    /// Components with empty classes replaced by a point mass at the class's
    /// lower edge (they then carry zero share in any fitted model).
    pub fn filled(&self, partition: &PopulationPartition) -> Vec<EmpiricalCdf> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.clone().unwrap_or_else(|| {
                    EmpiricalCdf::point_mass(partition.interval(i).0.max(1.0)).expect("finite")
                })
            })
            .collect()
    }
}

/// Empirical CDF of the service times in each class, supported on the class
/// interval. The open last class is capped at its largest observed stay.
pub fn empirical_component_cdfs(
    stays: &[StayRecord],
    partition: &PopulationPartition,
) -> ComponentCdfs {
    let k = partition.classes();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); k];
    for s in stays {
        samples[partition.classify(s.service_time)].push(s.service_time);
    }
    let mut components = Vec::with_capacity(k);
    let mut empty_classes = Vec::new();
    for (i, xs) in samples.iter().enumerate() {
        if xs.is_empty() {
            empty_classes.push(i);
            components.push(None);
            continue;
        }
        let (lo, hi) = partition.interval(i);
        let max = xs.iter().copied().fold(f64::MIN, f64::max);
        let hi = if hi.is_finite() { hi } else { max };
        components.push(Some(
            EmpiricalCdf::from_samples_compressed(xs, lo, hi, MAX_KNOTS)
                .expect("class samples are finite and inside the class interval"),
        ));
    }
    ComponentCdfs {
        components,
        counts: samples.iter().map(Vec::len).collect(),
        empty_classes,
    }
}

/// Hourly arrival counts per class and the realized class shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub counts: Vec<HourlySeries>,
    /// Shares per hour; all zero on hours listed in `empty_hours`.
    pub shares: Vec<Vec<f64>>,
    pub empty_hours: Vec<usize>,
}

impl PopulationSeries {
    pub fn total(&self) -> HourlySeries {
        let first = &self.counts[0];
        let values = (0..first.len())
            .map(|k| self.counts.iter().map(|c| c.values[k]).sum())
            .collect();
        HourlySeries::new(first.origin, first.utc_offset_hours, values)
    }
}

/// Counts class-`i` arrivals in each hour of `[origin, origin + hours)`.
pub fn hourly_population_series(
    stays: &[StayRecord],
    partition: &PopulationPartition,
    origin: f64,
    hours: usize,
    utc_offset_hours: f64,
) -> PopulationSeries {
    let k = partition.classes();
    let mut counts = vec![vec![0.0; hours]; k];
    for s in stays {
        let h = ((s.arrival_time - origin) / HOUR).floor();
        if h >= 0.0 && (h as usize) < hours {
            counts[partition.classify(s.service_time)][h as usize] += 1.0;
        }
    }
    let mut shares = Vec::with_capacity(hours);
    let mut empty_hours = Vec::new();
    for h in 0..hours {
        let total: f64 = counts.iter().map(|c| c[h]).sum();
        if total > 0.0 {
            shares.push(counts.iter().map(|c| c[h] / total).collect());
        } else {
            empty_hours.push(h);
            shares.push(vec![0.0; k]);
        }
    }
    PopulationSeries {
        counts: counts
            .into_iter()
            .map(|v| HourlySeries::new(origin, utc_offset_hours, v))
            .collect(),
        shares,
        empty_hours,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stay(a: f64, minutes: f64) -> StayRecord {
        StayRecord::new("s", a, a + minutes * 60.0)
    }

    #[test]
    fn classify_boundaries() {
        let p = PopulationPartition::default();
        assert_eq!(p.classify(4.0 * 60.0), 0);
        assert_eq!(p.classify(30.0 * 60.0), 2);
        assert_eq!(p.classify(25.0 * 60.0), 2);
        assert_eq!(p.classify(5.0 * 60.0), 1);
        assert_eq!(p.classify(7.0 * 3600.0), 3);
    }

    #[test]
    fn rejects_bad_boundaries() {
        assert!(PopulationPartition::new(vec![5.0, 5.0]).is_err());
        assert!(PopulationPartition::new(vec![0.0, 5.0]).is_err());
    }

    #[test]
    fn point_mass_class() {
        let stays: Vec<StayRecord> = (0..5).map(|i| stay(i as f64 * 100.0, 10.0)).collect();
        let c = empirical_component_cdfs(&stays, &PopulationPartition::default());
        assert_eq!(c.empty_classes, vec![0, 2, 3]);
        let g = c.components[1].as_ref().unwrap();
        assert_eq!(g.cdf(599.0), 0.0);
        assert_eq!(g.cdf(600.0), 1.0);
    }

    #[test]
    fn class_cdf_unaffected_by_other_classes() {
        let base: Vec<StayRecord> = (0..20).map(|i| stay(0.0, 30.0 + i as f64)).collect();
        let mut more = base.clone();
        more.extend((0..50).map(|i| stay(0.0, 1.0 + i as f64 * 0.01)));
        let p = PopulationPartition::default();
        let a = empirical_component_cdfs(&base, &p);
        let b = empirical_component_cdfs(&more, &p);
        assert_eq!(a.components[2], b.components[2]);
    }

    #[test]
    fn long_class_capped_at_max() {
        let stays = vec![stay(0.0, 400.0), stay(0.0, 900.0)];
        let c = empirical_component_cdfs(&stays, &PopulationPartition::default());
        assert_eq!(c.components[3].as_ref().unwrap().support(), (360.0 * 60.0, 900.0 * 60.0));
    }

    #[test]
    fn shares_and_empty_hours() {
        let stays = vec![stay(100.0, 30.0), stay(2.0 * HOUR + 5.0, 2.0), stay(2.0 * HOUR + 9.0, 8.0)];
        let s = hourly_population_series(&stays, &PopulationPartition::default(), 0.0, 3, 0.0);
        assert_eq!(s.shares[0], vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.empty_hours, vec![1]);
        assert_eq!(s.shares[2], vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(s.total().values, vec![1.0, 0.0, 2.0]);
    }
}

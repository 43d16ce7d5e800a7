use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use ordered_float::OrderedFloat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sample_nhpp, PopulationRates, QueueError, ServiceMixture, ShareTable, ShareSource};
use crate::eventlog::{EventKind, EventLog, ParkingEvent, Span, StayRecord};
#[cfg(test)]
use crate::eventlog::stays_from_log;

/// Simulator input. With one rate per mixture component each population is
/// simulated from its own intensity; with a single rate the population of
/// every arrival is drawn from the mixture's share table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_location")]
    pub location_id: String,
    pub rates: PopulationRates,
    pub mixture: ServiceMixture,
    /// Seconds after the rates' origin.
    pub horizon: f64,
    pub seed: u64,
}

fn default_location() -> String {
    "sim".to_string()
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), QueueError> {
        if !(self.horizon > 0.0) {
            return Err(QueueError::InvalidConfig("horizon must be positive".into()));
        }
        if self.horizon > self.rates.end() - self.rates.origin() + 1e-6 {
            return Err(QueueError::InvalidConfig(
                "horizon extends past the rate definition".into(),
            ));
        }
        let k = self.mixture.components().len();
        match self.rates.len() {
            1 => {
                let shares = self.mixture.shares();
                let need_end = self.rates.origin() + self.horizon;
                if shares.populations() != k
                    || shares.origin() > self.rates.origin()
                    || shares.origin() + shares.hours() as f64 * super::HOUR < need_end - 1e-6
                {
                    return Err(QueueError::InvalidConfig(
                        "a single total rate needs a share table covering the horizon".into(),
                    ));
                }
            }
            n if n == k => {}
            n => {
                return Err(QueueError::InvalidConfig(format!(
                    "{n} rate functions for {k} mixture components"
                )))
            }
        }
        Ok(())
    }

    pub fn start(&self) -> f64 {
        self.rates.origin()
    }

    pub fn end(&self) -> f64 {
        self.rates.origin() + self.horizon
    }

    /// Per-population rates implied by this config (splitting a single total
    /// rate with the share table when needed).
    pub fn population_rates(&self) -> Result<PopulationRates, QueueError> {
        if self.rates.len() == self.mixture.components().len() {
            return Ok(self.rates.clone());
        }
        let total = self.rates.get(0);
        let rows = (0..total.hours())
            .map(|h| {
                let t = total.origin() + (h as f64 + 0.5) * super::HOUR;
                self.mixture
                    .shares()
                    .at(t)
                    .map(<[f64]>::to_vec)
                    .unwrap_or_else(|| vec![0.0; self.mixture.components().len()])
            })
            .collect::<Vec<_>>();
        PopulationRates::from_total(total, &rows)
    }

    /// The same lot expressed as one total rate plus per-hour shares.
    pub fn as_joint(&self) -> Result<SimConfig, QueueError> {
        if self.rates.len() == 1 {
            return Ok(self.clone());
        }
        let total = self.rates.total();
        let k = self.rates.len();
        let rows = (0..total.hours())
            .map(|h| {
                let t = total.origin() + (h as f64 + 0.5) * super::HOUR;
                self.rates
                    .shares_at(t)
                    .unwrap_or_else(|| vec![1.0 / k as f64; k])
            })
            .collect();
        let shares = ShareTable::new(total.origin(), rows)?;
        Ok(SimConfig {
            rates: PopulationRates::new(vec![total])?,
            mixture: ServiceMixture::new(self.mixture.components().to_vec(), shares)?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedVehicle {
    pub arrival: f64,
    pub service: f64,
    pub population: usize,
}

impl SimulatedVehicle {
    pub fn departure(&self) -> f64 {
        self.arrival + self.service
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedLot {
    pub log: EventLog,
    /// Sorted by arrival time.
    pub vehicles: Vec<SimulatedVehicle>,
    /// Spot index of each vehicle; the spot id is `spot_name(spots[i])`.
    pub spots: Vec<usize>,
}

impl SimulatedLot {
    pub fn stays(&self) -> Vec<StayRecord> {
        self.vehicles
            .iter()
            .zip(&self.spots)
            .filter(|(v, _)| v.service > 0.0)
            .map(|(v, &k)| StayRecord::new(&spot_name(k), v.arrival, v.departure()))
            .collect()
    }
}

pub fn spot_name(i: usize) -> String {
    format!("s{i:05}")
}

/// Headroom of the simulated spot pool over the peak occupancy.
const SPOT_HEADROOM: f64 = 1.25;

/// Assigns spots from a pool a quarter larger than the peak occupancy, the
/// longest-free spot first. The lot is never full, so the infinite-server
/// model still holds.
fn assign_spots(vehicles: &[SimulatedVehicle]) -> Vec<usize> {
    let mut ends: BinaryHeap<Reverse<(OrderedFloat<f64>, usize)>> = BinaryHeap::new();
    let mut peak = 0;
    for v in vehicles {
        while ends.peek().is_some_and(|Reverse((d, _))| d.0 <= v.arrival) {
            ends.pop();
        }
        ends.push(Reverse((OrderedFloat(v.departure()), 0)));
        peak = peak.max(ends.len());
    }
    let pool = (peak as f64 * SPOT_HEADROOM).ceil() as usize + 1;
    let mut free: VecDeque<usize> = (0..pool).collect();
    let mut busy: BinaryHeap<Reverse<(OrderedFloat<f64>, usize)>> = BinaryHeap::new();
    vehicles
        .iter()
        .map(|v| {
            while let Some(&Reverse((d, k))) = busy.peek() {
                if d.0 > v.arrival {
                    break;
                }
                busy.pop();
                free.push_back(k);
            }
            let k = free.pop_front().expect("pool exceeds the peak occupancy");
            busy.push(Reverse((OrderedFloat(v.departure()), k)));
            k
        })
        .collect()
}

/// Simulates the M(t)/G(t)/∞ lot. Departures past the horizon are still
/// emitted, so every spot's log alternates.
pub fn simulate_lot(cfg: &SimConfig) -> Result<SimulatedLot, QueueError> {
    cfg.validate()?;
    let comps = cfg.mixture.components();
    let mut vehicles = Vec::new();
    if cfg.rates.len() == comps.len() {
        for (j, rate) in cfg.rates.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(j as u64 + 1);
            for t in sample_nhpp(rate, cfg.horizon, &mut rng) {
                let s = comps[j].quantile(rand::Rng::random::<f64>(&mut rng));
                vehicles.push(SimulatedVehicle {
                    arrival: t,
                    service: s,
                    population: j,
                });
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for t in sample_nhpp(cfg.rates.get(0), cfg.horizon, &mut rng) {
            let (j, s) = cfg.mixture.sample_service(t, &mut rng)?;
            vehicles.push(SimulatedVehicle {
                arrival: t,
                service: s,
                population: j,
            });
        }
    }
    vehicles.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));

    let spots = assign_spots(&vehicles);
    let mut events = Vec::with_capacity(2 * vehicles.len());
    for (v, &k) in vehicles.iter().zip(&spots) {
        let spot = spot_name(k);
        events.push(ParkingEvent::new(&cfg.location_id, &spot, v.arrival, EventKind::Arrival));
        events.push(ParkingEvent::new(
            &cfg.location_id,
            &spot,
            v.departure(),
            EventKind::Departure,
        ));
    }
    let log = EventLog::with_span(
        events,
        Span {
            start: cfg.start(),
            end: cfg.end(),
        },
    );
    Ok(SimulatedLot {
        log,
        vehicles,
        spots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue::{EmpiricalCdf, RateFunction, HOUR};
    use crate::verify::max_occupancy_check;

    fn config(rate: f64, seed: u64) -> SimConfig {
        let g = EmpiricalCdf::uniform(60.0, 4.0 * HOUR).unwrap();
        SimConfig {
            location_id: "L".into(),
            rates: PopulationRates::new(vec![RateFunction::constant(0.0, rate, 48).unwrap()]).unwrap(),
            mixture: ServiceMixture::new(vec![g], ShareTable::constant(0.0, vec![1.0], 48).unwrap())
                .unwrap(),
            horizon: 48.0 * HOUR,
            seed,
        }
    }

    #[test]
    fn spots_are_never_double_booked() {
        let lot = simulate_lot(&config(40.0, 1)).unwrap();
        let mut last_departure: Vec<f64> = vec![f64::NEG_INFINITY; lot.spots.iter().max().unwrap() + 1];
        for (v, &k) in lot.vehicles.iter().zip(&lot.spots) {
            assert!(last_departure[k] <= v.arrival);
            last_departure[k] = v.departure();
        }
        let stays = stays_from_log(&lot.log).unwrap();
        assert_eq!(stays.len(), lot.vehicles.len());
        let check = max_occupancy_check(&lot.log, lot.log.spot_count()).unwrap();
        assert!(!check.ever_full);
        assert!(lot.log.spot_count() < lot.vehicles.len() / 5);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate_lot(&config(10.0, 4)).unwrap();
        let b = simulate_lot(&config(10.0, 4)).unwrap();
        let c = simulate_lot(&config(10.0, 5)).unwrap();
        assert_eq!(a.log, b.log);
        assert_ne!(a.log, c.log);
    }

    #[test]
    fn zero_rate_gives_empty_log() {
        let lot = simulate_lot(&config(0.0, 1)).unwrap();
        assert!(lot.log.is_empty() && lot.spots.is_empty());
    }
}

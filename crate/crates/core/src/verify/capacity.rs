use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::eventlog::{stays_from_log, EventLog, OccupancyCounter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxOccupancy {
    pub max_occupancy: u32,
    pub capacity: usize,
    pub max_ratio: f64,
    pub ever_full: bool,
}

/// Peak occupancy relative to the number of spots.
pub fn max_occupancy_check(log: &EventLog, capacity: usize) -> Result<MaxOccupancy, VerifyError> {
    if capacity == 0 {
        return Err(VerifyError::InvalidInput("capacity must be at least 1".into()));
    }
    let stays = stays_from_log(log)?;
    let max_occupancy = OccupancyCounter::new(&stays).max();
    let max_ratio = max_occupancy as f64 / capacity as f64;
    Ok(MaxOccupancy {
        max_occupancy,
        capacity,
        max_ratio,
        ever_full: max_ratio >= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::{EventKind, ParkingEvent};

    fn stay(spot: &str, a: f64, d: f64) -> [ParkingEvent; 2] {
        [
            ParkingEvent::new("L", spot, a, EventKind::Arrival),
            ParkingEvent::new("L", spot, d, EventKind::Departure),
        ]
    }

    #[test]
    fn empty_log() {
        let r = max_occupancy_check(&EventLog::new(vec![]), 4).unwrap();
        assert_eq!(r.max_ratio, 0.0);
        assert!(!r.ever_full);
    }

    #[test]
    fn three_overlapping() {
        let events = [stay("a", 0.0, 10.0), stay("b", 2.0, 12.0), stay("c", 4.0, 8.0)].concat();
        let r = max_occupancy_check(&EventLog::new(events), 5).unwrap();
        assert_eq!(r.max_occupancy, 3);
        assert!((r.max_ratio - 0.6).abs() < 1e-12);
    }

    #[test]
    fn full_lot_flagged() {
        let events = [stay("a", 0.0, 10.0), stay("b", 2.0, 12.0)].concat();
        assert!(max_occupancy_check(&EventLog::new(events), 2).unwrap().ever_full);
    }
}

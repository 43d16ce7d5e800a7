use serde::{Deserialize, Serialize};

use crate::queue::HOUR;

pub const WEEK_HOURS: usize = 168;

/// Local weekday (0 = Monday) and hour of day for an epoch timestamp under
/// a fixed UTC offset.
pub fn calendar_cell(t: f64, utc_offset_hours: f64) -> (usize, usize) {
    let local_hours = ((t / HOUR) + utc_offset_hours).floor() as i64;
    let day = local_hours.div_euclid(24);
    // 1970-01-01 was a Thursday
    let weekday = (day + 3).rem_euclid(7) as usize;
    let hour = local_hours.rem_euclid(24) as usize;
    (weekday, hour)
}

/// Index of a (weekday, hour) cell in `0..168`.
pub fn cell_index(weekday: usize, hour: usize) -> usize {
    weekday * 24 + hour
}

/// Start of the local hour containing `t`, in epoch seconds.
pub fn floor_to_hour(t: f64, utc_offset_hours: f64) -> f64 {
    let off = utc_offset_hours * HOUR;
    ((t + off) / HOUR).floor() * HOUR - off
}

/// One value per contiguous local hour starting at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    pub origin: f64,
    pub utc_offset_hours: f64,
    pub values: Vec<f64>,
}

impl HourlySeries {
    pub fn new(origin: f64, utc_offset_hours: f64, values: Vec<f64>) -> Self {
        HourlySeries {
            origin,
            utc_offset_hours,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.origin + k as f64 * HOUR
    }

    pub fn end(&self) -> f64 {
        self.time_at(self.len())
    }

    /// Calendar tags (d, h) of hour `k`.
    pub fn cell(&self, k: usize) -> (usize, usize) {
        calendar_cell(self.time_at(k) + 1.0, self.utc_offset_hours)
    }

    /// Hours `[from, to)` as a new series.
    pub fn slice(&self, from: usize, to: usize) -> HourlySeries {
        HourlySeries {
            origin: self.time_at(from),
            utc_offset_hours: self.utc_offset_hours,
            values: self.values[from..to].to_vec(),
        }
    }

    /// The hours strictly before `t` (whole hours only).
    pub fn until(&self, t: f64) -> HourlySeries {
        let k = (((t - self.origin) / HOUR).floor().max(0.0) as usize).min(self.len());
        self.slice(0, k)
    }
}

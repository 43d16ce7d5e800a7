use serde::{Deserialize, Serialize};

use super::ForecastError;
use crate::queue::HOUR;
use crate::seasonal::{calendar_cell, cell_index, HourlySeries, WEEK_HOURS};

/// Minimum one-hour transitions per (weekday, hour) cell.
pub const MIN_TRANSITIONS: usize = 10;

/// Relaxation N(t+Δt) = e^{-rΔt}(N(t) - c) + c for one cell. In M/M/∞
/// terms μ = r and λ = c·r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmcCell {
    /// Per hour.
    pub r: f64,
    pub c: f64,
    pub transitions: usize,
    /// The cell's own fit failed; parameters come from the pooled hour or
    /// the nearest fitted cell.
    pub filled: bool,
}

impl MmcCell {
    pub fn lambda(&self) -> f64 {
        self.c * self.r
    }

    pub fn mu(&self) -> f64 {
        self.r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmcParams {
    /// 168 cells indexed by `weekday * 24 + hour`.
    pub cells: Vec<MmcCell>,
    pub utc_offset_hours: f64,
}

impl MmcParams {
    pub fn cell_at(&self, t: f64) -> &MmcCell {
        let (d, h) = calendar_cell(t, self.utc_offset_hours);
        &self.cells[cell_index(d, h)]
    }
}

/// Fits (r, c) per cell from one-hour transitions of the occupancy
/// snapshots, grouped by the cell of the starting hour.
///
/// The relaxation is linear in N(t), N(t+1h) = a N(t) + b, so the fit is an
/// ordinary least-squares line with r = -ln a and c = b / (1 - a). A cell with
/// too few transitions or a slope outside (0, 1) is refitted on the same hour
/// pooled over all weekdays, and failing that copied from the nearest fitted
/// hour of the same weekday (then of any weekday).
pub fn mmc_fit(series: &HourlySeries) -> Result<MmcParams, ForecastError> {
    let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); WEEK_HOURS];
    for k in 0..series.len().saturating_sub(1) {
        let (d, h) = series.cell(k);
        groups[cell_index(d, h)].push((series.values[k], series.values[k + 1]));
    }
    let pooled: Vec<Option<MmcCell>> = (0..24)
        .map(|h| {
            let all: Vec<(f64, f64)> = (0..7).flat_map(|d| groups[cell_index(d, h)].clone()).collect();
            fit_cell(&all)
        })
        .collect();
    let mut cells: Vec<Option<MmcCell>> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            fit_cell(g).or_else(|| {
                pooled[i % 24].map(|mut c| {
                    c.filled = true;
                    c.transitions = g.len();
                    c
                })
            })
        })
        .collect();
    if cells.iter().all(Option::is_none) {
        return Err(ForecastError::InvalidInput(
            "no cell has enough one-hour transitions".into(),
        ));
    }
    let fitted = cells.clone();
    for (i, cell) in cells.iter_mut().enumerate() {
        if cell.is_some() {
            continue;
        }
        let (d, h) = (i / 24, i % 24);
        let same_day = (1..24).find_map(|off| {
            [(h + 24 - off) % 24, (h + off) % 24]
                .into_iter()
                .find_map(|hh| fitted[cell_index(d, hh)])
        });
        let any = || {
            (1..WEEK_HOURS).find_map(|off| fitted[(i + off) % WEEK_HOURS])
        };
        let mut c = same_day.or_else(any).expect("at least one fitted cell");
        c.filled = true;
        c.transitions = groups[i].len();
        *cell = Some(c);
    }
    Ok(MmcParams {
        cells: cells.into_iter().map(|c| c.expect("filled")).collect(),
        utc_offset_hours: series.utc_offset_hours,
    })
}

fn fit_cell(pairs: &[(f64, f64)]) -> Option<MmcCell> {
    let n = pairs.len();
    if n < MIN_TRANSITIONS {
        return None;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-12 * (1.0 + mx * mx) {
        // no spread in N(t): only the level is identified
        return Some(MmcCell {
            r: 1.0,
            c: my.max(0.0),
            transitions: n,
            filled: false,
        });
    }
    let a = sxy / sxx;
    if !(a > 0.0 && a < 1.0) {
        return None;
    }
    let b = my - a * mx;
    Some(MmcCell {
        r: -a.ln(),
        c: (b / (1.0 - a)).max(0.0),
        transitions: n,
        filled: false,
    })
}

/// Iterates the relaxation one hour at a time from `n0` at `t`, switching
/// cells at each step; a final partial hour uses the fractional step.
pub fn mmc_forecast(n0: f64, t: f64, dt: f64, params: &MmcParams) -> f64 {
    let mut n = n0;
    let mut now = t;
    let mut left = dt;
    while left > 0.0 {
        let step = left.min(HOUR);
        let cell = params.cell_at(now);
        n = (-cell.r * step / HOUR).exp() * (n - cell.c) + cell.c;
        now += step;
        left -= step;
    }
    n
}

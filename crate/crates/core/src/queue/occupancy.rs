use super::{EmpiricalCdf, PopulationRates, QueueError, RateFunction, HOUR};

/// ∫_0^window M(t - s) (1 - G(s)) ds for one population.
///
/// M is constant on hour slots and 1 - G is piecewise linear, so summing
/// slot rate times the exact survival integral over each slot is exact.
pub fn survival_weighted_arrivals(
    rate: &RateFunction,
    g: &EmpiricalCdf,
    t: f64,
    window: f64,
) -> Result<f64, QueueError> {
    if window <= 0.0 {
        return Ok(0.0);
    }
    if !rate.covers(t - window, t) {
        return Err(QueueError::UndefinedHistory { t: t - window });
    }
    let first = rate.slot((t - window).max(rate.origin())).unwrap_or(0);
    let mut total = 0.0;
    for k in first..rate.hours() {
        let slot_start = rate.origin() + k as f64 * HOUR;
        if slot_start >= t {
            break;
        }
        let r = rate.hourly_rates()[k];
        if r == 0.0 {
            continue;
        }
        // slot [a, b) in absolute time maps to lags s in (t - b, t - a]
        let s_hi = (t - slot_start).min(window);
        let s_lo = (t - slot_start - HOUR).max(0.0);
        if s_hi > s_lo {
            total += r / HOUR * (g.survival_integral(s_hi) - g.survival_integral(s_lo));
        }
    }
    Ok(total)
}

/// μ_N(t) = Σ_i ∫_0^∞ M_i(t - s)(1 - G_i(s)) ds, the mean of the Poisson
/// occupancy at `t`. The integral is truncated at each component's largest
/// service time, so the rates must be defined that far back.
pub fn expected_occupancy(
    rates: &PopulationRates,
    components: &[EmpiricalCdf],
    t: f64,
) -> Result<f64, QueueError> {
    if rates.len() != components.len() {
        return Err(QueueError::InvalidConfig(format!(
            "{} rate functions for {} components",
            rates.len(),
            components.len()
        )));
    }
    rates
        .iter()
        .zip(components)
        .map(|(m, g)| survival_weighted_arrivals(m, g, t, g.max_value()))
        .sum()
}

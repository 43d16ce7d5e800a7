use serde::{Deserialize, Serialize};

use super::{ForecastDistribution, ForecastError, ForecastParts, SigmaPredTable};
use crate::eventlog::StayRecord;
use crate::queue::{survival_weighted_arrivals, EmpiricalCdf, PopulationRates, ShareSource};

/// Q(t): arrival times of the vehicles parked at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotState {
    pub t: f64,
    pub arrivals: Vec<f64>,
}

impl LotState {
    pub fn new(t: f64, mut arrivals: Vec<f64>) -> Result<Self, ForecastError> {
        if arrivals.iter().any(|&a| !(a <= t)) {
            return Err(ForecastError::InvalidInput(
                "parked vehicle arrives after the state time".into(),
            ));
        }
        arrivals.sort_by(f64::total_cmp);
        Ok(LotState { t, arrivals })
    }

    /// Vehicles with `arrival <= t < departure`.
    pub fn from_stays(stays: &[StayRecord], t: f64) -> Self {
        let arrivals = stays
            .iter()
            .filter(|s| s.parked_at(t))
            .map(|s| s.arrival_time)
            .collect();
        LotState::new(t, arrivals).expect("parked vehicles arrived before t")
    }

    pub fn occupancy(&self) -> usize {
        self.arrivals.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalProb {
    pub p: f64,
    /// The vehicle is older than every component with positive share.
    pub zero_denominator: bool,
}

/// P(vehicle still parked at t + Δt | parked at t, arrived at τ):
/// Σ_j S_j(t+Δt-τ) λ_j / Σ_k S_k(t-τ) λ_k with S = 1 - G.
pub fn survival_prob(
    tau: f64,
    t: f64,
    dt: f64,
    shares: &[f64],
    components: &[EmpiricalCdf],
) -> SurvivalProb {
    if dt <= 0.0 {
        return SurvivalProb {
            p: 1.0,
            zero_denominator: false,
        };
    }
    let age = t - tau;
    let (mut num, mut den) = (0.0, 0.0);
    for (l, g) in shares.iter().zip(components) {
        if *l > 0.0 {
            num += l * g.survival(age + dt);
            den += l * g.survival(age);
        }
    }
    if den <= 0.0 {
        return SurvivalProb {
            p: 0.0,
            zero_denominator: true,
        };
    }
    SurvivalProb {
        p: (num / den).clamp(0.0, 1.0),
        zero_denominator: false,
    }
}

/// Model inputs for the microscopic forecast: component service
/// distributions, the share source used for parked vehicles, and arrival
/// rate paths covering the forecast window.
pub struct MicroInputs<'a> {
    pub components: &'a [EmpiricalCdf],
    pub shares: &'a dyn ShareSource,
    pub rates: &'a PopulationRates,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Remaining {
    pub mean: f64,
    pub var: f64,
    pub flagged: usize,
}

/// Bernoulli sum over parked vehicles: E = Σ p_i, Var = Σ p_i (1 - p_i).
pub fn expected_remaining(
    state: &LotState,
    components: &[EmpiricalCdf],
    shares: &dyn ShareSource,
    dt: f64,
) -> Remaining {
    let mut out = Remaining::default();
    for &tau in &state.arrivals {
        let lam = shares
            .shares_at(tau)
            .unwrap_or_else(|| vec![1.0 / components.len() as f64; components.len()]);
        let s = survival_prob(tau, state.t, dt, &lam, components);
        out.mean += s.p;
        out.var += s.p * (1.0 - s.p);
        out.flagged += s.zero_denominator as usize;
    }
    out
}

/// Poisson count of vehicles arriving in (t, t+Δt] and still parked at
/// t+Δt; returns (mean, variance), which coincide.
pub fn expected_new(
    rates: &PopulationRates,
    components: &[EmpiricalCdf],
    t: f64,
    dt: f64,
) -> Result<(f64, f64), ForecastError> {
    if dt <= 0.0 {
        return Ok((0.0, 0.0));
    }
    if rates.len() != components.len() {
        return Err(ForecastError::InvalidInput(format!(
            "{} rate paths for {} components",
            rates.len(),
            components.len()
        )));
    }
    let mut mean = 0.0;
    for (m, g) in rates.iter().zip(components) {
        mean += survival_weighted_arrivals(m, g, t + dt, dt)?;
    }
    Ok((mean, mean))
}

/// Var_LB = Σ_i p_i (1 - p_i) + E[N_n].
pub fn var_lower_bound(state: &LotState, inputs: &MicroInputs, dt: f64) -> Result<f64, ForecastError> {
    let r = expected_remaining(state, inputs.components, inputs.shares, dt);
    let (_, var_new) = expected_new(inputs.rates, inputs.components, state.t, dt)?;
    Ok(r.var + var_new)
}

pub fn micro_forecast(
    state: &LotState,
    inputs: &MicroInputs,
    dt: f64,
    sigma: &SigmaPredTable,
) -> Result<ForecastDistribution, ForecastError> {
    let r = expected_remaining(state, inputs.components, inputs.shares, dt);
    let (mean_new, var_new) = expected_new(inputs.rates, inputs.components, state.t, dt)?;
    let parts = ForecastParts {
        mean_remaining: r.mean,
        mean_new,
        var_remaining: r.var,
        var_new,
    };
    let mut f = ForecastDistribution::new(dt, r.mean + mean_new, r.var + var_new, sigma.at(dt), parts);
    f.flagged_vehicles = r.flagged;
    Ok(f)
}

/// The microscopic forecast with known arrival rates in place of forecasts.
pub fn perfect_arrival_micro_forecast(
    state: &LotState,
    components: &[EmpiricalCdf],
    shares: &dyn ShareSource,
    true_rates: &PopulationRates,
    dt: f64,
    sigma: &SigmaPredTable,
) -> Result<ForecastDistribution, ForecastError> {
    micro_forecast(
        state,
        &MicroInputs {
            components,
            shares,
            rates: true_rates,
        },
        dt,
        sigma,
    )
}

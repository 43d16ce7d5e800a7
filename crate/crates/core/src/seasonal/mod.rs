//! Arrival-side analysis: population decomposition by service time,
//! ACF/PACF diagnostics, the weekday × hour fixed-effects model and the
//! SARIMA(1,0,0)×(0,1,1)₂₄ residual model.

mod acf;
mod calendar;
mod effects;
mod model;
mod partition;
mod sarima;

pub use acf::{acf, acf_pacf, pacf_from_acf};
pub use calendar::{calendar_cell, cell_index, floor_to_hour, HourlySeries, WEEK_HOURS};
pub use effects::{fit_fixed_effects, residual_series, FixedEffects};
pub use model::{forecast_arrival_rate, SeasonalArrivalModel, SeriesModel, TrainingSpan};
pub use partition::{
    classify_stay, empirical_component_cdfs, hourly_population_series, ComponentCdfs,
    PopulationPartition, PopulationSeries, MAX_KNOTS,
};
pub use sarima::{
    fit_sarima, fit_sarima_with, forecast_sarima, sarima_residuals, seasonal_difference,
    seasonal_random_walk_aic, simulate_sarima, FitOptions, SarimaFit, SarimaModel, StepForecast,
    SEASON, THETA_CAP,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeasonalError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("optimizer did not converge after {iterations} iterations: {detail}")]
    NonConvergence { iterations: u64, detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

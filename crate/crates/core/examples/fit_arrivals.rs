//! Fits the weekday x hour arrival model of each population and forecasts
//! the next day's arrival rates.
//!
//! cargo run --release --example fit_arrivals

use parkq::scenario::Scenario;
use parkq::seasonal::{
    acf_pacf, forecast_arrival_rate, residual_series, PopulationPartition, SeasonalArrivalModel,
    WEEK_HOURS,
};
use parkq::HOUR;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weeks = 6;
    let scenario = Scenario::four_population(80.0, weeks, 11)?;
    let partition = PopulationPartition::default();
    let run = scenario.run(&partition)?;
    let stays = run.lot.stays();

    let hours = (weeks - 1) * WEEK_HOURS;
    let (model, series) = SeasonalArrivalModel::fit(&stays, &partition, scenario.start, hours, 0.0)?;
    for (label, (pop, counts)) in partition.labels().iter().zip(model.populations.iter().zip(&series.counts)) {
        let resid = residual_series(counts, &pop.effects);
        let (acf, _) = acf_pacf(&resid.values, 24)?;
        println!(
            "{label:<14} Monday 08:00 mean {:6.2}/h  phi {:+.3}  Theta {:+.3}  sigma2 {:.2}  acf(24) {:+.3}",
            pop.effects.mean(0, 8),
            pop.sarima.phi,
            pop.sarima.theta,
            pop.sarima.sigma2,
            acf[24],
        );
    }

    // forecast the first day of the held-out week from the observed counts
    let history: Vec<_> = series.counts.clone();
    let rates = forecast_arrival_rate(&model, &history, 24)?;
    let truth = run.truth.class_rates(partition.classes())?;
    println!("\n{:>5} {:>10} {:>10}", "hour", "forecast", "true");
    for h in (0..24).step_by(3) {
        let t = scenario.start + (hours + h) as f64 * HOUR + 1.0;
        let f: f64 = rates.iter().map(|r| r.rate_at(t).unwrap_or(0.0)).sum();
        let tr: f64 = truth.iter().map(|r| r.rate_at(t).unwrap_or(0.0)).sum();
        println!("{h:>5} {f:>10.1} {tr:>10.1}");
    }
    Ok(())
}

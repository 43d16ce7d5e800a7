//! Microscopic occupancy forecast from the lot's current state, with the
//! intrinsic variance split into parked and new vehicles.
//!
//! cargo run --release --example micro_forecast

use parkq::eventlog::OccupancyCounter;
use parkq::forecast::{
    micro_forecast, population_history, LotState, MicroInputs, SigmaPredTable, DEFAULT_HORIZONS,
};
use parkq::queue::ShareSource;
use parkq::scenario::Scenario;
use parkq::seasonal::{
    forecast_arrival_rate, hourly_population_series, PopulationPartition, SeasonalArrivalModel,
    WEEK_HOURS,
};
use parkq::HOUR;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::four_population(60.0, 5, 8)?;
    let partition = PopulationPartition::default();
    let run = scenario.run(&partition)?;
    let stays = run.lot.stays();

    let train = 4 * WEEK_HOURS;
    let (model, _) = SeasonalArrivalModel::fit(&stays, &partition, scenario.start, train, 0.0)?;

    // Tuesday 09:20 of the fifth week
    let t = scenario.start + (train + 24 + 9) as f64 * HOUR + 1200.0;
    let state = LotState::from_stays(&stays, t);
    let parked: Vec<_> = stays.iter().filter(|s| s.parked_at(t)).cloned().collect();
    let hours = ((t - scenario.start) / HOUR).ceil() as usize;
    let complete = hourly_population_series(&stays, &partition, scenario.start, hours, 0.0);
    let history = population_history(&complete, &parked, &model, t);
    let rates = forecast_arrival_rate(&model, &history, 30)?;
    let inputs = MicroInputs {
        components: &model.components,
        shares: &model as &dyn ShareSource,
        rates: &rates,
    };

    let counter = OccupancyCounter::new(&stays);
    println!("{} vehicles parked at t", state.occupancy());
    println!(
        "{:>7} {:>7} {:>7} {:>8} {:>8} {:>8}",
        "dt", "E[N_o]", "E[N_n]", "Var_o", "Var_n", "actual"
    );
    for dt in DEFAULT_HORIZONS {
        let f = micro_forecast(&state, &inputs, dt, &SigmaPredTable::zero())?;
        println!(
            "{dt:>7} {:>7.1} {:>7.1} {:>8.2} {:>8.2} {:>8}",
            f.parts.mean_remaining,
            f.parts.mean_new,
            f.parts.var_remaining,
            f.parts.var_new,
            counter.at(t + dt)
        );
    }
    Ok(())
}

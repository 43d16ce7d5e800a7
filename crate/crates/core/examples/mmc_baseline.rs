//! Fits the per-cell relaxation baseline on hourly occupancy snapshots and
//! forecasts a day ahead.
//!
//! cargo run --release --example mmc_baseline

use parkq::eventlog::OccupancyCounter;
use parkq::forecast::{mmc_fit, mmc_forecast, occupancy_snapshots};
use parkq::scenario::Scenario;
use parkq::seasonal::{PopulationPartition, WEEK_HOURS};
use parkq::HOUR;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::four_population(60.0, 7, 2)?;
    let run = scenario.run(&PopulationPartition::default())?;
    let stays = run.lot.stays();
    let origin = scenario.start + 24.0 * HOUR;
    let hours = 6 * WEEK_HOURS - 24;
    let params = mmc_fit(&occupancy_snapshots(&stays, origin, hours, 0.0))?;

    for h in [3, 9, 15, 21] {
        let c = &params.cells[h];
        println!(
            "Monday {h:02}:00  lambda {:6.1}/h  mu {:.3}/h  c {:6.1}{}",
            c.lambda(),
            c.mu(),
            c.c,
            if c.filled { "  (filled)" } else { "" }
        );
    }

    let counter = OccupancyCounter::new(&stays);
    let t = origin + hours as f64 * HOUR;
    let n0 = counter.at(t) as f64;
    println!("\nN(t) = {n0}");
    for dt in [1.0, 3.0, 6.0, 12.0, 24.0] {
        let f = mmc_forecast(n0, t, dt * HOUR, &params);
        println!("{dt:>4}h  forecast {f:6.1}  actual {}", counter.at(t + dt * HOUR));
    }
    Ok(())
}

//! Simulates one week of a lot and compares the realized occupancy with the
//! expected occupancy of the generating model.
//!
//! cargo run --release --example simulate_lot

use parkq::eventlog::OccupancyCounter;
use parkq::queue::expected_occupancy;
use parkq::scenario::Scenario;
use parkq::seasonal::PopulationPartition;
use parkq::HOUR;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::four_population(60.0, 1, 42)?;
    let run = scenario.run(&PopulationPartition::default())?;
    let stays = run.lot.stays();
    println!(
        "{} vehicles on {} spots",
        run.lot.vehicles.len(),
        run.lot.log.spot_count()
    );

    let counter = OccupancyCounter::new(&stays);
    println!("{:>6} {:>8} {:>8}", "hour", "N(t)", "mu_N(t)");
    // skip the first day: the lot starts empty
    for h in (24..168).step_by(12) {
        let t = scenario.start + h as f64 * HOUR;
        let mu = expected_occupancy(&run.truth.rates, &run.truth.components, t)?;
        println!("{h:>6} {:>8} {mu:>8.1}", counter.at(t));
    }
    Ok(())
}

//! Runs the assumption battery on simulated data and on a lot whose
//! arrivals come in bursts.
//!
//! cargo run --release --example verify_assumptions

use parkq::eventlog::{EventKind, EventLog, ParkingEvent};
use parkq::scenario::Scenario;
use parkq::seasonal::PopulationPartition;
use parkq::verify::{run_battery, BatteryConfig, BatteryReport};
use parkq::HOUR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn print(title: &str, r: &BatteryReport) {
    println!("{title}: {} stays in {} windows", r.stays, r.windows);
    println!(
        "  max occupancy {} of {} spots",
        r.max_occupancy.max_occupancy, r.max_occupancy.capacity
    );
    for (name, t) in r.tests() {
        println!(
            "  {name:<12} p = {:.4}  (mean window p {:.3}, n = {})",
            t.p_value,
            t.mean_window_p.unwrap_or(f64::NAN),
            t.n
        );
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = BatteryConfig::default();
    let run = Scenario::four_population(300.0, 2, 1)?.run(&PopulationPartition::default())?;
    print("simulated lot", &run_battery(&run.lot.log, &cfg)?);

    // arrivals in clumps of four a few seconds apart
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut i = 0;
    while t < 48.0 * HOUR {
        t += rng.random_range(0.0..120.0);
        for _ in 0..4 {
            let a = t + rng.random_range(0.0..5.0);
            let spot = format!("{i}");
            events.push(ParkingEvent::new("bursty", &spot, a, EventKind::Arrival));
            events.push(ParkingEvent::new("bursty", &spot, a + rng.random_range(600.0..7200.0), EventKind::Departure));
            i += 1;
        }
    }
    print("bursty lot", &run_battery(&EventLog::new(events), &cfg)?);
    Ok(())
}

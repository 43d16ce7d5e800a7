//! Repairs a sensor log with missing events and turns it into stays.
//!
//! cargo run --example repair_log

use parkq::eventlog::{
    filter_spots, parse_event_log, repair_log, stays_from_log, write_stays_csv,
};

const LOG: &str = "\
location_id,spot_id,timestamp,kind
garage,A1,1000,arrival
garage,A1,1600,arrival
garage,A1,2500,departure
garage,A2,900,departure
garage,A2,1200,arrival
garage,A2,4000,departure
garage,A2,4300,departure
garage,A3,3000,arrival
garage,A4,not-a-time,arrival
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let parsed = parse_event_log(LOG.as_bytes(), false)?;
    for r in &parsed.rejected {
        println!("rejected line {}: {}", r.line, r.reason);
    }

    let (repaired, report) = repair_log(&parsed.log);
    println!(
        "inserted {} events ({} at the span boundary)",
        report.inserted_events, report.boundary_insertions
    );
    for spot in &report.spots {
        for ins in &spot.inserted {
            println!("  {} {:?} at {}", spot.spot_id, ins.kind, ins.timestamp);
        }
    }
    // a second pass has nothing left to do
    assert_eq!(repair_log(&repaired).1.inserted_events, 0);

    let kept = filter_spots(&repaired, 2);
    println!("{} of {} spots have two or more stays", kept.spot_count(), repaired.spot_count());
    write_stays_csv(&stays_from_log(&kept)?, std::io::stdout())?;
    Ok(())
}

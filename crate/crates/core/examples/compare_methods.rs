//! Backtests every forecasting method on the benchmark scenario and prints
//! RMSE per horizon.
//!
//! cargo run --release --example compare_methods -- [seed]

use std::time::Instant;

use parkq::forecast::{evaluate, fit_models, run_backtest, BacktestConfig, Method, DEFAULT_HORIZONS};
use parkq::scenario::Scenario;
use parkq::seasonal::{PopulationPartition, WEEK_HOURS};
use parkq::HOUR;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(7), |s| s.parse())?;
    let clock = Instant::now();
    let train_weeks = 8;
    let test_weeks = 3;
    let scenario = Scenario::benchmark(train_weeks + test_weeks + 1, seed)?;
    let partition = PopulationPartition::default();
    let run = scenario.run(&partition)?;
    let stays = run.lot.stays();
    println!("{} stays simulated in {:.1?}", stays.len(), clock.elapsed());

    // skip the first day so the lot starts warm
    let origin = scenario.start + 24.0 * HOUR;
    let hours = train_weeks * WEEK_HOURS - 24;
    let models = fit_models(&stays, &partition, origin, hours, scenario.utc_offset_hours)?;
    println!("models fitted in {:.1?}", clock.elapsed());

    let cfg = BacktestConfig::hourly(
        origin + hours as f64 * HOUR,
        test_weeks * WEEK_HOURS,
        DEFAULT_HORIZONS.to_vec(),
        Method::ALL.to_vec(),
    );
    let records = run_backtest(&stays, &models, Some(&run.truth), &cfg)?;
    println!("backtest done in {:.1?}\n", clock.elapsed());

    println!("{:>14} {:>8} {:>8} {:>10} {:>8} {:>8}", "method", "horizon", "rmse", "sqrt(vlb)", "bias", "cov95");
    for s in evaluate(&records)? {
        println!(
            "{:>14} {:>8} {:>8.2} {:>10.2} {:>8.2} {:>8}",
            s.method.name(),
            s.horizon,
            s.rmse,
            s.mean_sqrt_var_lb,
            s.mean_error,
            s.coverage95.map_or("-".into(), |c| format!("{c:.3}")),
        );
    }
    Ok(())
}

//! End-to-end acceptance checks, one line per check.
//!
//! Runs with a custom harness so every PASS/FAIL line is printed; the
//! process fails if any check fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use parkq::eventlog::{repair_log, EventKind, EventLog, ParkingEvent, Span};
use parkq::forecast::{
    evaluate, fit_models, mmc_forecast, perfect_arrival_micro_forecast, run_backtest,
    survival_prob, BacktestConfig, BacktestRecord, HorizonSummary, LotState, Method, MmcCell,
    MmcParams, SigmaPredTable, DEFAULT_HORIZONS,
};
use parkq::queue::{expected_occupancy, simulate_lot, EmpiricalCdf};
use parkq::scenario::Scenario;
use parkq::seasonal::{fit_sarima, simulate_sarima, PopulationPartition, SarimaModel, WEEK_HOURS};
use parkq::stats::{
    ks_p_value, ks_statistic, mean, median, std_normal_cdf, uniform_cdf, variance,
};
use parkq::verify::{
    chi_square_independence, ks_cu, ks_lewis, pearson_independence, run_battery, ArrivalWindow,
    BatteryConfig,
};
use parkq::HOUR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

const LEVEL: f64 = 0.01;

type Outcome = (bool, String);

fn ks_uniform(p: &[f64]) -> f64 {
    ks_p_value(p.len(), ks_statistic(p, uniform_cdf))
}

fn null_pipeline() -> Outcome {
    const WINDOWS: usize = 500;
    let clock = Instant::now();
    let run = Scenario::four_population(400.0, 8, 11)
        .and_then(|s| s.run(&PopulationPartition::default()))
        .expect("scenario");
    let report = run_battery(&run.lot.log, &BatteryConfig::default()).expect("battery");
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, t) in report.tests() {
        let p: Vec<f64> = t.window_p_values.iter().copied().take(WINDOWS).collect();
        let uni = if p.len() == WINDOWS { ks_uniform(&p) } else { 0.0 };
        ok &= uni >= LEVEL;
        detail.push(format!(
            "{name}: n={} mean p={:.2} uniformity p={uni:.3}",
            p.len(),
            mean(&p)
        ));
    }
    let elapsed = clock.elapsed();
    ok &= report.chi_square.is_some() && elapsed < Duration::from_secs(120);
    detail.push(format!("{elapsed:.1?}"));
    (ok, detail.join("; "))
}

fn power() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let reps = 200;

    // lag-1 correlation 0.3 among 1000 service times, i.e. 500 disjoint pairs
    let rho: f64 = 0.3;
    let mut chi_rejects = 0;
    for _ in 0..reps {
        let mut z: f64 = rng.sample(StandardNormal);
        let mut s = Vec::with_capacity(1000);
        for _ in 0..1000 {
            s.push(3600.0 + 600.0 * z);
            let e: f64 = rng.sample(StandardNormal);
            z = rho * z + (1.0 - rho * rho).sqrt() * e;
        }
        let r = chi_square_independence(&[s], 5).expect("enough pairs");
        chi_rejects += r.rejects(LEVEL) as usize;
    }
    let chi_power = chi_rejects as f64 / reps as f64;

    // hyperexponential gaps: Exp(2) or Exp(2/3) with equal probability
    let fast = Exp::new(2.0).unwrap();
    let slow = Exp::new(2.0 / 3.0).unwrap();
    let (mut cu, mut lewis) = (0usize, 0usize);
    for _ in 0..reps {
        let mut t = 0.0;
        let mut times = Vec::with_capacity(1000);
        for _ in 0..1000 {
            t += if rng.random::<bool>() { fast.sample(&mut rng) } else { slow.sample(&mut rng) };
            times.push(t);
        }
        let end = t + if rng.random::<bool>() { fast.sample(&mut rng) } else { slow.sample(&mut rng) };
        let w = [ArrivalWindow {
            index: 0,
            start: 0.0,
            length: end,
            times,
        }];
        cu += ks_cu(&w).rejects(LEVEL) as usize;
        lewis += ks_lewis(&w).expect("nonempty").rejects(LEVEL) as usize;
    }
    let ok = chi_power >= 0.8 && lewis > cu;
    (
        ok,
        format!(
            "chi-square power {chi_power:.2} (n=500 pairs, rho=0.3); rejection rate Lewis {:.2} vs CU {:.2} (n=1000)",
            lewis as f64 / reps as f64,
            cu as f64 / reps as f64
        ),
    )
}

fn occupancy_oracle() -> Outcome {
    const RUNS: usize = 2000;
    let mut scenario = Scenario::four_population(30.0, 1, 0).expect("scenario");
    scenario.hours = 48;
    let run = scenario.run(&PopulationPartition::default()).expect("scenario");
    let probes: Vec<f64> = (0..20)
        .map(|k| scenario.start + 24.0 * HOUR + k as f64 * 1.2 * HOUR + 17.0)
        .collect();
    let mut counts = vec![Vec::with_capacity(RUNS); probes.len()];
    let mut cfg = run.config.clone();
    for seed in 0..RUNS as u64 {
        cfg.seed = 1000 + seed;
        let lot = simulate_lot(&cfg).expect("simulate");
        for (k, &t) in probes.iter().enumerate() {
            let n = lot
                .vehicles
                .iter()
                .filter(|v| v.arrival <= t && t < v.departure())
                .count();
            counts[k].push(n as f64);
        }
    }
    let (mut worst_z, mut lo_ratio, mut hi_ratio) = (0.0f64, f64::INFINITY, 0.0f64);
    for (k, &t) in probes.iter().enumerate() {
        let mu = expected_occupancy(&run.truth.rates, &run.truth.components, t).expect("covered");
        let m = mean(&counts[k]);
        let v = variance(&counts[k]);
        worst_z = worst_z.max((m - mu).abs() / (v / RUNS as f64).sqrt());
        lo_ratio = lo_ratio.min(v / m);
        hi_ratio = hi_ratio.max(v / m);
    }
    let ok = worst_z <= 3.0 && lo_ratio >= 0.9 && hi_ratio <= 1.1;
    (
        ok,
        format!("max |mean - mu_N| = {worst_z:.2} SE; Var/Mean in [{lo_ratio:.3}, {hi_ratio:.3}]"),
    )
}

fn fixtures() -> Outcome {
    let chi = pearson_independence(&[vec![30.0, 10.0], vec![10.0, 30.0]]).expect("table");
    let chi_ok = ((chi.statistic - 20.0) / 20.0).abs() <= 1e-7
        && (chi.p_value - 7.7e-6).abs() < 0.05e-6;
    let comps = [
        EmpiricalCdf::uniform(0.0, 600.0).unwrap(),
        EmpiricalCdf::uniform(0.0, 6000.0).unwrap(),
    ];
    let sp = survival_prob(0.0, 300.0, 600.0, &[0.5, 0.5], &comps).p;
    let sp_ok = (sp - 0.5862).abs() <= 1e-4;
    let params = MmcParams {
        cells: vec![
            MmcCell {
                r: 2f64.ln(),
                c: 10.0,
                transitions: 10,
                filled: false
            };
            WEEK_HOURS
        ],
        utc_offset_hours: 0.0,
    };
    let mmc = mmc_forecast(20.0, 0.0, HOUR, &params);
    (
        chi_ok && sp_ok && mmc == 15.0,
        format!(
            "chi-square {:.9} (p={:.3e}); survival {sp:.5}; M/M/C {mmc}",
            chi.statistic, chi.p_value
        ),
    )
}

fn sarima_recovery() -> Outcome {
    let clock = Instant::now();
    let truth = SarimaModel::new(0.5, -0.6, 1.0).unwrap();
    let (mut phis, mut thetas) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = simulate_sarima(&truth, 10_000, &mut rng);
        let fit = fit_sarima(&x).expect("fit");
        phis.push(fit.model.phi);
        thetas.push(fit.model.theta);
    }
    let (mp, mt) = (median(&phis), median(&thetas));
    let elapsed = clock.elapsed();
    let ok = (mp - 0.5).abs() <= 0.06 && (mt + 0.6).abs() <= 0.06 && elapsed < Duration::from_secs(60);
    (ok, format!("median phi {mp:.4}, median Theta {mt:.4}; {elapsed:.1?}"))
}

fn micro_calibration() -> Outcome {
    const ORIGINS: usize = 500;
    let scenario = Scenario::four_population(600.0, 4, 5).expect("scenario");
    let run = scenario.run(&PopulationPartition::default()).expect("scenario");
    let stays = run.lot.stays();
    let truth = &run.truth;
    let zero = SigmaPredTable::zero();
    let mut z = vec![Vec::with_capacity(ORIGINS); DEFAULT_HORIZONS.len()];
    let counter = parkq::eventlog::OccupancyCounter::new(&stays);
    for k in 0..ORIGINS {
        let t = scenario.start + (24 + k) as f64 * HOUR;
        let state = LotState::from_stays(&stays, t);
        for (i, &dt) in DEFAULT_HORIZONS.iter().enumerate() {
            let f = perfect_arrival_micro_forecast(
                &state,
                &truth.components,
                &truth.rates,
                &truth.rates,
                dt,
                &zero,
            )
            .expect("forecast");
            let actual = counter.at(t + dt) as f64;
            z[i].push(f.normalized_error(actual).expect("positive variance"));
        }
    }
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, zs) in z.iter().enumerate() {
        let v = variance(zs);
        let p = ks_p_value(zs.len(), ks_statistic(zs, std_normal_cdf));
        ok &= (0.85..=1.15).contains(&v) && p >= LEVEL;
        detail.push(format!(
            "{}s: mean {:+.3} var {v:.3} KS p {p:.3}",
            DEFAULT_HORIZONS[i],
            mean(zs)
        ));
    }
    (ok, detail.join("; "))
}

/// Three independent 3-week backtests on the benchmark scenario, pooled.
struct Benchmark {
    summaries: Vec<HorizonSummary>,
    elapsed: Duration,
}

fn benchmark() -> Benchmark {
    let clock = Instant::now();
    let partition = PopulationPartition::default();
    let (train_weeks, test_weeks) = (8, 3);
    let mut records: Vec<BacktestRecord> = Vec::new();
    for seed in 0..3 {
        let scenario = Scenario::benchmark(train_weeks + test_weeks + 1, seed).expect("scenario");
        let run = scenario.run(&partition).expect("scenario");
        let stays = run.lot.stays();
        let origin = scenario.start + 24.0 * HOUR;
        let hours = train_weeks * WEEK_HOURS - 24;
        let models = fit_models(&stays, &partition, origin, hours, 0.0).expect("fit");
        let cfg = BacktestConfig::hourly(
            origin + hours as f64 * HOUR,
            test_weeks * WEEK_HOURS,
            DEFAULT_HORIZONS.to_vec(),
            Method::ALL.to_vec(),
        );
        records.extend(run_backtest(&stays, &models, Some(&run.truth), &cfg).expect("backtest"));
    }
    Benchmark {
        summaries: evaluate(&records).expect("evaluate"),
        elapsed: clock.elapsed(),
    }
}

impl Benchmark {
    fn get(&self, m: Method, h: f64) -> &HorizonSummary {
        self.summaries
            .iter()
            .find(|s| s.method == m && s.horizon == h)
            .expect("evaluated")
    }
}

fn crossover(b: &Benchmark) -> Outcome {
    let mut ok = b.elapsed < Duration::from_secs(600);
    let mut detail = Vec::new();
    for &h in &DEFAULT_HORIZONS {
        let micro = b.get(Method::Micro, h);
        let macro_ = b.get(Method::Macro, h);
        let bound = 2.2 * micro.mean_sqrt_var_lb;
        if h <= HOUR {
            ok &= micro.rmse < macro_.rmse;
        }
        if h >= 24.0 * HOUR {
            ok &= macro_.rmse <= micro.rmse;
        }
        ok &= micro.rmse < bound && macro_.rmse < bound;
        detail.push(format!(
            "{h}s: micro {:.2} macro {:.2} 2.2*sqrt(VarLB) {bound:.2}",
            micro.rmse, macro_.rmse
        ));
    }
    detail.push(format!("{:.1?}", b.elapsed));
    (ok, detail.join("; "))
}

fn mmc_degradation(b: &Benchmark) -> Outcome {
    let r1 = b.get(Method::Mmc, HOUR).rmse / b.get(Method::Micro, HOUR).rmse;
    let r24 = b.get(Method::Mmc, 24.0 * HOUR).rmse / b.get(Method::Micro, 24.0 * HOUR).rmse;
    (
        (r1 - 1.0).abs() <= 0.15 && r24 >= 1.5,
        format!("RMSE(M/M/C)/RMSE(micro) = {r1:.3} at 1h, {r24:.3} at 24h"),
    )
}

fn perfect_arrivals(b: &Benchmark) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for &h in &DEFAULT_HORIZONS {
        let sarima = b.get(Method::Micro, h).rmse;
        let perfect = b.get(Method::MicroPerfect, h).rmse;
        let gap = (sarima - perfect) / sarima;
        ok &= perfect <= sarima && gap <= 0.2;
        detail.push(format!("{h}s: {perfect:.2} vs {sarima:.2} (gap {:.1}%)", 100.0 * gap));
    }
    (ok, detail.join("; "))
}

fn repair() -> Outcome {
    let ev = |spot: &str, t: f64, k| ParkingEvent::new("lot", spot, t, k);
    use EventKind::{Arrival as A, Departure as D};
    let events = vec![
        ev("1", 10.125, A),
        ev("1", 20.7, A),
        ev("1", 30.0, D),
        ev("2", 5.0, A),
        ev("2", 1234.5678901, A),
        ev("2", 1300.25, A),
        ev("2", 1400.0, D),
        ev("3", 50.0, A),
        ev("3", 60.0, D),
    ];
    let log = EventLog::with_span(events, Span { start: 0.0, end: 2000.0 });
    let (fixed, report) = repair_log(&log);
    let expected = [0.5 * (10.125 + 20.7), 0.5 * (5.0 + 1234.5678901), 0.5 * (1234.5678901 + 1300.25)];
    let inserted: Vec<f64> = report
        .spots
        .iter()
        .flat_map(|s| s.inserted.iter().map(|i| i.timestamp))
        .collect();
    let exact = inserted == expected && report.inserted_events == 3;
    let (again, second) = repair_log(&fixed);
    let idempotent = again == fixed && second.inserted_events == 0;
    (
        exact && idempotent,
        format!(
            "inserted {:?} (expected {:?}); second pass inserted {}",
            inserted, expected, second.inserted_events
        ),
    )
}

fn check(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let clock = Instant::now();
    let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "{} {name} [{:.1?}]: {detail}",
        if ok { "PASS" } else { "FAIL" },
        clock.elapsed()
    );
    ok
}

fn main() {
    let mut results = vec![
        check("null pipeline soundness", null_pipeline),
        check("test power", power),
        check("expected occupancy vs Monte Carlo", occupancy_oracle),
        check("hand-computed fixtures", fixtures),
        check("SARIMA parameter recovery", sarima_recovery),
        check("microscopic calibration", micro_calibration),
    ];
    match catch_unwind(benchmark) {
        Ok(b) => {
            results.push(check("micro/macro crossover", || crossover(&b)));
            results.push(check("M/M/C degradation", || mmc_degradation(&b)));
            results.push(check("perfect-arrival decomposition", || perfect_arrivals(&b)));
        }
        Err(_) => {
            for name in ["micro/macro crossover", "M/M/C degradation", "perfect-arrival decomposition"] {
                results.push(check(name, || (false, "benchmark backtest panicked".into())));
            }
        }
    }
    results.push(check("log repair", repair));
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("\n{} passed; {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::path::Path;
use std::process::{Command, Output};

use parkq::eventlog::{read_stays_csv, write_event_csv, EventKind, ParkingEvent};
use parkq::queue::{EmpiricalCdf, PopulationRates, RateFunction, ServiceMixture, ShareTable, SimConfig};
use parkq::HOUR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use tempfile::TempDir;

fn parkq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parkq"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_byte_identical_per_seed() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str, seed: &str| {
        let dir = tmp.path().join(name);
        let out = parkq(&dir, &["--seed", seed, "simulate", "--weeks", "1", "--rate", "20"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.join("events.csv")).unwrap()
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a, run("c", "6"));
}

#[test]
fn zero_rate_config_gives_header_only_csv() {
    let tmp = TempDir::new().unwrap();
    let cfg = SimConfig {
        location_id: "empty".into(),
        rates: PopulationRates::new(vec![RateFunction::constant(0.0, 0.0, 24).unwrap()]).unwrap(),
        mixture: ServiceMixture::new(
            vec![EmpiricalCdf::uniform(0.0, HOUR).unwrap()],
            ShareTable::constant(0.0, vec![1.0], 24).unwrap(),
        )
        .unwrap(),
        horizon: 24.0 * HOUR,
        seed: 0,
    };
    let path = tmp.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let out = parkq(tmp.path(), &["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(tmp.path().join("events.csv")).unwrap();
    assert_eq!(csv.trim(), "location_id,spot_id,timestamp,kind");
    assert!(json(&tmp.path().join("truth.json"))["config"].is_object());
}

#[test]
fn empty_input_is_data_insufficiency() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("empty.csv");
    std::fs::write(&input, "location_id,spot_id,timestamp,kind\n").unwrap();
    let out = parkq(tmp.path(), &["verify", input.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let report = json(&tmp.path().join("verify.json"));
    assert!(report["error"].as_str().unwrap().contains("insufficient data"));

    assert_eq!(code(&parkq(tmp.path(), &["ingest", input.to_str().unwrap()])), 2);

    let stays = tmp.path().join("stays.csv");
    std::fs::write(&stays, "spot_id,arrival_time,departure_time,service_time\n").unwrap();
    assert_eq!(code(&parkq(tmp.path(), &["fit", stays.to_str().unwrap()])), 2);
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&parkq(tmp.path(), &["simulate", "--no-such-flag"])), 1);
    assert_eq!(code(&parkq(tmp.path(), &["bogus"])), 1);
    let out = parkq(
        tmp.path(),
        &["forecast", "--model", "m.json", "--events", "e.csv", "--at", "0", "--horizon", "soon"],
    );
    assert_eq!(code(&out), 1);
    assert_eq!(code(&parkq(tmp.path(), &["--utc-offset", "40", "simulate"])), 1);
    assert_eq!(code(&parkq(tmp.path(), &["--help"])), 0);
}

#[test]
fn malformed_rows_strict_and_lenient() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("log.csv");
    std::fs::write(
        &input,
        "location_id,spot_id,timestamp,kind\n\
         A,1,100,arrival\n\
         A,1,oops,departure\n\
         A,1,400,departure\n\
         A,1,500,arrival\n\
         A,1,900,departure\n",
    )
    .unwrap();
    assert_eq!(code(&parkq(tmp.path(), &["ingest", "--strict", input.to_str().unwrap()])), 1);
    let out = parkq(tmp.path(), &["ingest", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("ingest.json"));
    assert_eq!(report["rejected"].as_array().unwrap().len(), 1);
    assert_eq!(report["locations"]["A"]["stays"], 2);
    let stays = read_stays_csv(std::fs::File::open(tmp.path().join("A/stays.csv")).unwrap()).unwrap();
    assert_eq!(stays[0].service_time, 300.0);
}

#[test]
fn verify_flags_dependent_service_times() {
    // 800 arrivals per hour for a day; successive service times AR(1), rho 0.5
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut events = Vec::new();
    let mut z: f64 = 0.0;
    let mut i = 0;
    for h in 0..24 {
        let mut times: Vec<f64> = (0..800).map(|_| (h as f64 + rng.random::<f64>()) * HOUR).collect();
        times.sort_by(f64::total_cmp);
        for t in times {
            let e: f64 = rng.sample(StandardNormal);
            z = 0.5 * z + 0.75f64.sqrt() * e;
            let service = 3600.0 * (0.6 * z).exp();
            let spot = format!("{i}");
            events.push(ParkingEvent::new("L", &spot, t, EventKind::Arrival));
            events.push(ParkingEvent::new("L", &spot, t + service, EventKind::Departure));
            i += 1;
        }
    }
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("dep.csv");
    write_event_csv(&events, std::fs::File::create(&input).unwrap()).unwrap();
    let out = parkq(tmp.path(), &["verify", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("verify.json"));
    let p = report["L"]["chi_square"]["p_value"].as_f64().unwrap();
    assert!(p < 0.01, "chi-square p {p}");
}

#[test]
fn pipeline_round_trip() {
    let tmp = TempDir::new().unwrap();
    let d = |s: &str| tmp.path().join(s);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let ok = |out: Output| assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    ok(parkq(&d("sim"), &["--seed", "1", "simulate", "--weeks", "4", "--rate", "30"]));
    ok(parkq(&d("ing"), &["ingest", &s(&d("sim/events.csv"))]));
    ok(parkq(&d("ver"), &["--plots", "verify", &s(&d("sim/events.csv"))]));
    assert!(d("ver/plots/sim/cu_uniform.csv").exists());
    let report = json(&d("ver/verify.json"));
    assert_eq!(report["sim"]["max_occupancy"]["ever_full"], false);

    let stays = s(&d("ing/sim/stays.csv"));
    let fit = |dir: &str| ok(parkq(&d(dir), &["fit", &stays, "--hours", "504", "--holdout-hours", "168"]));
    fit("fit1");
    fit("fit2");
    let model = std::fs::read(d("fit1/model.json")).unwrap();
    assert_eq!(model, std::fs::read(d("fit2/model.json")).unwrap());
    let m: Value = serde_json::from_slice(&model).unwrap();
    assert_eq!(m["arrival"]["populations"].as_array().unwrap().len(), 4);
    assert_eq!(m["occupancy"]["effects"]["cell_means"].as_array().map(Vec::len), Some(168));

    // state at 3 weeks after the first Monday, from the event log alone
    let at = 4.0 * 86_400.0 + 21.0 * 86_400.0 + 1234.0;
    let at_s = at.to_string();
    let model_path = s(&d("fit1/model.json"));
    for method in ["micro", "macro", "mmc"] {
        ok(parkq(
            &d(method),
            &[
                "forecast", "--model", &model_path, "--events", &s(&d("sim/events.csv")), "--at", &at_s,
                "--horizon", "0,5m,1h,24h", "--method", method,
            ],
        ));
        let f = json(&d(&format!("{method}/forecast.json")));
        let f = f.as_array().unwrap();
        assert_eq!(f.len(), 4);
        let parked = read_stays_csv(std::fs::File::open(d("ing/sim/stays.csv")).unwrap())
            .unwrap()
            .iter()
            .filter(|r| r.parked_at(at))
            .count() as f64;
        if method != "macro" {
            assert_eq!(f[0]["mean"].as_f64().unwrap(), parked);
        }
        assert!(f.iter().all(|x| x["var_total"].as_f64().unwrap() >= x["var_lb"].as_f64().unwrap()));
    }

    ok(parkq(
        &d("ev"),
        &[
            "evaluate", "--model", &model_path, "--stays", &stays, "--count", "48", "--methods",
            "micro,oracle,mmc", "--truth", &s(&d("sim/truth.json")),
        ],
    ));
    let csv = std::fs::read_to_string(d("ev/evaluation.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("horizon,method,rmse,coverage90,coverage95"));
    assert_eq!(lines.count(), 12);
    assert!(d("ev/normalized_errors/micro_3600s.csv").exists());

    // oracle and perfect-arrival forecasts need the generating model
    let out = parkq(&d("ev2"), &["evaluate", "--model", &model_path, "--stays", &stays, "--methods", "oracle"]);
    assert_eq!(code(&out), 1);
}

//! Batch commands behind the `parkq` binary.
//!
//! Every command reads flat files, writes JSON/CSV into `--out-dir` and maps
//! failures to a stable exit code (see [`CliError::exit_code`]).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::{
    filter_spots, parse_event_log, read_stays_csv, repair_log, stays_from_log, write_event_csv,
    write_stays_csv, EventLog, EventLogError, RejectedRow, RepairReport, Span, StayRecord,
};
use crate::forecast::{
    calibrate_sigma, evaluate, fit_models, run_backtest, BacktestConfig, FittedModels,
    ForecastError, ForecastParts, HorizonSummary, Method, Truth, DEFAULT_HORIZONS,
};
use crate::queue::{simulate_lot, QueueError, SimConfig};
use crate::scenario::Scenario;
use crate::seasonal::{floor_to_hour, PopulationPartition, SeasonalError};
use crate::verify::{
    conditional_interarrival_histogram, group_by_window, lewis_transform, normalized_interarrivals,
    pp_qq_data, run_battery, BatteryConfig, BatteryReport, PpQq, Reference, VerifyError,
};
use crate::HOUR;

/// Departure given to vehicles still parked at the forecast time.
const OPEN_STAY: f64 = 365.0 * 86_400.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
}

impl CliError {
    /// 0 success, 1 usage or input error, 2 data insufficiency, 3 numerical
    /// failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InsufficientData(_) => 2,
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<EventLogError> for CliError {
    fn from(e: EventLogError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<QueueError> for CliError {
    fn from(e: QueueError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SeasonalError> for CliError {
    fn from(e: SeasonalError) -> Self {
        match e {
            SeasonalError::InsufficientData(m) => CliError::InsufficientData(m),
            SeasonalError::DegenerateSeries | SeasonalError::NonConvergence { .. } => {
                CliError::Numerical(e.to_string())
            }
            SeasonalError::InvalidInput(m) => CliError::Input(m),
        }
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        match e {
            ForecastError::InsufficientBacktest { .. } => CliError::InsufficientData(e.to_string()),
            ForecastError::Seasonal(s) => s.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::InsufficientData(_) | VerifyError::WindowTooSmall { .. } => {
                CliError::InsufficientData(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(name = "parkq", version, about = "Parking occupancy modeling and forecasting")]
pub struct RunConfig {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// RNG seed; overrides the seed stored in a simulation config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated location ids to process (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    pub locations: Vec<String>,
    /// Fixed local offset from UTC in hours, used for hour-of-day and weekday.
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub utc_offset: f64,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write P-P/Q-Q and histogram point files.
    #[arg(long, global = true)]
    pub plots: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Simulate a lot; writes events.csv and truth.json.
    Simulate(SimulateArgs),
    /// Parse, repair and filter an event log; writes per-location events and stays.
    Ingest(IngestArgs),
    /// Run the assumption battery on an event log; writes verify.json.
    Verify(VerifyArgs),
    /// Fit the arrival, occupancy and M/M/C models on a stays file; writes model.json.
    Fit(FitArgs),
    /// Forecast occupancy from the state of an event log; writes forecast.json.
    Forecast(ForecastArgs),
    /// Backtest forecasts against realized occupancy; writes evaluation.csv.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    FourPopulation,
    Benchmark,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Simulator config JSON; when absent a preset scenario is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "four-population")]
    pub scenario: Preset,
    #[arg(long, default_value_t = 4)]
    pub weeks: usize,
    /// Mean arrivals per hour (four-population preset).
    #[arg(long, default_value_t = 60.0)]
    pub rate: f64,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Event CSV with header location_id,spot_id,timestamp,kind.
    pub input: PathBuf,
    /// Fail on the first malformed row instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Drop spots with fewer completed stays.
    #[arg(long, default_value_t = 2)]
    pub min_stays: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub input: PathBuf,
    /// Window length, e.g. 3600, 30m, 1h.
    #[arg(long, default_value = "1h", value_parser = parse_duration)]
    pub window: f64,
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    /// Number of spots (default: spots seen in the log).
    #[arg(long)]
    pub capacity: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Stays CSV as written by `ingest`.
    pub stays: PathBuf,
    /// Start of training (epoch seconds or RFC 3339); default: hour of the first arrival.
    #[arg(long, value_parser = parse_time)]
    pub origin: Option<f64>,
    /// Training length in hours; default: up to the last arrival.
    #[arg(long)]
    pub hours: Option<usize>,
    /// Population boundaries in minutes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![5.0, 25.0, 360.0])]
    pub boundaries: Vec<f64>,
    /// Hold out the last hours of training to calibrate the prediction variance.
    #[arg(long, default_value_t = 0)]
    pub holdout_hours: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_duration)]
    pub horizons: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Event CSV holding the lot's history up to `--at`.
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, value_parser = parse_time)]
    pub at: f64,
    /// One or more horizons, e.g. 5m,1h,6h,24h.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_duration)]
    pub horizon: Vec<f64>,
    #[arg(long, value_enum, default_value = "micro")]
    pub method: ForecastMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForecastMethod {
    Micro,
    Macro,
    Mmc,
}

impl From<ForecastMethod> for Method {
    fn from(m: ForecastMethod) -> Self {
        match m {
            ForecastMethod::Micro => Method::Micro,
            ForecastMethod::Macro => Method::Macro,
            ForecastMethod::Mmc => Method::Mmc,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub stays: PathBuf,
    /// First origin; default: end of the training span.
    #[arg(long, value_parser = parse_time)]
    pub from: Option<f64>,
    /// Number of hourly origins; default: as many as the data covers.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_duration)]
    pub horizons: Vec<f64>,
    /// micro, macro, mmc, micro-perfect, oracle.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["micro".to_string(), "macro".to_string(), "mmc".to_string()])]
    pub methods: Vec<String>,
    /// truth.json from `simulate`, needed by micro-perfect and oracle.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// Seconds, or a duration such as `90s`, `5m`, `1h 30m`, `1d`.
pub fn parse_duration(s: &str) -> Result<f64, String> {
    if let Ok(v) = s.trim().parse::<f64>() {
        return if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(format!("bad duration {s:?}"))
        };
    }
    humantime::parse_duration(s.trim())
        .map(|d| d.as_secs_f64())
        .map_err(|e| format!("bad duration {s:?}: {e}"))
}

/// Epoch seconds, or an RFC 3339 UTC timestamp.
pub fn parse_time(s: &str) -> Result<f64, String> {
    if let Ok(v) = s.trim().parse::<f64>() {
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("bad time {s:?}"))
        };
    }
    let t = humantime::parse_rfc3339_weak(s.trim()).map_err(|e| format!("bad time {s:?}: {e}"))?;
    t.duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .map_err(|_| format!("time {s:?} precedes the epoch"))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn events_bytes(log: &EventLog) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_event_csv(log.events(), &mut buf)?;
    Ok(buf)
}

fn stays_bytes(stays: &[StayRecord]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_stays_csv(stays, &mut buf)?;
    Ok(buf)
}

/// Parses an event log and keeps the requested locations.
fn load_log(path: &Path, strict: bool, g: &GlobalOpts) -> Result<(EventLog, Vec<RejectedRow>), CliError> {
    let parsed = parse_event_log(open(path)?, strict)?;
    let log = if g.locations.is_empty() {
        parsed.log
    } else {
        let events = parsed
            .log
            .events()
            .iter()
            .filter(|e| g.locations.contains(&e.location_id))
            .cloned()
            .collect();
        EventLog::new(events)
    };
    Ok((log, parsed.rejected))
}

/// Runs `f` on every location in its own thread; results keep location order.
fn per_location<T, F>(log: &EventLog, f: F) -> Vec<(String, T)>
where
    T: Send,
    F: Fn(&EventLog) -> T + Sync,
{
    let locations = log.locations();
    std::thread::scope(|scope| {
        let handles: Vec<_> = locations
            .iter()
            .map(|loc| {
                let f = &f;
                let sub = log.for_location(loc);
                scope.spawn(move || f(&sub))
            })
            .collect();
        locations
            .iter()
            .cloned()
            .zip(handles.into_iter().map(|h| h.join().expect("worker panicked")))
            .collect()
    })
}

/// Ground truth written next to a simulated log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub config: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
}

pub fn cmd_simulate(g: &GlobalOpts, a: &SimulateArgs) -> Result<String, CliError> {
    let (log, truth) = match &a.config {
        Some(path) => {
            let mut cfg: SimConfig = read_json(path)?;
            if let Some(seed) = g.seed {
                cfg.seed = seed;
            }
            if let Some(loc) = g.locations.first() {
                cfg.location_id = loc.clone();
            }
            let lot = simulate_lot(&cfg)?;
            let truth = GroundTruth {
                scenario: None,
                config: cfg,
                truth: None,
            };
            (lot.log, truth)
        }
        None => {
            let seed = g.seed.unwrap_or(0);
            let mut scenario = match a.scenario {
                Preset::FourPopulation => Scenario::four_population(a.rate, a.weeks, seed)?,
                Preset::Benchmark => Scenario::benchmark(a.weeks, seed)?,
            };
            scenario.utc_offset_hours = g.utc_offset;
            if let Some(loc) = g.locations.first() {
                scenario.location_id = loc.clone();
            }
            let run = scenario.run(&PopulationPartition::default())?;
            let truth = GroundTruth {
                scenario: Some(scenario),
                config: run.config,
                truth: Some(run.truth),
            };
            (run.lot.log, truth)
        }
    };
    let events = g.out_dir.join("events.csv");
    write_atomic(&events, &events_bytes(&log)?)?;
    write_json(&g.out_dir.join("truth.json"), &truth)?;
    Ok(format!("{} events written to {}", log.len(), events.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestLocation {
    pub events: usize,
    pub spots: usize,
    pub stays: usize,
    pub repair: RepairReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub rejected: Vec<RejectedRow>,
    pub locations: BTreeMap<String, IngestLocation>,
}

pub fn cmd_ingest(g: &GlobalOpts, a: &IngestArgs) -> Result<String, CliError> {
    let (log, rejected) = load_log(&a.input, a.strict, g)?;
    let results = per_location(&log, |sub| -> Result<_, CliError> {
        let (repaired, repair) = repair_log(sub);
        let kept = filter_spots(&repaired, a.min_stays);
        let stays = stays_from_log(&kept)?;
        Ok((kept, stays, repair))
    });
    let mut report = IngestReport {
        rejected,
        locations: BTreeMap::new(),
    };
    for (loc, r) in results {
        let (kept, stays, repair) = r?;
        let dir = g.out_dir.join(&loc);
        write_atomic(&dir.join("events.csv"), &events_bytes(&kept)?)?;
        write_atomic(&dir.join("stays.csv"), &stays_bytes(&stays)?)?;
        report.locations.insert(
            loc,
            IngestLocation {
                events: kept.len(),
                spots: kept.spot_count(),
                stays: stays.len(),
                repair,
            },
        );
    }
    write_json(&g.out_dir.join("ingest.json"), &report)?;
    let total: usize = report.locations.values().map(|l| l.stays).sum();
    if total == 0 {
        return Err(CliError::InsufficientData(format!(
            "{} holds no complete stays",
            a.input.display()
        )));
    }
    Ok(format!(
        "{} locations, {total} stays, {} rows rejected",
        report.locations.len(),
        report.rejected.len()
    ))
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum VerifyOutcome {
    Report(Box<VerifyLocation>),
    Failed { error: String, exit_code: i32 },
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyLocation {
    pub repair: RepairReport,
    #[serde(flatten)]
    pub battery: BatteryReport,
}

pub fn cmd_verify(g: &GlobalOpts, a: &VerifyArgs) -> Result<String, CliError> {
    let (log, _) = load_log(&a.input, false, g)?;
    if log.is_empty() {
        let e = CliError::InsufficientData(format!("{} holds no events", a.input.display()));
        let report = BTreeMap::from([("error", e.to_string())]);
        write_json(&g.out_dir.join("verify.json"), &report)?;
        return Err(e);
    }
    let cfg = BatteryConfig {
        window: a.window,
        bins: a.bins,
        capacity: a.capacity,
    };
    let results = per_location(&log, |sub| -> Result<_, CliError> {
        let (repaired, repair) = repair_log(sub);
        let battery = run_battery(&repaired, &cfg)?;
        Ok((repaired, VerifyLocation { repair, battery }))
    });
    let mut report = BTreeMap::new();
    let mut worst: Option<CliError> = None;
    let mut ok = 0;
    for (loc, r) in results {
        match r {
            Ok((repaired, v)) => {
                if g.plots {
                    write_plots(&g.out_dir.join("plots").join(&loc), &repaired, a.window)?;
                }
                ok += 1;
                report.insert(loc, VerifyOutcome::Report(Box::new(v)));
            }
            Err(e) => {
                report.insert(
                    loc,
                    VerifyOutcome::Failed {
                        error: e.to_string(),
                        exit_code: e.exit_code(),
                    },
                );
                worst.get_or_insert(e);
            }
        }
    }
    write_json(&g.out_dir.join("verify.json"), &report)?;
    match worst {
        Some(e) if ok == 0 => Err(e),
        _ => Ok(format!("{ok} of {} locations verified", report.len())),
    }
}

fn pp_qq_csv(pq: &PpQq) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "x", "y"]).map_err(EventLogError::from)?;
    for (kind, pts) in [("pp", &pq.pp), ("qq", &pq.qq)] {
        for (x, y) in pts {
            w.write_record([kind, &x.to_string(), &y.to_string()])
                .map_err(EventLogError::from)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

fn write_plots(dir: &Path, log: &EventLog, window: f64) -> Result<(), CliError> {
    let stays = stays_from_log(log)?;
    let arrivals: Vec<f64> = stays.iter().map(|s| s.arrival_time).collect();
    let origin = (log.span().map_or(0.0, |s| s.start) / window).floor() * window;
    let windows = group_by_window(&arrivals, origin, window);
    let normalized = normalized_interarrivals(&arrivals, origin, window);
    let uniforms: Vec<f64> = windows.iter().flat_map(|w| w.uniforms()).collect();
    let lewis: Vec<f64> = windows.iter().flat_map(|w| lewis_transform(&w.uniforms())).collect();
    for (name, samples, reference) in [
        ("interarrivals_exp1.csv", &normalized.values, Reference::Exp1),
        ("cu_uniform.csv", &uniforms, Reference::Uniform),
        ("lewis_uniform.csv", &lewis, Reference::Uniform),
    ] {
        if let Ok(pq) = pp_qq_data(samples, reference) {
            write_atomic(&dir.join(name), &pp_qq_csv(&pq)?)?;
        }
    }
    let edges: Vec<f64> = (0..16).map(|k| k as f64 * 0.25).collect();
    if let Ok(hists) = conditional_interarrival_histogram(&normalized, 4, &edges) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["lag_lo", "lag_hi", "count", "edge", "mass"])
            .map_err(EventLogError::from)?;
        for h in &hists {
            for (e, m) in h.edges.iter().zip(&h.mass) {
                w.write_record([
                    h.lag_lo.to_string(),
                    h.lag_hi.to_string(),
                    h.count.to_string(),
                    e.to_string(),
                    m.to_string(),
                ])
                .map_err(EventLogError::from)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        write_atomic(&dir.join("conditional_histogram.csv"), &bytes)?;
    }
    Ok(())
}

fn read_stays(path: &Path) -> Result<Vec<StayRecord>, CliError> {
    let stays = read_stays_csv(open(path)?)?;
    if stays.is_empty() {
        return Err(CliError::InsufficientData(format!(
            "{} holds no stays",
            path.display()
        )));
    }
    Ok(stays)
}

fn horizons_or_default(h: &[f64]) -> Vec<f64> {
    if h.is_empty() {
        DEFAULT_HORIZONS.to_vec()
    } else {
        h.to_vec()
    }
}

pub fn cmd_fit(g: &GlobalOpts, a: &FitArgs) -> Result<String, CliError> {
    let stays = read_stays(&a.stays)?;
    let partition = PopulationPartition::new(a.boundaries.clone())?;
    let first = stays.iter().map(|s| s.arrival_time).fold(f64::INFINITY, f64::min);
    let last = stays.iter().map(|s| s.arrival_time).fold(f64::NEG_INFINITY, f64::max);
    let origin = a.origin.unwrap_or_else(|| floor_to_hour(first, g.utc_offset));
    let hours = match a.hours {
        Some(h) => h,
        None => ((last - origin) / HOUR).floor().max(0.0) as usize + 1,
    };
    if a.holdout_hours >= hours {
        return Err(CliError::Usage(format!(
            "holdout of {} hours leaves no training data in {hours} hours",
            a.holdout_hours
        )));
    }
    let train_hours = hours - a.holdout_hours;
    let mut models = fit_models(&stays, &partition, origin, train_hours, g.utc_offset)?;
    let mut calibrated = 0;
    if a.holdout_hours > 0 {
        let horizons = horizons_or_default(&a.horizons);
        let max_h = horizons.iter().copied().fold(0.0, f64::max);
        let start = origin + train_hours as f64 * HOUR;
        let end = origin + hours as f64 * HOUR;
        let count = ((end - max_h - start) / HOUR).floor();
        if count < 1.0 {
            return Err(CliError::InsufficientData(
                "holdout is shorter than the longest horizon".into(),
            ));
        }
        let cfg = BacktestConfig::hourly(start, count as usize, horizons, vec![Method::Micro, Method::Macro]);
        let records = run_backtest(&stays, &models, None, &cfg)?;
        models.sigma = calibrate_sigma(&records)?;
        calibrated = cfg.origins.len();
    }
    let path = g.out_dir.join("model.json");
    write_json(&path, &models)?;
    Ok(format!(
        "model fitted on {train_hours} hours ({} stays){} -> {}",
        stays.len(),
        if calibrated > 0 {
            format!(", variance calibrated on {calibrated} origins")
        } else {
            String::new()
        },
        path.display()
    ))
}

/// Stays known at `at`: completed stays plus vehicles still parked, whose
/// departure is pushed far beyond any horizon.
pub fn stays_known_at(log: &EventLog, at: f64) -> Result<Vec<StayRecord>, CliError> {
    let events: Vec<_> = log.events().iter().filter(|e| e.timestamp <= at).cloned().collect();
    let Some(start) = events.iter().map(|e| e.timestamp).reduce(f64::min) else {
        return Err(CliError::InsufficientData(format!("no events at or before t={at}")));
    };
    let tail = EventLog::with_span(
        events,
        Span {
            start,
            end: at + OPEN_STAY,
        },
    );
    Ok(stays_from_log(&repair_log(&tail).0)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ForecastOutput {
    pub method: Method,
    pub at: f64,
    pub horizon: f64,
    pub mean: f64,
    pub var_lb: f64,
    pub var_total: f64,
    pub parts: ForecastParts,
}

pub fn cmd_forecast(g: &GlobalOpts, a: &ForecastArgs) -> Result<String, CliError> {
    let models: FittedModels = read_json(&a.model)?;
    if a.at < models.training_origin() {
        return Err(CliError::Usage(format!(
            "--at {} precedes the model's training span",
            a.at
        )));
    }
    let (log, _) = load_log(&a.events, false, g)?;
    let locations = log.locations();
    if locations.len() > 1 {
        return Err(CliError::Usage(format!(
            "the log holds {} locations; select one with --locations",
            locations.len()
        )));
    }
    let stays = stays_known_at(&log, a.at)?;
    let method = Method::from(a.method);
    let cfg = BacktestConfig {
        origins: vec![a.at],
        horizons: a.horizon.clone(),
        methods: vec![method],
    };
    let out: Vec<ForecastOutput> = run_backtest(&stays, &models, None, &cfg)?
        .into_iter()
        .map(|r| ForecastOutput {
            method,
            at: r.origin,
            horizon: r.horizon,
            mean: r.forecast.mean,
            var_lb: r.forecast.var_lb,
            var_total: r.forecast.var_total,
            parts: r.forecast.parts,
        })
        .collect();
    if out.iter().any(|f| !f.mean.is_finite() || !f.var_total.is_finite()) {
        return Err(CliError::Numerical("forecast is not finite".into()));
    }
    let path = g.out_dir.join("forecast.json");
    write_json(&path, &out)?;
    Ok(format!("{} forecasts -> {}", out.len(), path.display()))
}

fn evaluation_csv(summaries: &[HorizonSummary]) -> Result<Vec<u8>, CliError> {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "horizon",
        "method",
        "rmse",
        "coverage90",
        "coverage95",
        "n",
        "mean_error",
        "mean_sqrt_var_lb",
    ])
    .map_err(EventLogError::from)?;
    for s in summaries {
        w.write_record([
            s.horizon.to_string(),
            s.method.name().to_string(),
            s.rmse.to_string(),
            opt(s.coverage90),
            opt(s.coverage95),
            s.n.to_string(),
            s.mean_error.to_string(),
            s.mean_sqrt_var_lb.to_string(),
        ])
        .map_err(EventLogError::from)?;
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

pub fn cmd_evaluate(g: &GlobalOpts, a: &EvaluateArgs) -> Result<String, CliError> {
    let models: FittedModels = read_json(&a.model)?;
    let stays = read_stays(&a.stays)?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let truth = match &a.truth {
        Some(p) => read_json::<GroundTruth>(p)?.truth,
        None => None,
    };
    let horizons = horizons_or_default(&a.horizons);
    let max_h = horizons.iter().copied().fold(0.0, f64::max);
    let from = a.from.unwrap_or_else(|| models.training_end());
    let end = stays.iter().map(|s| s.arrival_time).fold(f64::NEG_INFINITY, f64::max);
    if from + max_h > end {
        return Err(CliError::InsufficientData(
            "the data ends before the first origin plus the longest horizon".into(),
        ));
    }
    let count = a
        .count
        .unwrap_or(((end - max_h - from) / HOUR).floor() as usize + 1);
    let cfg = BacktestConfig::hourly(from, count, horizons, methods);
    let records = run_backtest(&stays, &models, truth.as_ref(), &cfg)?;
    let summaries = evaluate(&records)?;
    if summaries.iter().any(|s| !s.rmse.is_finite()) {
        return Err(CliError::Numerical("non-finite forecast error".into()));
    }
    let path = g.out_dir.join("evaluation.csv");
    write_atomic(&path, &evaluation_csv(&summaries)?)?;
    for s in &summaries {
        let mut body = String::from("normalized_error\n");
        for e in &s.normalized_errors {
            body.push_str(&format!("{e}\n"));
        }
        let name = format!("{}_{}s.csv", s.method.name(), s.horizon);
        write_atomic(&g.out_dir.join("normalized_errors").join(name), body.as_bytes())?;
    }
    Ok(format!(
        "{} origins x {} horizons x {} methods -> {}",
        count,
        cfg.horizons.len(),
        cfg.methods.len(),
        path.display()
    ))
}

pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let g = &cfg.global;
    if !g.utc_offset.is_finite() || g.utc_offset.abs() > 14.0 {
        return Err(CliError::Usage(format!("--utc-offset {} out of range", g.utc_offset)));
    }
    match &cfg.command {
        Command::Simulate(a) => cmd_simulate(g, a),
        Command::Ingest(a) => cmd_ingest(g, a),
        Command::Verify(a) => cmd_verify(g, a),
        Command::Fit(a) => cmd_fit(g, a),
        Command::Forecast(a) => cmd_forecast(g, a),
        Command::Evaluate(a) => cmd_evaluate(g, a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cfg) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Sensor event logs: parsing, repair, spot filtering and the derived stays
//! and occupancy traces.
//!
//! The wire format is a four-column CSV, `location_id,spot_id,timestamp,kind`,
//! with `timestamp` in decimal seconds since the epoch and `kind` one of
//! `arrival` / `departure` (case-insensitive). Spots are keyed by
//! `(location_id, spot_id)`; a log holding a single location therefore sorts
//! by `(spot_id, timestamp)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EVENT_HEADER: [&str; 4] = ["location_id", "spot_id", "timestamp", "kind"];
pub const STAY_HEADER: [&str; 4] = ["spot_id", "arrival_time", "departure_time", "service_time"];

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("missing or wrong header: expected `location_id,spot_id,timestamp,kind`, found `{found}`")]
    MissingHeader { found: String },
    #[error("line {line}: bad timestamp `{value}`")]
    BadTimestamp { line: u64, value: String },
    #[error("line {line}: bad event kind `{value}`")]
    BadKind { line: u64, value: String },
    #[error("line {line}: malformed row ({reason})")]
    MalformedRow { line: u64, reason: String },
    #[error("spot {spot}: events do not alternate at t={at}; run repair_log first")]
    UnrepairedLog { spot: String, at: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Arrival,
    Departure,
}

impl EventKind {
    fn flip(self) -> Self {
        match self {
            EventKind::Arrival => EventKind::Departure,
            EventKind::Departure => EventKind::Arrival,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Departure => "departure",
        }
    }

    // departures sort ahead of arrivals at the same instant
    fn order_key(self) -> u8 {
        match self {
            EventKind::Departure => 0,
            EventKind::Arrival => 1,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EventKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("arrival") {
            Ok(EventKind::Arrival)
        } else if s.eq_ignore_ascii_case("departure") {
            Ok(EventKind::Departure)
        } else {
            Err(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingEvent {
    pub location_id: String,
    pub spot_id: String,
    pub timestamp: f64,
    pub kind: EventKind,
}

impl ParkingEvent {
    pub fn new(location_id: &str, spot_id: &str, timestamp: f64, kind: EventKind) -> Self {
        ParkingEvent {
            location_id: location_id.to_string(),
            spot_id: spot_id.to_string(),
            timestamp,
            kind,
        }
    }

    fn same_spot(&self, other: &ParkingEvent) -> bool {
        self.location_id == other.location_id && self.spot_id == other.spot_id
    }

    fn spot_label(&self) -> String {
        format!("{}/{}", self.location_id, self.spot_id)
    }
}

fn event_order(a: &ParkingEvent, b: &ParkingEvent) -> Ordering {
    a.location_id
        .cmp(&b.location_id)
        .then_with(|| a.spot_id.cmp(&b.spot_id))
        .then_with(|| a.timestamp.total_cmp(&b.timestamp))
        .then_with(|| a.kind.order_key().cmp(&b.kind.order_key()))
}

/// Observation window of a log, in epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

/// Events sorted by `(location_id, spot_id, timestamp)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    events: Vec<ParkingEvent>,
    span: Option<Span>,
}

impl EventLog {
    /// Sorts the events and sets the span to their time range.
    pub fn new(mut events: Vec<ParkingEvent>) -> Self {
        events.sort_by(event_order);
        let span = time_range(&events);
        EventLog { events, span }
    }

    /// Same as [`EventLog::new`] but with an explicit observation window,
    /// widened if any event falls outside it.
    pub fn with_span(events: Vec<ParkingEvent>, span: Span) -> Self {
        let mut log = EventLog::new(events);
        log.span = Some(match log.span {
            Some(r) => Span {
                start: span.start.min(r.start),
                end: span.end.max(r.end),
            },
            None => span,
        });
        log
    }

    pub fn events(&self) -> &[ParkingEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<ParkingEvent> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `None` for a log with no events and no configured window.
    pub fn span(&self) -> Option<Span> {
        self.span
    }

    pub fn locations(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.events.iter().map(|e| e.location_id.clone()).collect();
        ids.dedup();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Sub-log for one location, keeping this log's span.
    pub fn for_location(&self, location_id: &str) -> EventLog {
        EventLog {
            events: self
                .events
                .iter()
                .filter(|e| e.location_id == location_id)
                .cloned()
                .collect(),
            span: self.span,
        }
    }

    /// Number of distinct `(location, spot)` keys.
    pub fn spot_count(&self) -> usize {
        self.spot_groups().count()
    }

    fn spot_groups(&self) -> impl Iterator<Item = &[ParkingEvent]> {
        self.events.chunk_by(|a, b| a.same_spot(b))
    }
}

fn time_range(events: &[ParkingEvent]) -> Option<Span> {
    let mut it = events.iter().map(|e| e.timestamp);
    let first = it.next()?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t)));
    Some(Span { start: lo, end: hi })
}

/// A row the parser refused, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParsedLog {
    pub log: EventLog,
    pub rejected: Vec<RejectedRow>,
}

/// Parses the event CSV. Malformed rows are collected in
/// [`ParsedLog::rejected`]; with `strict` the first one is returned as an
/// error instead.
pub fn parse_event_log<R: Read>(input: R, strict: bool) -> Result<ParsedLog, EventLogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.len() != EVENT_HEADER.len() || headers.iter().zip(EVENT_HEADER).any(|(h, e)| h != e) {
        return Err(EventLogError::MissingHeader {
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut events = Vec::new();
    let mut rejected = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, line) {
            Ok(ev) => events.push(ev),
            Err(err) if strict => return Err(err),
            Err(err) => rejected.push(RejectedRow {
                line,
                reason: err.to_string(),
            }),
        }
    }
    Ok(ParsedLog {
        log: EventLog::new(events),
        rejected,
    })
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<ParkingEvent, EventLogError> {
    if record.len() != 4 {
        return Err(EventLogError::MalformedRow {
            line,
            reason: format!("expected 4 fields, found {}", record.len()),
        });
    }
    let raw_ts = &record[2];
    let timestamp: f64 = raw_ts.parse().map_err(|_| EventLogError::BadTimestamp {
        line,
        value: raw_ts.to_string(),
    })?;
    if !timestamp.is_finite() || timestamp < 0.0 {
        return Err(EventLogError::BadTimestamp {
            line,
            value: raw_ts.to_string(),
        });
    }
    let kind = record[3].parse().map_err(|_| EventLogError::BadKind {
        line,
        value: record[3].to_string(),
    })?;
    Ok(ParkingEvent {
        location_id: record[0].to_string(),
        spot_id: record[1].to_string(),
        timestamp,
        kind,
    })
}

/// Writes events in the canonical CSV schema. Timestamps use the shortest
/// representation that round-trips, so a parse of the output is exact.
pub fn write_event_csv<W: Write>(events: &[ParkingEvent], out: W) -> Result<(), EventLogError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENT_HEADER)?;
    for e in events {
        w.write_record([
            e.location_id.as_str(),
            e.spot_id.as_str(),
            &e.timestamp.to_string(),
            e.kind.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Insertions made for one spot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotRepair {
    pub location_id: String,
    pub spot_id: String,
    pub inserted: Vec<InsertedEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsertedEvent {
    pub timestamp: f64,
    pub kind: EventKind,
    /// Clamped to the log span because no event bracketed it on that side.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RepairReport {
    pub inserted_events: usize,
    pub inserted_fraction: f64,
    pub boundary_insertions: usize,
    pub spots: Vec<SpotRepair>,
}

/// Makes every spot's events alternate Arrival/Departure, starting with an
/// Arrival.
///
/// A missing event between two same-kind neighbours is inserted at their
/// midpoint. A leading Departure gets an Arrival at the span start; a
/// trailing Arrival gets a Departure at the span end.
pub fn repair_log(log: &EventLog) -> (EventLog, RepairReport) {
    let Some(span) = log.span else {
        return (log.clone(), RepairReport::default());
    };
    let mut out = Vec::with_capacity(log.events.len());
    let mut report = RepairReport::default();

    for group in log.spot_groups() {
        let mut expected = EventKind::Arrival;
        let mut inserted = Vec::new();
        let mut prev_ts: Option<f64> = None;
        for ev in group {
            if ev.kind != expected {
                let (ts, at_boundary) = match prev_ts {
                    Some(p) => (0.5 * (p + ev.timestamp), false),
                    None => (span.start, true),
                };
                out.push(ParkingEvent {
                    timestamp: ts,
                    kind: expected,
                    ..ev.clone()
                });
                inserted.push(InsertedEvent {
                    timestamp: ts,
                    kind: expected,
                    at_boundary,
                });
                expected = expected.flip();
            }
            out.push(ev.clone());
            expected = expected.flip();
            prev_ts = Some(ev.timestamp);
        }
        if expected == EventKind::Departure {
            let last = group.last().expect("chunks are nonempty");
            out.push(ParkingEvent {
                timestamp: span.end,
                kind: EventKind::Departure,
                ..last.clone()
            });
            inserted.push(InsertedEvent {
                timestamp: span.end,
                kind: EventKind::Departure,
                at_boundary: true,
            });
        }
        if !inserted.is_empty() {
            report.inserted_events += inserted.len();
            report.boundary_insertions += inserted.iter().filter(|i| i.at_boundary).count();
            report.spots.push(SpotRepair {
                location_id: group[0].location_id.clone(),
                spot_id: group[0].spot_id.clone(),
                inserted,
            });
        }
    }

    report.inserted_fraction = if out.is_empty() {
        0.0
    } else {
        report.inserted_events as f64 / out.len() as f64
    };
    // insertion keeps per-spot order, and groups were visited in sort order
    let repaired = EventLog {
        events: out,
        span: Some(span),
    };
    (repaired, report)
}

/// Keeps only spots with at least `min_stays` completed Arrival→Departure
/// pairs over the loaded span (the usual threshold is 2).
pub fn filter_spots(log: &EventLog, min_stays: usize) -> EventLog {
    let min_stays = min_stays.max(1);
    let events = log
        .spot_groups()
        .filter(|g| completed_pairs(g) >= min_stays)
        .flat_map(|g| g.iter().cloned())
        .collect();
    EventLog {
        events,
        span: log.span,
    }
}

fn completed_pairs(group: &[ParkingEvent]) -> usize {
    group
        .windows(2)
        .filter(|w| w[0].kind == EventKind::Arrival && w[1].kind == EventKind::Departure)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayRecord {
    pub spot_id: String,
    pub arrival_time: f64,
    pub departure_time: f64,
    pub service_time: f64,
}

impl StayRecord {
    pub fn new(spot_id: &str, arrival_time: f64, departure_time: f64) -> Self {
        StayRecord {
            spot_id: spot_id.to_string(),
            arrival_time,
            departure_time,
            service_time: departure_time - arrival_time,
        }
    }

    /// Whether the vehicle is parked at `t` (arrived at or before, leaves after).
    pub fn parked_at(&self, t: f64) -> bool {
        self.arrival_time <= t && t < self.departure_time
    }
}

/// Pairs each Arrival with the following Departure of the same spot.
///
/// Zero-length pairs (a boundary repair landing exactly on the arrival) carry
/// no service time and are skipped. The result is sorted by arrival time.
pub fn stays_from_log(log: &EventLog) -> Result<Vec<StayRecord>, EventLogError> {
    let mut stays = Vec::with_capacity(log.events.len() / 2);
    for group in log.spot_groups() {
        if group.len() % 2 != 0 {
            let last = group.last().expect("nonempty");
            return Err(EventLogError::UnrepairedLog {
                spot: last.spot_label(),
                at: last.timestamp,
            });
        }
        for pair in group.chunks_exact(2) {
            let (a, d) = (&pair[0], &pair[1]);
            if a.kind != EventKind::Arrival || d.kind != EventKind::Departure {
                let bad = if a.kind != EventKind::Arrival { a } else { d };
                return Err(EventLogError::UnrepairedLog {
                    spot: bad.spot_label(),
                    at: bad.timestamp,
                });
            }
            if d.timestamp > a.timestamp {
                stays.push(StayRecord::new(&a.spot_id, a.timestamp, d.timestamp));
            }
        }
    }
    stays.sort_by(|a, b| {
        a.arrival_time
            .total_cmp(&b.arrival_time)
            .then_with(|| a.spot_id.cmp(&b.spot_id))
    });
    Ok(stays)
}

pub fn write_stays_csv<W: Write>(stays: &[StayRecord], out: W) -> Result<(), EventLogError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STAY_HEADER)?;
    for s in stays {
        w.write_record([
            s.spot_id.clone(),
            s.arrival_time.to_string(),
            s.departure_time.to_string(),
            s.service_time.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stays_csv<R: Read>(input: R) -> Result<Vec<StayRecord>, EventLogError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(STAY_HEADER) {
        return Err(EventLogError::MissingHeader {
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut stays = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<f64, EventLogError> {
            record
                .get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| EventLogError::BadTimestamp {
                    line,
                    value: record.get(i).unwrap_or("").to_string(),
                })
        };
        let (a, d) = (num(1)?, num(2)?);
        if d <= a {
            return Err(EventLogError::MalformedRow {
                line,
                reason: "departure not after arrival".into(),
            });
        }
        stays.push(StayRecord::new(&record[0], a, d));
    }
    stays.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
    Ok(stays)
}

/// Occupancy counts N(t) from a set of stays, answered by binary search.
///
/// N(t) = #{arrivals <= t} - #{departures <= t}, which equals the indicator
/// sum over stays with `arrival <= t < departure`.
#[derive(Debug, Clone, Default)]
pub struct OccupancyCounter {
    arrivals: Vec<f64>,
    departures: Vec<f64>,
}

impl OccupancyCounter {
    pub fn new(stays: &[StayRecord]) -> Self {
        let mut arrivals: Vec<f64> = stays.iter().map(|s| s.arrival_time).collect();
        let mut departures: Vec<f64> = stays.iter().map(|s| s.departure_time).collect();
        arrivals.sort_by(f64::total_cmp);
        departures.sort_by(f64::total_cmp);
        OccupancyCounter {
            arrivals,
            departures,
        }
    }

    pub fn at(&self, t: f64) -> u32 {
        let a = self.arrivals.partition_point(|&x| x <= t);
        let d = self.departures.partition_point(|&x| x <= t);
        (a - d) as u32
    }

    /// Largest occupancy reached at any instant.
    pub fn max(&self) -> u32 {
        let (mut i, mut j, mut cur, mut best) = (0, 0, 0i64, 0i64);
        while i < self.arrivals.len() {
            // a departure at the same instant as an arrival frees its spot first
            if j < self.departures.len() && self.departures[j] <= self.arrivals[i] {
                cur -= 1;
                j += 1;
            } else {
                cur += 1;
                i += 1;
                best = best.max(cur);
            }
        }
        best as u32
    }
}

/// N(t) sampled on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyTrace {
    pub start: f64,
    pub step: f64,
    pub values: Vec<u32>,
}

impl OccupancyTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.start + k as f64 * self.step)
    }
}

/// Samples N(t) at `span.start + k * grid_step` for every grid point inside
/// the log span.
pub fn occupancy_trace(log: &EventLog, grid_step: f64) -> Result<OccupancyTrace, EventLogError> {
    assert!(grid_step > 0.0, "grid_step must be positive");
    let Some(span) = log.span else {
        return Ok(OccupancyTrace {
            start: 0.0,
            step: grid_step,
            values: Vec::new(),
        });
    };
    let stays = stays_from_log(log)?;
    let counter = OccupancyCounter::new(&stays);
    let n = ((span.end - span.start) / grid_step).floor() as usize + 1;
    let values = (0..n)
        .map(|k| counter.at(span.start + k as f64 * grid_step))
        .collect();
    Ok(OccupancyTrace {
        start: span.start,
        step: grid_step,
        values,
    })
}

/// Per-spot event count, keyed by `location/spot`.
pub fn events_per_spot(log: &EventLog) -> BTreeMap<String, usize> {
    log.spot_groups()
        .map(|g| (g[0].spot_label(), g.len()))
        .collect()
}

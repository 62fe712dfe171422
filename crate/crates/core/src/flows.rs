//! Origin-destination trips, relative outflows and synthetic markets.
//!
//! A zone's relative outflow `RO = outflow / inflow` counts rides leaving
//! and entering it within one platform and time window. When fulfillment
//! depends only on the origin and potential demand is balanced, `RO` of
//! the first zone in a two-zone market equals the access ratio `A_1 / A_2`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{Duration, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::PanelRow;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("duplicate zone id `{0}`")]
    DuplicateZone(String),
    #[error("invalid OD matrix: {0}")]
    InvalidOd(String),
    #[error("unknown window `{0}` (expected month, day, hour or all)")]
    Window(String),
    #[error("no platform size for platform `{platform}` in window `{window}`")]
    MissingSize { platform: String, window: String },
}

fn csv_err(e: csv::Error) -> FlowError {
    FlowError::Csv(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TripRecord {
    pub timestamp: NaiveDateTime,
    pub pickup_zone: String,
    pub dropoff_zone: String,
    pub platform: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMeta {
    pub zone: String,
    pub area_sqmi: f64,
    pub group: String,
    pub zone_type: String,
    pub pop_density: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowSpec {
    /// Calendar month, `YYYY-MM`.
    Month,
    /// Calendar day, `YYYY-MM-DD`.
    Day,
    /// Hour of day pooled across dates, `HH`.
    Hour,
    /// The whole sample.
    All,
}

impl WindowSpec {
    pub fn key(&self, ts: &NaiveDateTime) -> String {
        match self {
            Self::Month => ts.format("%Y-%m").to_string(),
            Self::Day => ts.format("%Y-%m-%d").to_string(),
            Self::Hour => ts.format("%H").to_string(),
            Self::All => "all".to_string(),
        }
    }
}

impl std::str::FromStr for WindowSpec {
    type Err = FlowError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "month" => Ok(Self::Month),
            "day" => Ok(Self::Day),
            "hour" => Ok(Self::Hour),
            "all" => Ok(Self::All),
            other => Err(FlowError::Window(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowOptions {
    pub window: WindowSpec,
    /// Drop rides that start and end in the same zone.
    pub exclude_intra: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { window: WindowSpec::Month, exclude_intra: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub zone: String,
    pub platform: String,
    pub window: String,
    pub outflow: u64,
    pub inflow: u64,
    pub ro: f64,
    pub dropoff_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedTrip {
    /// Index into the input, or the CSV line when read from a file.
    pub position: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowSummary {
    pub stats: Vec<FlowStats>,
    pub rejected: Vec<RejectedTrip>,
    /// Cells with outgoing rides but no incoming ones.
    pub dropped_zero_inflow: usize,
    pub intra_zone_trips: usize,
}

fn zone_index(zones: &[ZoneMeta]) -> Result<BTreeMap<&str, &ZoneMeta>, FlowError> {
    let mut index = BTreeMap::new();
    for z in zones {
        if index.insert(z.zone.as_str(), z).is_some() {
            return Err(FlowError::DuplicateZone(z.zone.clone()));
        }
    }
    Ok(index)
}

/// Counts outgoing and incoming rides per (zone, platform, window).
pub fn compute_flows(trips: &[TripRecord], zones: &[ZoneMeta], opts: FlowOptions) -> Result<FlowSummary, FlowError> {
    let index = zone_index(zones)?;
    let mut counts: BTreeMap<(String, String, String), (u64, u64)> = BTreeMap::new();
    let mut summary = FlowSummary::default();
    for (pos, trip) in trips.iter().enumerate() {
        let unknown: Vec<&str> = [&trip.pickup_zone, &trip.dropoff_zone]
            .into_iter()
            .filter(|z| !index.contains_key(z.as_str()))
            .map(String::as_str)
            .collect();
        if !unknown.is_empty() {
            summary.rejected.push(RejectedTrip { position: pos as u64, reason: format!("unknown zone {}", unknown.join(", ")) });
            continue;
        }
        if trip.pickup_zone == trip.dropoff_zone {
            summary.intra_zone_trips += 1;
            if opts.exclude_intra {
                continue;
            }
        }
        let window = opts.window.key(&trip.timestamp);
        counts.entry((trip.pickup_zone.clone(), trip.platform.clone(), window.clone())).or_default().0 += 1;
        counts.entry((trip.dropoff_zone.clone(), trip.platform.clone(), window)).or_default().1 += 1;
    }
    for ((zone, platform, window), (outflow, inflow)) in counts {
        if inflow == 0 {
            summary.dropped_zero_inflow += 1;
            continue;
        }
        let area = index[zone.as_str()].area_sqmi;
        summary.stats.push(FlowStats {
            ro: outflow as f64 / inflow as f64,
            dropoff_density: inflow as f64 / area,
            zone,
            platform,
            window,
            outflow,
            inflow,
        });
    }
    if summary.dropped_zero_inflow > 0 {
        log::warn!("dropped {} zero-inflow cells", summary.dropped_zero_inflow);
    }
    Ok(summary)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

#[derive(Deserialize)]
struct RawTrip {
    pickup_zone: String,
    dropoff_zone: String,
    platform: String,
    timestamp: String,
}

/// Reads `pickup_zone,dropoff_zone,platform,timestamp`. Rows with empty
/// fields or unparseable timestamps are returned as rejections.
pub fn read_trips<R: Read>(input: R) -> Result<(Vec<TripRecord>, Vec<RejectedTrip>), FlowError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let mut trips = Vec::new();
    let mut rejected = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut reject = |reason: String| rejected.push(RejectedTrip { position: line, reason });
        let raw: RawTrip = match record.deserialize(Some(&headers)) {
            Ok(r) => r,
            Err(e) => {
                reject(e.to_string());
                continue;
            }
        };
        if raw.pickup_zone.is_empty() || raw.dropoff_zone.is_empty() || raw.platform.is_empty() {
            reject("empty zone or platform".into());
            continue;
        }
        match parse_timestamp(&raw.timestamp) {
            Some(timestamp) => trips.push(TripRecord {
                timestamp,
                pickup_zone: raw.pickup_zone,
                dropoff_zone: raw.dropoff_zone,
                platform: raw.platform,
            }),
            None => reject(format!("bad timestamp `{}`", raw.timestamp)),
        }
    }
    Ok((trips, rejected))
}

pub fn write_trips<W: Write>(trips: &[TripRecord], out: W) -> Result<(), FlowError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pickup_zone", "dropoff_zone", "platform", "timestamp"]).map_err(csv_err)?;
    for t in trips {
        let ts = t.timestamp.format(TIMESTAMP_FORMAT).to_string();
        w.write_record([t.pickup_zone.as_str(), t.dropoff_zone.as_str(), t.platform.as_str(), ts.as_str()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FlowError::Csv(e.to_string()))
}

/// Reads `zone,area_sqmi,group,zone_type,pop_density` (density may be empty).
pub fn read_zones<R: Read>(input: R) -> Result<Vec<ZoneMeta>, FlowError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut zones = Vec::new();
    for record in reader.deserialize::<ZoneMeta>() {
        let z = record.map_err(|e| FlowError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        if !(z.area_sqmi.is_finite() && z.area_sqmi > 0.0) {
            return Err(FlowError::Parse { line: reader.position().line(), message: format!("zone `{}` area must be positive", z.zone) });
        }
        zones.push(z);
    }
    zone_index(&zones)?;
    Ok(zones)
}

pub fn write_zones<W: Write>(zones: &[ZoneMeta], out: W) -> Result<(), FlowError> {
    let mut w = csv::Writer::from_writer(out);
    for z in zones {
        w.serialize(z).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FlowError::Csv(e.to_string()))
}

pub fn write_flows<W: Write>(stats: &[FlowStats], out: W) -> Result<(), FlowError> {
    let mut w = csv::Writer::from_writer(out);
    for s in stats {
        w.serialize(s).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FlowError::Csv(e.to_string()))
}

pub fn read_flows<R: Read>(input: R) -> Result<Vec<FlowStats>, FlowError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| FlowError::Parse { line: e.position().map(|p| p.line()).unwrap_or(0), message: e.to_string() }))
        .collect()
}

/// Potential demand between zones and the access each origin provides.
#[derive(Debug, Clone, PartialEq)]
pub struct OdMatrix {
    pub zones: Vec<String>,
    /// `demand[i][j]`: potential i-to-j rides per hour.
    pub demand: Vec<Vec<f64>>,
    pub access: Vec<f64>,
}

impl OdMatrix {
    pub fn new(zones: Vec<String>, demand: Vec<Vec<f64>>, access: Vec<f64>) -> Result<Self, FlowError> {
        let n = zones.len();
        let bad = |m: String| Err(FlowError::InvalidOd(m));
        if demand.len() != n || demand.iter().any(|r| r.len() != n) {
            return bad(format!("demand must be {n}x{n}"));
        }
        if access.len() != n {
            return bad(format!("expected {n} access values, got {}", access.len()));
        }
        if demand.iter().flatten().any(|&l| !(l.is_finite() && l >= 0.0)) {
            return bad("demand rates must be finite and non-negative".into());
        }
        if let Some(a) = access.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return bad(format!("access must lie in (0, 1], got {a}"));
        }
        if zones.iter().collect::<BTreeSet<_>>().len() != n {
            return bad("zone ids must be unique".into());
        }
        Ok(Self { zones, demand, access })
    }

    /// Fulfilled rides per hour, `A_i * demand[i][j]`.
    pub fn expected_flows(&self) -> Vec<Vec<f64>> {
        self.demand.iter().zip(&self.access).map(|(row, a)| row.iter().map(|l| a * l).collect()).collect()
    }

    /// Expected relative outflow of each zone.
    pub fn expected_ro(&self, exclude_intra: bool) -> Vec<f64> {
        let r = self.expected_flows();
        let n = self.zones.len();
        (0..n)
            .map(|i| {
                let keep = |j: usize| !(exclude_intra && i == j);
                let out: f64 = (0..n).filter(|&j| keep(j)).map(|j| r[i][j]).sum();
                let inn: f64 = (0..n).filter(|&j| keep(j)).map(|j| r[j][i]).sum();
                out / inn
            })
            .collect()
    }

    /// External driver flow `sum_j r_ji - sum_j r_ij` that keeps each zone's
    /// driver stock constant; sums to zero across zones.
    pub fn net_entry(&self) -> Vec<f64> {
        let r = self.expected_flows();
        let n = self.zones.len();
        (0..n).map(|i| (0..n).map(|j| r[j][i] - r[i][j]).sum()).collect()
    }
}

/// Poisson trip counts with mean `hours * A_i * demand[i][j]` per OD pair
/// and timestamps uniform over `[start, start + hours)`, sorted by time.
pub fn synth_market(od: &OdMatrix, platform: &str, start: NaiveDateTime, hours: f64, seed: u64) -> Vec<TripRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon_secs = hours * 3600.0;
    let flows = od.expected_flows();
    let mut trips = Vec::new();
    for (i, row) in flows.iter().enumerate() {
        for (j, &rate) in row.iter().enumerate() {
            let mean = rate * hours;
            if mean <= 0.0 {
                continue;
            }
            let count = Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as u64;
            for _ in 0..count {
                let offset = (rng.random::<f64>() * horizon_secs).floor() as i64;
                trips.push(TripRecord {
                    timestamp: start + Duration::seconds(offset),
                    pickup_zone: od.zones[i].clone(),
                    dropoff_zone: od.zones[j].clone(),
                    platform: platform.to_string(),
                });
            }
        }
    }
    trips.sort();
    trips
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub estimate: f64,
    /// Delta-method standard error treating counts as independent Poisson.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessRatioReport {
    /// `A_1 / A_2` under balanced demand: the zone's relative outflow.
    pub balanced: Option<RatioEstimate>,
    /// `(A_1 / A_2) / (A_1' / A_2')` under similarly unbalanced demand.
    pub double_ratio: Option<RatioEstimate>,
    pub flags: Vec<String>,
}

fn ratio_of_counts(num: u64, den: u64) -> Option<RatioEstimate> {
    if num == 0 || den == 0 {
        return None;
    }
    let estimate = num as f64 / den as f64;
    Some(RatioEstimate { estimate, se: estimate * (1.0 / num as f64 + 1.0 / den as f64).sqrt() })
}

/// Access-ratio estimates from zone 1's flows in a two-zone market, and
/// optionally from a second snapshot (another platform or period) of the
/// same two zones.
pub fn access_ratio_estimates(first: &FlowStats, second: Option<&FlowStats>) -> AccessRatioReport {
    let mut flags = Vec::new();
    let balanced = ratio_of_counts(first.outflow, first.inflow);
    if balanced.is_none() {
        flags.push(format!("zone {} has a zero count in window {}", first.zone, first.window));
    }
    let double_ratio = second.and_then(|s| {
        if s.zone != first.zone {
            flags.push(format!("snapshots describe different zones ({} vs {})", first.zone, s.zone));
        }
        match (balanced, ratio_of_counts(s.outflow, s.inflow)) {
            (Some(a), Some(b)) => {
                let estimate = a.estimate / b.estimate;
                let rel = ((a.se / a.estimate).powi(2) + (b.se / b.estimate).powi(2)).sqrt();
                Some(RatioEstimate { estimate, se: estimate * rel })
            }
            _ => {
                flags.push("zero denominator in the second snapshot".into());
                None
            }
        }
    });
    AccessRatioReport { balanced, double_ratio, flags }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PanelBuild {
    pub rows: Vec<PanelRow>,
    pub skipped_missing_density: usize,
    pub skipped_undefined_ro: usize,
}

/// Regression rows from flow cells. `platform_sizes` maps
/// `(platform, window)` to total rides.
pub fn build_panel(
    stats: &[FlowStats],
    zones: &[ZoneMeta],
    platform_sizes: &BTreeMap<(String, String), f64>,
) -> Result<PanelBuild, FlowError> {
    let index = zone_index(zones)?;
    let mut build = PanelBuild::default();
    for s in stats {
        let Some(zone) = index.get(s.zone.as_str()) else {
            continue;
        };
        if !(s.ro > 0.0 && s.ro.is_finite() && s.dropoff_density > 0.0) {
            build.skipped_undefined_ro += 1;
            continue;
        }
        let Some(rho) = zone.pop_density.filter(|r| *r > 0.0) else {
            build.skipped_missing_density += 1;
            continue;
        };
        let size = *platform_sizes
            .get(&(s.platform.clone(), s.window.clone()))
            .ok_or_else(|| FlowError::MissingSize { platform: s.platform.clone(), window: s.window.clone() })?;
        let (log_d, log_rho, log_s) = (s.dropoff_density.ln(), rho.ln(), size.ln());
        let mut row = PanelRow::default();
        for (name, v) in [
            ("ro", s.ro),
            ("log_ro", s.ro.ln()),
            ("log_d", log_d),
            ("log_d_sq", log_d * log_d),
            ("log_rho", log_rho),
            ("s", size),
            ("log_s", log_s),
            ("log_s_x_log_rho", log_s * log_rho),
        ] {
            row.values.insert(name.to_string(), v);
        }
        for (name, v) in [
            ("zone", s.zone.clone()),
            ("group", zone.group.clone()),
            ("zone_type", zone.zone_type.clone()),
            ("platform", s.platform.clone()),
            ("window", s.window.clone()),
            ("group_platform", format!("{}|{}", zone.group, s.platform)),
            ("group_window", format!("{}|{}", zone.group, s.window)),
            ("platform_window", format!("{}|{}", s.platform, s.window)),
        ] {
            row.keys.insert(name.to_string(), v);
        }
        build.rows.push(row);
    }
    Ok(build)
}

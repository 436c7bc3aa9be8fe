//! Tower data ingestion: parsing, short-gap imputation, long-gap detection and
//! midnight-aligned interval averaging.
//!
//! A [`WindSeries`] is stored column-wise on a regular time grid
//! (`start + i * cadence`); rows absent from the source file become missing
//! samples so the grid never has holes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Timestamp format used by every file this crate writes.
pub const ISO_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindSample {
    pub timestamp: DateTime<Utc>,
    pub speed: Option<f64>,
    pub direction: Option<f64>,
    pub measurement_height: f64,
}

/// Half-open `[start, end)` range of long-missing data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Gap {
    pub fn duration_s(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }

    pub fn intersects(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    site_id: String,
    height_m: f64,
    start: DateTime<Utc>,
    cadence_s: u32,
    speeds: Vec<Option<f64>>,
    directions: Vec<Option<f64>>,
    gaps: Vec<Gap>,
}

impl WindSeries {
    /// Builds a gap-free series. `directions` may be empty when the source has
    /// no direction channel.
    pub fn new(
        site_id: impl Into<String>,
        height_m: f64,
        start: DateTime<Utc>,
        cadence_s: u32,
        speeds: Vec<Option<f64>>,
        directions: Vec<Option<f64>>,
    ) -> Result<Self> {
        if cadence_s == 0 {
            return Err(Error::Config("cadence must be a positive number of seconds".into()));
        }
        if !(height_m.is_finite() && height_m > 0.0) {
            return Err(Error::Domain(format!("measurement height {height_m} must be positive")));
        }
        let directions = if directions.is_empty() {
            vec![None; speeds.len()]
        } else {
            directions
        };
        if directions.len() != speeds.len() {
            return Err(Error::Config(format!(
                "{} directions for {} speeds",
                directions.len(),
                speeds.len()
            )));
        }
        if let Some(v) = speeds.iter().flatten().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("wind speed {v} is not a finite non-negative value")));
        }
        if let Some(d) = directions.iter().flatten().find(|d| !(0.0..360.0).contains(*d)) {
            return Err(Error::Domain(format!("direction {d} outside [0, 360)")));
        }
        Ok(Self {
            site_id: site_id.into(),
            height_m,
            start,
            cadence_s,
            speeds,
            directions,
            gaps: Vec::new(),
        })
    }

    /// Replaces the gap list after checking it is sorted, disjoint and only
    /// covers missing samples.
    pub fn with_gaps(mut self, gaps: Vec<Gap>) -> Result<Self> {
        for pair in gaps.windows(2) {
            if pair[0].end > pair[1].start {
                return Err(Error::Config("gap ranges must be sorted and disjoint".into()));
            }
        }
        for gap in &gaps {
            if gap.end <= gap.start {
                return Err(Error::Config(format!("empty gap at {}", gap.start)));
            }
            let range = self.index_range(gap.start, gap.end);
            if self.speeds[range].iter().any(Option::is_some) {
                return Err(Error::Config(format!(
                    "gap starting {} covers non-missing samples",
                    gap.start
                )));
            }
        }
        self.gaps = gaps;
        Ok(self)
    }

    pub fn site_id(&self) -> &str {
        &self.site_id
    }

    pub fn height_m(&self) -> f64 {
        self.height_m
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn cadence_s(&self) -> u32 {
        self.cadence_s
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn speeds(&self) -> &[Option<f64>] {
        &self.speeds
    }

    pub fn directions(&self) -> &[Option<f64>] {
        &self.directions
    }

    pub fn gaps(&self) -> &[Gap] {
        &self.gaps
    }

    pub fn has_directions(&self) -> bool {
        self.directions.iter().any(Option::is_some)
    }

    pub fn missing_count(&self) -> usize {
        self.speeds.iter().filter(|v| v.is_none()).count()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + chrono::Duration::seconds(index as i64 * self.cadence_s as i64)
    }

    /// End of the covered span (exclusive).
    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.len())
    }

    pub fn samples(&self) -> impl Iterator<Item = WindSample> + '_ {
        (0..self.len()).map(move |i| WindSample {
            timestamp: self.timestamp(i),
            speed: self.speeds[i],
            direction: self.directions[i],
            measurement_height: self.height_m,
        })
    }

    /// Indices of the samples whose timestamps fall in `[from, to)`.
    pub fn index_range(&self, from: DateTime<Utc>, to: DateTime<Utc>) -> Range<usize> {
        let cad = self.cadence_s as i64;
        let rel = |t: DateTime<Utc>| (t - self.start).num_seconds();
        let lo = ceil_div(rel(from), cad).clamp(0, self.len() as i64) as usize;
        let hi = ceil_div(rel(to), cad).clamp(0, self.len() as i64) as usize;
        lo..hi.max(lo)
    }

    /// Sample ranges grouped by UTC calendar day, in time order.
    pub fn day_ranges(&self) -> Vec<(NaiveDate, Range<usize>)> {
        day_ranges(self.start, self.cadence_s, self.len())
    }

    /// Same grid and metadata with the speeds replaced. Gaps are kept.
    pub fn with_speeds(&self, speeds: Vec<Option<f64>>, height_m: f64) -> Result<Self> {
        let mut out = Self::new(
            self.site_id.clone(),
            height_m,
            self.start,
            self.cadence_s,
            speeds,
            self.directions.clone(),
        )?;
        out.gaps = self.gaps.clone();
        Ok(out)
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Splits a regular grid into per-day index ranges.
pub fn day_ranges(start: DateTime<Utc>, cadence_s: u32, len: usize) -> Vec<(NaiveDate, Range<usize>)> {
    let mut out: Vec<(NaiveDate, Range<usize>)> = Vec::new();
    let t0 = start.timestamp();
    let cad = cadence_s as i64;
    let mut i = 0usize;
    while i < len {
        let t = t0 + i as i64 * cad;
        let day_start = t - t.rem_euclid(SECONDS_PER_DAY);
        let next_day = day_start + SECONDS_PER_DAY;
        let end = (ceil_div(next_day - t0, cad) as usize).min(len).max(i + 1);
        let date = DateTime::from_timestamp(day_start, 0)
            .expect("timestamp in range")
            .date_naive();
        out.push((date, i..end));
        i = end;
    }
    out
}

// ---------------------------------------------------------------------------
// Schema-driven parsing

fn default_delimiter() -> char {
    ','
}

fn default_timestamp_format() -> String {
    "rfc3339".into()
}

/// Column mapping and encoding rules for one tower file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerSchema {
    pub site_id: String,
    pub timestamp_column: String,
    /// Optional separate time-of-day column, joined to the timestamp column
    /// with a single space before parsing.
    #[serde(default)]
    pub time_column: Option<String>,
    pub speed_column: String,
    #[serde(default)]
    pub direction_column: Option<String>,
    #[serde(default)]
    pub height_column: Option<String>,
    #[serde(default)]
    pub height_m: Option<f64>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// `rfc3339`, `unix`, or a chrono `strftime` pattern interpreted as UTC.
    #[serde(default = "default_timestamp_format")]
    pub timestamp_format: String,
    /// Field values that encode a missing observation, compared after trimming.
    #[serde(default)]
    pub sentinels: Vec<String>,
    /// Native cadence; inferred from the smallest timestamp step when absent.
    #[serde(default)]
    pub cadence_s: Option<u32>,
}

impl TowerSchema {
    /// Schema matching the normalized CSV written by [`write_normalized_csv`].
    pub fn normalized(site_id: impl Into<String>, height_m: f64, cadence_s: u32) -> Self {
        Self {
            site_id: site_id.into(),
            timestamp_column: "timestamp".into(),
            time_column: None,
            speed_column: "speed".into(),
            direction_column: Some("direction".into()),
            height_column: None,
            height_m: Some(height_m),
            delimiter: ',',
            timestamp_format: "rfc3339".into(),
            sentinels: vec![String::new()],
            cadence_s: Some(cadence_s),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn parse_timestamp(&self, raw: &str) -> std::result::Result<DateTime<Utc>, String> {
        let raw = raw.trim();
        match self.timestamp_format.as_str() {
            "rfc3339" => DateTime::parse_from_rfc3339(raw)
                .map(|t| t.with_timezone(&Utc))
                .map_err(|e| format!("bad timestamp `{raw}`: {e}")),
            "unix" => raw
                .parse::<i64>()
                .ok()
                .and_then(|s| DateTime::from_timestamp(s, 0))
                .ok_or_else(|| format!("bad unix timestamp `{raw}`")),
            fmt => NaiveDateTime::parse_from_str(raw, fmt)
                .map(|t| Utc.from_utc_datetime(&t))
                .map_err(|e| format!("bad timestamp `{raw}` for format `{fmt}`: {e}")),
        }
    }

    fn value(&self, raw: &str) -> Option<f64> {
        let raw = raw.trim();
        if self.sentinels.iter().any(|s| s.trim() == raw) {
            return None;
        }
        raw.parse::<f64>().ok().filter(|v| v.is_finite())
    }

    fn speed(&self, raw: &str) -> Option<f64> {
        self.value(raw).filter(|v| *v >= 0.0)
    }

    fn direction(&self, raw: &str) -> Option<f64> {
        match self.value(raw) {
            Some(d) if (0.0..360.0).contains(&d) => Some(d),
            Some(360.0) => Some(0.0),
            _ => None,
        }
    }
}

struct Row {
    line: u64,
    timestamp: DateTime<Utc>,
    speed: Option<f64>,
    direction: Option<f64>,
}

pub fn parse_tower_file(path: impl AsRef<Path>, schema: &TowerSchema) -> Result<WindSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tower_reader(BufReader::new(file), path, schema)
}

/// Parses delimiter-separated text. `origin` only labels error messages.
pub fn parse_tower_reader<R: Read>(reader: R, origin: &Path, schema: &TowerSchema) -> Result<WindSeries> {
    if !schema.delimiter.is_ascii() {
        return Err(Error::Config(format!("delimiter {:?} is not ASCII", schema.delimiter)));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let header_err = |message: String| Error::Header {
        path: origin.to_path_buf(),
        message,
    };
    let headers = rdr.headers().map_err(|e| header_err(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| header_err(format!("missing column `{name}`")))
    };
    let ts_col = column(&schema.timestamp_column)?;
    let time_col = schema.time_column.as_deref().map(column).transpose()?;
    let speed_col = column(&schema.speed_column)?;
    let dir_col = schema.direction_column.as_deref().map(column).transpose()?;
    let height_col = schema.height_column.as_deref().map(column).transpose()?;
    if height_col.is_none() && schema.height_m.is_none() {
        return Err(Error::Config(
            "schema must give either height_column or height_m".into(),
        ));
    }

    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut rows = Vec::new();
    let mut column_height = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let raw_ts = match time_col {
            Some(tc) => format!("{} {}", field(ts_col), field(tc)),
            None => field(ts_col).to_string(),
        };
        let timestamp = schema
            .parse_timestamp(&raw_ts)
            .map_err(|m| parse_err(line, m))?;
        if let Some(hc) = height_col {
            let h = schema
                .value(field(hc))
                .filter(|h| *h > 0.0)
                .ok_or_else(|| parse_err(line, format!("bad height `{}`", field(hc))))?;
            if let Some(prev) = column_height.filter(|prev| *prev != h) {
                return Err(parse_err(line, format!("height {h} differs from {prev}")));
            }
            column_height = Some(h);
        }
        rows.push(Row {
            line,
            timestamp,
            speed: schema.speed(field(speed_col)),
            direction: dir_col.and_then(|dc| schema.direction(field(dc))),
        });
    }
    if rows.is_empty() {
        return Err(header_err("no data rows".into()));
    }

    rows.sort_by_key(|r| r.timestamp);
    for pair in rows.windows(2) {
        if pair[0].timestamp == pair[1].timestamp {
            let line = pair[0].line.max(pair[1].line);
            return Err(parse_err(
                line,
                format!("duplicate timestamp {}", pair[1].timestamp.format(ISO_FORMAT)),
            ));
        }
    }

    let cadence_s = match schema.cadence_s {
        Some(c) => c,
        None => rows
            .windows(2)
            .map(|p| (p[1].timestamp - p[0].timestamp).num_seconds())
            .min()
            .map(|c| c as u32)
            .ok_or_else(|| Error::Config("cannot infer cadence from a single row".into()))?,
    };
    if cadence_s == 0 {
        return Err(Error::Config("cadence must be positive".into()));
    }

    let start = rows[0].timestamp;
    let last = rows[rows.len() - 1].timestamp;
    let cad = cadence_s as i64;
    let n = ((last - start).num_seconds() / cad + 1) as usize;
    let mut speeds = vec![None; n];
    let mut directions = vec![None; n];
    for row in &rows {
        let offset = (row.timestamp - start).num_seconds();
        if offset % cad != 0 {
            return Err(parse_err(
                row.line,
                format!("timestamp {} is off the {cadence_s} s grid", row.timestamp.format(ISO_FORMAT)),
            ));
        }
        let i = (offset / cad) as usize;
        speeds[i] = row.speed;
        directions[i] = row.direction;
    }
    let height = column_height.or(schema.height_m).expect("checked above");
    WindSeries::new(schema.site_id.clone(), height, start, cadence_s, speeds, directions)
}

// ---------------------------------------------------------------------------
// Normalized output

/// Sidecar metadata written next to a normalized CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapManifest {
    pub site_id: String,
    pub measurement_height_m: f64,
    pub cadence_s: u32,
    pub start: DateTime<Utc>,
    pub n_samples: usize,
    pub gaps: Vec<Gap>,
}

impl GapManifest {
    pub fn of(series: &WindSeries) -> Self {
        Self {
            site_id: series.site_id.clone(),
            measurement_height_m: series.height_m,
            cadence_s: series.cadence_s,
            start: series.start,
            n_samples: series.len(),
            gaps: series.gaps.clone(),
        }
    }
}

/// Writes `timestamp,speed,direction,missing`. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_normalized_csv<W: Write>(series: &WindSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "speed", "direction", "missing"])?;
    for s in series.samples() {
        w.write_record([
            s.timestamp.format(ISO_FORMAT).to_string(),
            s.speed.map(|v| v.to_string()).unwrap_or_default(),
            s.direction.map(|v| v.to_string()).unwrap_or_default(),
            if s.speed.is_none() { "1" } else { "0" }.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<normalized csv>", e))?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.gaps.json` into `dir`.
pub fn save_series(series: &WindSeries, dir: &Path, stem: &str) -> Result<()> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_normalized_csv(series, BufWriter::new(file))?;
    let manifest_path = dir.join(format!("{stem}.gaps.json"));
    let text = serde_json::to_string_pretty(&GapManifest::of(series))?;
    std::fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))
}

pub fn load_series(dir: &Path, stem: &str) -> Result<WindSeries> {
    let manifest_path = dir.join(format!("{stem}.gaps.json"));
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: GapManifest = serde_json::from_str(&text)?;
    let schema = TowerSchema::normalized(
        manifest.site_id.clone(),
        manifest.measurement_height_m,
        manifest.cadence_s,
    );
    let series = parse_tower_file(dir.join(format!("{stem}.csv")), &schema)?;
    if series.start != manifest.start || series.len() != manifest.n_samples {
        return Err(Error::Config(format!(
            "{} does not match its manifest",
            manifest_path.display()
        )));
    }
    series.with_gaps(manifest.gaps)
}

// ---------------------------------------------------------------------------
// Imputation and gaps

/// Maximal runs of missing speed as index ranges.
fn missing_runs(speeds: &[Option<f64>]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < speeds.len() {
        if speeds[i].is_none() {
            let j = speeds[i..].iter().position(Option::is_some).map_or(speeds.len(), |k| i + k);
            runs.push(i..j);
            i = j;
        } else {
            i += 1;
        }
    }
    runs
}

fn window_mean(speeds: &[Option<f64>], t: usize) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0u32);
    for offset in [-2i64, -1, 1, 2] {
        let j = t as i64 + offset;
        if j < 0 || j >= speeds.len() as i64 {
            continue;
        }
        if let Some(v) = speeds[j as usize] {
            sum += v;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Fills missing runs of at most `max_run` samples from the four-point
/// neighbourhood `{t-2, t-1, t+1, t+2}`.
///
/// Runs are filled left to right so each imputed value feeds the next one.
/// A run at the head of the series has no left neighbour and is filled right
/// to left instead. Samples inside declared gaps are never touched. Every
/// missing run left afterwards becomes a gap.
pub fn impute_short_gaps(series: &WindSeries, max_run: usize) -> Result<WindSeries> {
    if max_run == 0 {
        return Err(Error::Config("max_run must be at least 1".into()));
    }
    if series.speeds.iter().all(Option::is_none) {
        return Err(Error::AllMissing(series.site_id.clone()));
    }
    let mut speeds = series.speeds.clone();
    let protected: Vec<Range<usize>> = series
        .gaps
        .iter()
        .map(|g| series.index_range(g.start, g.end))
        .collect();

    for run in missing_runs(&series.speeds) {
        if run.len() > max_run || protected.iter().any(|p| p.start < run.end && run.start < p.end) {
            continue;
        }
        let order: Vec<usize> = if run.start == 0 {
            run.clone().rev().collect()
        } else {
            run.clone().collect()
        };
        for t in order {
            speeds[t] = window_mean(&speeds, t);
        }
    }

    let mut out = series.clone();
    out.speeds = speeds;
    out.gaps = missing_runs(&out.speeds)
        .into_iter()
        .map(|r| Gap {
            start: out.timestamp(r.start),
            end: out.timestamp(r.end),
        })
        .collect();
    Ok(out)
}

/// Maximal missing runs lasting at least `min_gap_s`.
pub fn detect_long_gaps(series: &WindSeries, min_gap_s: i64) -> Result<Vec<Gap>> {
    if min_gap_s < series.cadence_s as i64 {
        return Err(Error::Config(format!(
            "minimum gap {min_gap_s} s is shorter than the {} s cadence",
            series.cadence_s
        )));
    }
    Ok(missing_runs(&series.speeds)
        .into_iter()
        .filter(|r| r.len() as i64 * series.cadence_s as i64 >= min_gap_s)
        .map(|r| Gap {
            start: series.timestamp(r.start),
            end: series.timestamp(r.end),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Averaging

/// Vector mean of compass directions in degrees; `None` when the resultant
/// vanishes or no direction is available.
pub fn circular_mean_deg(directions: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c, mut n) = (0.0f64, 0.0f64, 0usize);
    for d in directions {
        let r = d.to_radians();
        s += r.sin();
        c += r.cos();
        n += 1;
    }
    if n == 0 || s.hypot(c) <= 1e-12 * n as f64 {
        return None;
    }
    let mut deg = s.atan2(c).to_degrees().rem_euclid(360.0);
    if deg >= 360.0 {
        deg -= 360.0;
    }
    Some(deg)
}

/// Averages into windows of `interval_s` aligned to UTC midnight.
///
/// A window yields a value only when it holds a full complement of
/// non-missing samples and touches no gap. Speeds use the scalar mean,
/// directions the circular mean. No gust factor is applied.
pub fn resample_average(series: &WindSeries, interval_s: u32) -> Result<WindSeries> {
    let cad = series.cadence_s;
    if interval_s == 0 || !interval_s.is_multiple_of(cad) {
        return Err(Error::Config(format!(
            "averaging interval {interval_s} s is not a positive multiple of the {cad} s cadence"
        )));
    }
    if SECONDS_PER_DAY % interval_s as i64 != 0 {
        return Err(Error::Config(format!(
            "averaging interval {interval_s} s does not tile a day"
        )));
    }
    let per_window = (interval_s / cad) as usize;
    let interval = interval_s as i64;
    let t0 = series.start.timestamp();
    let first = t0 - t0.rem_euclid(interval);
    let end = series.end().timestamp();
    let n_out = ceil_div(end - first, interval).max(0) as usize;

    let mut speeds = Vec::with_capacity(n_out);
    let mut directions = Vec::with_capacity(n_out);
    let at = |s: i64| DateTime::from_timestamp(s, 0).expect("timestamp in range");
    for k in 0..n_out {
        let ws = at(first + k as i64 * interval);
        let we = at(first + (k as i64 + 1) * interval);
        let range = series.index_range(ws, we);
        let complete = range.len() == per_window
            && series.speeds[range.clone()].iter().all(Option::is_some)
            && !series.gaps.iter().any(|g| g.intersects(ws, we));
        if complete {
            let sum: f64 = series.speeds[range.clone()].iter().flatten().sum();
            speeds.push(Some(sum / per_window as f64));
            directions.push(circular_mean_deg(series.directions[range].iter().flatten().copied()));
        } else {
            speeds.push(None);
            directions.push(None);
        }
    }

    let mut out = WindSeries::new(
        series.site_id.clone(),
        series.height_m,
        at(first),
        interval_s,
        speeds,
        directions,
    )?;
    let out_end = out.end().timestamp();
    let mut gaps: Vec<Gap> = Vec::new();
    for g in &series.gaps {
        let gs = g.start.timestamp();
        let ge = g.end.timestamp();
        let s = (gs - (gs - first).rem_euclid(interval)).max(first);
        let e = (first + ceil_div(ge - first, interval) * interval).min(out_end);
        if e <= s {
            continue;
        }
        match gaps.last_mut() {
            Some(last) if last.end.timestamp() >= s => last.end = at(e.max(last.end.timestamp())),
            _ => gaps.push(Gap { start: at(s), end: at(e) }),
        }
    }
    out.gaps = gaps;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Missing-data accounting

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthMissing {
    pub expected: u64,
    pub missing: u64,
    pub fraction: f64,
}

fn month_start(year: i32, month: u32) -> i64 {
    NaiveDate::from_ymd_opt(year, month, 1)
        .expect("valid month")
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
        .and_utc()
        .timestamp()
}

fn next_month(year: i32, month: u32) -> (i32, u32) {
    if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    }
}

/// Missing fraction per `YYYY-MM`, counting every slot of the series grid
/// inside the month. Slots the series does not cover count as missing.
pub fn missing_fraction_by_month(series: &WindSeries) -> BTreeMap<String, MonthMissing> {
    let mut out = BTreeMap::new();
    if series.is_empty() {
        return out;
    }
    let cad = series.cadence_s as i64;
    let t0 = series.start.timestamp();
    let last = series.timestamp(series.len() - 1);
    let (mut y, mut m) = (series.start.year(), series.start.month());
    loop {
        let ms = month_start(y, m);
        let (ny, nm) = next_month(y, m);
        let me = month_start(ny, nm);
        // grid slots t0 + k*cad in [ms, me)
        let expected = (ceil_div(me - t0, cad) - ceil_div(ms - t0, cad)) as u64;
        let range = series.index_range(at_utc(ms), at_utc(me));
        let present = series.speeds[range].iter().filter(|v| v.is_some()).count() as u64;
        let missing = expected - present;
        let fraction = if expected == 0 { 0.0 } else { missing as f64 / expected as f64 };
        out.insert(
            format!("{y:04}-{m:02}"),
            MonthMissing {
                expected,
                missing,
                fraction,
            },
        );
        if (y, m) == (last.year(), last.month()) {
            break;
        }
        (y, m) = (ny, nm);
    }
    out
}

/// Pooled fraction over all months.
pub fn overall_missing_fraction(months: &BTreeMap<String, MonthMissing>) -> f64 {
    let expected: u64 = months.values().map(|m| m.expected).sum();
    let missing: u64 = months.values().map(|m| m.missing).sum();
    if expected == 0 {
        0.0
    } else {
        missing as f64 / expected as f64
    }
}

fn at_utc(s: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(s, 0).expect("timestamp in range")
}

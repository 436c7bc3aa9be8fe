//! Turbine power curves and wind-to-power conversion.

use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::WindSeries;

/// Bin width power curves are normalized to, in m/s.
pub const DEFAULT_BIN_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub speed_ms: f64,
    pub power_kw: f64,
}

impl CurvePoint {
    pub fn new(speed_ms: f64, power_kw: f64) -> Self {
        Self { speed_ms, power_kw }
    }
}

/// Piecewise-linear evaluation, clamped to the end points outside the curve.
pub fn interpolate(curve: &[CurvePoint], v: f64) -> f64 {
    let idx = curve.partition_point(|p| p.speed_ms <= v);
    if idx == 0 {
        return curve[0].power_kw;
    }
    if idx == curve.len() {
        return curve[curve.len() - 1].power_kw;
    }
    let (a, b) = (curve[idx - 1], curve[idx]);
    let t = (v - a.speed_ms) / (b.speed_ms - a.speed_ms);
    a.power_kw + t * (b.power_kw - a.power_kw)
}

/// Resamples a curve onto a `bin_width` grid anchored at its first speed.
/// The last point is kept even when it falls between grid lines.
pub fn rebin_curve(curve: &[CurvePoint], bin_width: f64) -> Result<Vec<CurvePoint>> {
    if curve.len() < 2 {
        return Err(Error::Domain(format!("curve needs at least 2 points, got {}", curve.len())));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Domain(format!("bin width {bin_width} must be positive")));
    }
    let first = curve[0].speed_ms;
    let last = curve[curve.len() - 1].speed_ms;
    let eps = 1e-9 * bin_width;
    let mut out = Vec::new();
    for k in 0.. {
        let v = first + k as f64 * bin_width;
        if v >= last - eps {
            break;
        }
        out.push(CurvePoint::new(v, interpolate(curve, v)));
    }
    out.push(curve[curve.len() - 1]);
    Ok(out)
}

/// On-disk turbine entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineRecord {
    pub id: String,
    pub hub_height_m: f64,
    pub cut_in_ms: f64,
    pub rated_ms: f64,
    pub cut_out_ms: f64,
    pub nominal_kw: f64,
    pub curve: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TurbineRecord", into = "TurbineRecord")]
pub struct TurbineSpec {
    pub id: String,
    pub hub_height_m: f64,
    pub cut_in_ms: f64,
    pub rated_ms: f64,
    pub cut_out_ms: f64,
    pub nominal_kw: f64,
    curve: Vec<CurvePoint>,
    binned: Vec<CurvePoint>,
}

impl TryFrom<TurbineRecord> for TurbineSpec {
    type Error = Error;

    fn try_from(r: TurbineRecord) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidTurbine {
            id: r.id.clone(),
            reason,
        };
        let finite = [r.hub_height_m, r.cut_in_ms, r.rated_ms, r.cut_out_ms, r.nominal_kw]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(invalid("non-finite parameter".into()));
        }
        if !(r.hub_height_m > 0.0) {
            return Err(invalid(format!("hub height {} must be positive", r.hub_height_m)));
        }
        if !(r.nominal_kw > 0.0) {
            return Err(invalid(format!("nominal power {} must be positive", r.nominal_kw)));
        }
        if !(0.0 < r.cut_in_ms && r.cut_in_ms < r.rated_ms && r.rated_ms < r.cut_out_ms) {
            return Err(invalid(format!(
                "speeds must satisfy 0 < cut_in < rated < cut_out (got {}, {}, {})",
                r.cut_in_ms, r.rated_ms, r.cut_out_ms
            )));
        }
        if r.curve.len() < 2 {
            return Err(invalid("power curve needs at least 2 points".into()));
        }
        let curve: Vec<CurvePoint> = r.curve.iter().map(|[v, p]| CurvePoint::new(*v, *p)).collect();
        for pair in curve.windows(2) {
            if !(pair[1].speed_ms > pair[0].speed_ms) {
                return Err(invalid(format!(
                    "curve speeds not strictly increasing at {} m/s",
                    pair[1].speed_ms
                )));
            }
        }
        if let Some(p) = curve
            .iter()
            .find(|p| !(p.speed_ms >= 0.0 && (0.0..=r.nominal_kw).contains(&p.power_kw)))
        {
            return Err(invalid(format!(
                "curve point ({}, {}) outside [0, nominal]",
                p.speed_ms, p.power_kw
            )));
        }
        if let Some(p) = curve
            .iter()
            .find(|p| p.speed_ms >= r.rated_ms && p.power_kw != r.nominal_kw)
        {
            return Err(invalid(format!(
                "curve power {} kW at {} m/s is not the nominal {} kW",
                p.power_kw, p.speed_ms, r.nominal_kw
            )));
        }
        let binned = rebin_curve(&curve, DEFAULT_BIN_WIDTH).map_err(|e| invalid(e.to_string()))?;
        Ok(Self {
            id: r.id,
            hub_height_m: r.hub_height_m,
            cut_in_ms: r.cut_in_ms,
            rated_ms: r.rated_ms,
            cut_out_ms: r.cut_out_ms,
            nominal_kw: r.nominal_kw,
            curve,
            binned,
        })
    }
}

impl From<TurbineSpec> for TurbineRecord {
    fn from(s: TurbineSpec) -> Self {
        Self {
            id: s.id,
            hub_height_m: s.hub_height_m,
            cut_in_ms: s.cut_in_ms,
            rated_ms: s.rated_ms,
            cut_out_ms: s.cut_out_ms,
            nominal_kw: s.nominal_kw,
            curve: s.curve.iter().map(|p| [p.speed_ms, p.power_kw]).collect(),
        }
    }
}

impl TurbineSpec {
    pub fn curve(&self) -> &[CurvePoint] {
        &self.curve
    }

    /// The curve on the 0.5 m/s grid used for evaluation.
    pub fn binned_curve(&self) -> &[CurvePoint] {
        &self.binned
    }

    /// Output power in kW at hub-height speed `v`:
    /// zero at or below cut-in, the binned curve up to rated, nominal up to
    /// cut-out, zero from cut-out on.
    pub fn power_kw(&self, v: f64) -> f64 {
        if v <= self.cut_in_ms || v >= self.cut_out_ms {
            0.0
        } else if v >= self.rated_ms {
            self.nominal_kw
        } else {
            interpolate(&self.binned, v).clamp(0.0, self.nominal_kw)
        }
    }

    pub fn power_at(&self, v: Option<f64>) -> Option<f64> {
        v.filter(|v| !v.is_nan()).map(|v| self.power_kw(v))
    }
}

/// Turbine output on the grid of the wind series it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub turbine_id: String,
    pub nominal_kw: f64,
    pub start: DateTime<Utc>,
    pub cadence_s: u32,
    pub values: Vec<Option<f64>>,
}

impl PowerSeries {
    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + chrono::Duration::seconds(index as i64 * self.cadence_s as i64)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps hub-height wind through the power curve, sample by sample.
pub fn power_series(spec: &TurbineSpec, wind: &WindSeries) -> PowerSeries {
    power_series_with_uplift(spec, wind, 1.0)
}

/// Like [`power_series`] with a multiplicative uplift on partial-load output,
/// capped at nominal power. An uplift of 1.0 is the plain curve.
pub fn power_series_with_uplift(spec: &TurbineSpec, wind: &WindSeries, uplift: f64) -> PowerSeries {
    let values = wind
        .speeds()
        .iter()
        .map(|v| spec.power_at(*v).map(|p| (p * uplift).clamp(0.0, spec.nominal_kw)))
        .collect();
    PowerSeries {
        turbine_id: spec.id.clone(),
        nominal_kw: spec.nominal_kw,
        start: wind.start(),
        cadence_s: wind.cadence_s(),
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedTurbine {
    /// Zero-based position in the file.
    pub index: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct TurbineLibrary {
    pub turbines: Vec<TurbineSpec>,
    pub rejected: Vec<RejectedTurbine>,
}

impl TurbineLibrary {
    pub fn get(&self, id: &str) -> Option<&TurbineSpec> {
        self.turbines.iter().find(|t| t.id == id)
    }

    fn accept(&mut self, index: usize, id: Option<String>, entry: Result<TurbineSpec>, seen: &mut HashSet<String>) {
        match entry {
            Ok(spec) if !seen.insert(spec.id.clone()) => self.rejected.push(RejectedTurbine {
                index,
                id: Some(spec.id),
                reason: "duplicate id".into(),
            }),
            Ok(spec) => self.turbines.push(spec),
            Err(e) => self.rejected.push(RejectedTurbine {
                index,
                id,
                reason: match e {
                    Error::InvalidTurbine { reason, .. } => reason,
                    other => other.to_string(),
                },
            }),
        }
    }
}

/// Loads a JSON array or a long-format CSV (one row per curve point),
/// chosen by file extension.
pub fn load_turbine_library(path: impl AsRef<Path>) -> Result<TurbineLibrary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => library_from_csv(&text, path),
        _ => library_from_json(&text),
    }
}

pub fn library_from_json(text: &str) -> Result<TurbineLibrary> {
    let entries: Vec<serde_json::Value> = serde_json::from_str(text)?;
    let mut lib = TurbineLibrary::default();
    let mut seen = HashSet::new();
    for (index, value) in entries.into_iter().enumerate() {
        let id = value.get("id").and_then(|v| v.as_str()).map(str::to_string);
        let entry = serde_json::from_value::<TurbineRecord>(value)
            .map_err(|e| Error::InvalidTurbine {
                id: id.clone().unwrap_or_default(),
                reason: e.to_string(),
            })
            .and_then(TurbineSpec::try_from);
        lib.accept(index, id, entry, &mut seen);
    }
    Ok(lib)
}

const CSV_COLUMNS: [&str; 8] = [
    "id",
    "hub_height_m",
    "cut_in_ms",
    "rated_ms",
    "cut_out_ms",
    "nominal_kw",
    "speed_ms",
    "power_kw",
];

pub fn library_from_csv(text: &str, origin: &Path) -> Result<TurbineLibrary> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 8];
    for (slot, name) in idx.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::Header {
            path: origin.to_path_buf(),
            message: format!("missing column `{name}`"),
        })?;
    }

    // group rows by id in order of first appearance
    let mut groups: Vec<(String, Vec<csv::StringRecord>)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let id = record.get(idx[0]).unwrap_or("").to_string();
        match groups.iter_mut().find(|(g, _)| *g == id) {
            Some((_, rows)) => rows.push(record),
            None => groups.push((id, vec![record])),
        }
    }

    let mut lib = TurbineLibrary::default();
    let mut seen = HashSet::new();
    for (index, (id, rows)) in groups.into_iter().enumerate() {
        let entry = csv_group(&id, &rows, &idx).and_then(TurbineSpec::try_from);
        lib.accept(index, (!id.is_empty()).then_some(id), entry, &mut seen);
    }
    Ok(lib)
}

fn csv_group(id: &str, rows: &[csv::StringRecord], idx: &[usize; 8]) -> Result<TurbineRecord> {
    let invalid = |reason: String| Error::InvalidTurbine {
        id: id.to_string(),
        reason,
    };
    if id.is_empty() {
        return Err(invalid("missing field `id`".into()));
    }
    let field = |row: &csv::StringRecord, col: usize| -> Result<f64> {
        let raw = row.get(idx[col]).unwrap_or("");
        if raw.is_empty() {
            return Err(invalid(format!("missing field `{}`", CSV_COLUMNS[col])));
        }
        raw.parse::<f64>()
            .map_err(|_| invalid(format!("bad value `{raw}` for `{}`", CSV_COLUMNS[col])))
    };
    let mut params = [0.0; 5];
    for (k, p) in params.iter_mut().enumerate() {
        *p = field(&rows[0], k + 1)?;
    }
    let mut curve = Vec::with_capacity(rows.len());
    for row in rows {
        for (k, p) in params.iter().enumerate() {
            if field(row, k + 1)? != *p {
                return Err(invalid(format!("inconsistent `{}` across rows", CSV_COLUMNS[k + 1])));
            }
        }
        curve.push([field(row, 6)?, field(row, 7)?]);
    }
    Ok(TurbineRecord {
        id: id.to_string(),
        hub_height_m: params[0],
        cut_in_ms: params[1],
        rated_ms: params[2],
        cut_out_ms: params[3],
        nominal_kw: params[4],
        curve,
    })
}

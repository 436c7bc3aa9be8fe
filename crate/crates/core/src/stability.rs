//! Stable charging-window detection over a turbine power series.
//!
//! For each calendar day the power samples are cut into candidate windows one
//! charge duration long, sliding by `t_charge - t_ov`. A candidate is kept when
//! it has no missing samples, its population standard deviation stays within
//! `sigma_max_kw`, and the energy it delivers reaches the configured floor.
//! Kept windows are then thinned to a non-overlapping set by an earliest-start
//! greedy scan, and their energies are summed into the day's total.

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ev::{self, ChargingProfile};
use crate::exec::Exec;
use crate::ingest::day_ranges;
use crate::turbine::PowerSeries;

pub const DEFAULT_SIGMA_MAX_KW: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyFloor {
    /// Window energy must cover one full charging session.
    #[default]
    FullCharge,
    /// Window energy must cover one minute of charger draw.
    PartialCharge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub t_charge_min: u32,
    /// Overlap between consecutive candidates. `None` slides by one sample.
    pub t_ov_min: Option<u32>,
    pub sigma_max_kw: f64,
    pub energy_floor: EnergyFloor,
}

impl WindowParams {
    pub fn new(t_charge_min: u32) -> Self {
        Self {
            t_charge_min,
            t_ov_min: None,
            sigma_max_kw: DEFAULT_SIGMA_MAX_KW,
            energy_floor: EnergyFloor::FullCharge,
        }
    }

    pub fn with_overlap(mut self, t_ov_min: u32) -> Self {
        self.t_ov_min = Some(t_ov_min);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_charge_min == 0 {
            return Err(Error::Config("t_charge must be positive".into()));
        }
        if let Some(ov) = self.t_ov_min {
            if ov >= self.t_charge_min {
                return Err(Error::Config(format!(
                    "overlap {ov} min must be shorter than t_charge {} min",
                    self.t_charge_min
                )));
            }
        }
        if !(self.sigma_max_kw > 0.0) {
            return Err(Error::Config(format!("sigma_max {} kW must be positive", self.sigma_max_kw)));
        }
        Ok(())
    }

    /// Window length and stride in samples at `cadence_s`.
    ///
    /// A charge duration that is not a whole number of samples is rounded up,
    /// so a window always spans at least `t_charge`.
    pub fn geometry(&self, cadence_s: u32) -> Result<WindowGeometry> {
        self.validate()?;
        let cad = cadence_s as u64;
        let charge_s = self.t_charge_min as u64 * 60;
        let len = charge_s.div_ceil(cad) as usize;
        let stride = match self.t_ov_min {
            None => 1,
            Some(ov) => {
                let step_s = (self.t_charge_min - ov) as u64 * 60;
                if !step_s.is_multiple_of(cad) {
                    return Err(Error::Config(format!(
                        "window stride of {} min is not a whole number of {cadence_s} s samples",
                        self.t_charge_min - ov
                    )));
                }
                (step_s / cad) as usize
            }
        };
        Ok(WindowGeometry { len, stride })
    }

    /// Minimum energy, in kWh, a window must deliver.
    pub fn energy_floor_kwh(&self, profile: &ChargingProfile) -> f64 {
        match self.energy_floor {
            EnergyFloor::FullCharge => profile.energy_per_charge(),
            EnergyFloor::PartialCharge => profile.charger_energy_per_minute(),
        }
    }

    pub fn window_energy(&self, mean_kw: f64) -> f64 {
        mean_kw * self.t_charge_min as f64 / 60.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowGeometry {
    pub len: usize,
    pub stride: usize,
}

/// One calendar day of power samples.
#[derive(Debug, Clone, Copy)]
pub struct DaySlice<'a> {
    pub date: NaiveDate,
    pub start: DateTime<Utc>,
    pub cadence_s: u32,
    pub values: &'a [Option<f64>],
}

impl<'a> DaySlice<'a> {
    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + chrono::Duration::seconds(index as i64 * self.cadence_s as i64)
    }

    /// Number of samples a complete day holds at this cadence.
    pub fn full_day_len(&self) -> usize {
        (86_400 / self.cadence_s) as usize
    }
}

impl PowerSeries {
    pub fn days(&self) -> Vec<DaySlice<'_>> {
        day_ranges(self.start, self.cadence_s, self.len())
            .into_iter()
            .map(|(date, r)| DaySlice {
                date,
                start: self.timestamp(r.start),
                cadence_s: self.cadence_s,
                values: &self.values[r],
            })
            .collect()
    }
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    /// Start offset within the day, in samples.
    pub index: usize,
    pub start: DateTime<Utc>,
    /// `None` when the window holds a missing sample.
    pub stats: Option<WindowStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowStats {
    pub mean_kw: f64,
    pub std_kw: f64,
}

impl Candidate {
    pub fn is_valid(&self) -> bool {
        self.stats.is_some()
    }
}

/// All full-length windows of the day at the configured stride, starting at
/// the day's first sample.
pub fn enumerate_windows(day: &DaySlice<'_>, params: &WindowParams) -> Result<Vec<Candidate>> {
    let geo = params.geometry(day.cadence_s)?;
    if geo.len > day.full_day_len() {
        log::warn!(
            "t_charge of {} min does not fit in a day; no windows for {}",
            params.t_charge_min,
            day.date
        );
        return Ok(Vec::new());
    }
    if day.values.len() < geo.len {
        return Ok(Vec::new());
    }
    let mut buf = Vec::with_capacity(geo.len);
    let out = (0..=day.values.len() - geo.len)
        .step_by(geo.stride)
        .map(|i| {
            buf.clear();
            buf.extend(day.values[i..i + geo.len].iter().map_while(|v| *v));
            let stats = (buf.len() == geo.len).then(|| {
                let (mean_kw, std_kw) = mean_std(&buf);
                WindowStats { mean_kw, std_kw }
            });
            Candidate {
                index: i,
                start: day.timestamp(i),
                stats,
            }
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableWindow {
    pub start: DateTime<Utc>,
    pub index: usize,
    pub len_samples: usize,
    pub length_min: u32,
    pub mean_kw: f64,
    pub std_kw: f64,
    pub energy_kwh: f64,
}

impl StableWindow {
    pub fn end_index(&self) -> usize {
        self.index + self.len_samples
    }

    pub fn overlaps(&self, other: &StableWindow) -> bool {
        self.index < other.end_index() && other.index < self.end_index()
    }
}

/// Keeps complete candidates that are stable and deliver enough energy.
pub fn filter_stable(
    candidates: &[Candidate],
    params: &WindowParams,
    profile: &ChargingProfile,
    len_samples: usize,
) -> Vec<StableWindow> {
    let floor = params.energy_floor_kwh(profile);
    candidates
        .iter()
        .filter_map(|c| {
            let s = c.stats?;
            let energy = params.window_energy(s.mean_kw);
            (s.std_kw <= params.sigma_max_kw && energy >= floor).then_some(StableWindow {
                start: c.start,
                index: c.index,
                len_samples,
                length_min: params.t_charge_min,
                mean_kw: s.mean_kw,
                std_kw: s.std_kw,
                energy_kwh: energy,
            })
        })
        .collect()
}

/// Earliest-start greedy: a window is taken when it starts at or after the
/// end of the last one taken. Input must be sorted by start.
pub fn select_nonoverlapping(stable: &[StableWindow]) -> Vec<StableWindow> {
    let mut out: Vec<StableWindow> = Vec::new();
    for w in stable {
        if out.last().is_none_or(|last| w.index >= last.end_index()) {
            out.push(*w);
        }
    }
    out
}

pub fn daily_energy(selected: &[StableWindow]) -> f64 {
    selected.iter().map(|w| w.energy_kwh).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyResult {
    pub date: NaiveDate,
    pub n_windows: usize,
    pub total_energy_kwh: f64,
    pub ev_count: u64,
    pub n_candidates: usize,
    pub n_valid_candidates: usize,
    pub n_stable_candidates: usize,
    pub missing_samples: usize,
    pub windows: Vec<StableWindow>,
}

/// Result of one day plus the per-candidate detail behind the heat-maps.
#[derive(Debug, Clone, PartialEq)]
pub struct DayAnalysis {
    pub result: DailyResult,
    pub candidates: Vec<Candidate>,
}

pub fn analyze_day(day: &DaySlice<'_>, params: &WindowParams, profile: &ChargingProfile) -> Result<DayAnalysis> {
    let geo = params.geometry(day.cadence_s)?;
    let candidates = enumerate_windows(day, params)?;
    let stable = filter_stable(&candidates, params, profile, geo.len);
    let selected = select_nonoverlapping(&stable);
    let total_energy_kwh = daily_energy(&selected);
    let result = DailyResult {
        date: day.date,
        n_windows: selected.len(),
        total_energy_kwh,
        ev_count: ev::ev_count(total_energy_kwh, profile),
        n_candidates: candidates.len(),
        n_valid_candidates: candidates.iter().filter(|c| c.is_valid()).count(),
        n_stable_candidates: stable.len(),
        missing_samples: day.values.iter().filter(|v| v.is_none()).count(),
        windows: selected,
    };
    Ok(DayAnalysis { result, candidates })
}

/// Runs [`analyze_day`] over every day of the series.
pub fn analyze_series(
    power: &PowerSeries,
    params: &WindowParams,
    profile: &ChargingProfile,
    exec: Exec,
) -> Result<Vec<DayAnalysis>> {
    params.validate()?;
    let days = power.days();
    exec.map(&days, |d| analyze_day(d, params, profile))
        .into_iter()
        .collect()
}

//! Full pipeline orchestration and result files.
//!
//! `run` goes dataset by dataset: parse, impute short dropouts, mark long
//! gaps, then for every averaging interval resample, compute wind statistics
//! and, for every turbine, lift the wind to hub height, convert it to power
//! and analyze each day for stable charging windows.
//!
//! Output layout, one directory per dataset and interval:
//!
//! ```text
//! <output_dir>/
//!   failures.json
//!   table2_stability.csv            all datasets and intervals side by side
//!   <dataset>/missing_by_month.csv
//!   <dataset>/normalized.csv        with write_normalized = true
//!   <dataset>/normalized.gaps.json
//!   <dataset>/<k>min/report.json
//!   <dataset>/<k>min/table2_stability.csv
//!   <dataset>/<k>min/fig7_monthly_evs.csv
//!   <dataset>/<k>min/fig8_speed_matrix.csv
//!   <dataset>/<k>min/fig8_power_matrix.csv
//!   <dataset>/<k>min/daily_results.csv
//!   <dataset>/<k>min/windows.csv
//!   <dataset>/<k>min/windrose.csv
//! ```
//!
//! Every float in a CSV is written with six significant digits so repeated
//! runs diff cleanly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ev::ChargingProfile;
use crate::exec::Exec;
use crate::ingest::{self, MonthMissing, WindSeries, ISO_FORMAT, SECONDS_PER_DAY};
use crate::shear;
use crate::stability::{self, Candidate, DailyResult, DaySlice, WindowParams};
use crate::stats::{self, SummaryStats, WeibullFit, WindroseTable};
use crate::turbine::{self, TurbineSpec};

/// `%g`-style formatting with six significant digits.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_sig6)
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    /// The day overlaps a long gap.
    Gap,
    /// The series does not cover the whole day.
    IncompleteDay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayRecord {
    #[serde(flatten)]
    pub result: DailyResult,
    pub excluded: Option<ExclusionReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityShare {
    pub n_candidates: usize,
    pub n_valid_candidates: usize,
    pub n_stable: usize,
    /// Stable windows over all candidate windows, in percent.
    pub pct_of_all: Option<f64>,
    /// Stable windows over candidates without missing samples, in percent.
    pub pct_of_valid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthTotal {
    pub month: String,
    pub analyzed_days: usize,
    pub excluded_days: usize,
    pub energy_kwh: f64,
    pub ev_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurbineReport {
    pub turbine_id: String,
    pub hub_height_m: f64,
    pub cut_in_ms: f64,
    pub rated_ms: f64,
    pub cut_out_ms: f64,
    pub nominal_kw: f64,
    pub stability: StabilityShare,
    pub monthly: Vec<MonthTotal>,
    #[serde(skip)]
    pub days: Vec<DayRecord>,
    /// Candidate window means per heat-map day.
    #[serde(skip)]
    pub heatmap: Vec<(NaiveDate, Vec<Option<f64>>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindStats {
    pub summary: Option<SummaryStats>,
    pub weibull: std::result::Result<WeibullFit, String>,
    pub windrose: WindroseTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalReport {
    pub dataset: String,
    pub interval_min: u32,
    pub site_id: String,
    pub measurement_height_m: f64,
    pub window: WindowParams,
    pub window_len_samples: usize,
    pub energy_floor_kwh: f64,
    pub stats: WindStats,
    pub excluded_days: Vec<(NaiveDate, ExclusionReason)>,
    pub turbines: Vec<TurbineReport>,
    #[serde(skip)]
    pub speed_heatmap: Vec<(NaiveDate, Vec<Option<f64>>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub name: String,
    pub site_id: String,
    pub n_samples: usize,
    pub cadence_s: u32,
    pub missing_by_month: BTreeMap<String, MonthMissing>,
    pub overall_missing_fraction: f64,
    pub n_gaps: usize,
    pub intervals: Vec<IntervalReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub dataset: Option<String>,
    pub interval_min: Option<u32>,
    pub turbine: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub ev_profile: ChargingProfile,
    pub datasets: Vec<DatasetReport>,
    pub failures: Vec<Failure>,
}

/// Everything `run` needs once files are loaded.
pub struct Pipeline<'a> {
    pub config: &'a RunConfig,
    pub turbines: Vec<TurbineSpec>,
    pub profile: ChargingProfile,
    pub params: WindowParams,
    pub exec: Exec,
}

/// Loads inputs, runs every cell and writes the output tree.
///
/// Errors in one dataset, interval or turbine are recorded in
/// `failures.json` and do not stop other cells; only unreadable
/// configuration, turbine library or EV profile is fatal.
pub fn run(config: &RunConfig, exec: Exec) -> Result<FeasibilityReport> {
    let profile = ChargingProfile::load(&config.ev.profile)?;
    let params = config.window.params(&profile)?;
    let library = turbine::load_turbine_library(&config.turbines.library)?;
    let mut failures: Vec<Failure> = library
        .rejected
        .iter()
        .map(|r| Failure {
            dataset: None,
            interval_min: None,
            turbine: r.id.clone(),
            error: format!("rejected library entry {}: {}", r.index, r.reason),
        })
        .collect();
    let turbines = match &config.turbines.ids {
        None => library.turbines.clone(),
        Some(ids) => ids
            .iter()
            .filter_map(|id| {
                let found = library.get(id).cloned();
                if found.is_none() {
                    failures.push(Failure {
                        dataset: None,
                        interval_min: None,
                        turbine: Some(id.clone()),
                        error: "turbine id not found in library".into(),
                    });
                }
                found
            })
            .collect(),
    };
    if turbines.is_empty() {
        return Err(Error::Config("no usable turbines selected".into()));
    }
    let pipeline = Pipeline {
        config,
        turbines,
        profile,
        params,
        exec,
    };
    let mut report = pipeline.execute(failures);
    report.failures.sort_by(|a, b| {
        (&a.dataset, a.interval_min, &a.turbine, &a.error).cmp(&(&b.dataset, b.interval_min, &b.turbine, &b.error))
    });
    write_outputs(&report, &config.output_dir)?;
    Ok(report)
}

impl Pipeline<'_> {
    pub fn execute(&self, mut failures: Vec<Failure>) -> FeasibilityReport {
        let mut datasets = Vec::new();
        for spec in &self.config.datasets {
            let fail = |e: Error| Failure {
                dataset: Some(spec.name.clone()),
                interval_min: None,
                turbine: None,
                error: e.to_string(),
            };
            let raw = match spec
                .tower_schema()
                .and_then(|schema| ingest::parse_tower_file(&spec.path, &schema))
            {
                Ok(s) => s,
                Err(e) => {
                    failures.push(fail(e));
                    continue;
                }
            };
            match self.dataset(&spec.name, &raw, &mut failures) {
                Ok(d) => datasets.push(d),
                Err(e) => failures.push(fail(e)),
            }
        }
        FeasibilityReport {
            ev_profile: self.profile.clone(),
            datasets,
            failures,
        }
    }

    /// Runs every interval and turbine over one parsed series.
    pub fn dataset(&self, name: &str, raw: &WindSeries, failures: &mut Vec<Failure>) -> Result<DatasetReport> {
        let missing_by_month = ingest::missing_fraction_by_month(raw);
        let overall_missing_fraction = ingest::overall_missing_fraction(&missing_by_month);
        let mut report = DatasetReport {
            name: name.to_string(),
            site_id: raw.site_id().to_string(),
            n_samples: raw.len(),
            cadence_s: raw.cadence_s(),
            missing_by_month,
            overall_missing_fraction,
            n_gaps: 0,
            intervals: Vec::new(),
        };
        let cleaned = match ingest::impute_short_gaps(raw, self.config.max_impute_run) {
            Ok(s) => s,
            // an all-missing dataset still reports its missing-data table
            Err(Error::AllMissing(_)) => {
                failures.push(Failure {
                    dataset: Some(name.to_string()),
                    interval_min: None,
                    turbine: None,
                    error: Error::AllMissing(name.to_string()).to_string(),
                });
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        let min_gap_s = match self.config.min_gap_min {
            Some(m) => (m * 60.0).round() as i64,
            None => (self.config.max_impute_run as i64 + 1) * raw.cadence_s() as i64,
        };
        let gaps = ingest::detect_long_gaps(&cleaned, min_gap_s)?;
        let cleaned = cleaned.with_gaps(gaps)?;
        report.n_gaps = cleaned.gaps().len();
        if self.config.write_normalized {
            let dir = self.config.output_dir.join(name);
            mkdir(&dir)?;
            ingest::save_series(&cleaned, &dir, "normalized")?;
        }

        for &interval in &self.config.intervals_min {
            match self.interval(name, &cleaned, interval, failures) {
                Ok(r) => report.intervals.push(r),
                Err(e) => failures.push(Failure {
                    dataset: Some(name.to_string()),
                    interval_min: Some(interval),
                    turbine: None,
                    error: e.to_string(),
                }),
            }
        }
        Ok(report)
    }

    fn heatmap_months(&self, series: &WindSeries) -> BTreeSet<String> {
        if self.config.heatmap_months.is_empty() {
            let s = series.start();
            BTreeSet::from([format!("{:04}-{:02}", s.year(), s.month())])
        } else {
            self.config.heatmap_months.iter().cloned().collect()
        }
    }

    pub fn interval(
        &self,
        dataset: &str,
        series: &WindSeries,
        interval_min: u32,
        failures: &mut Vec<Failure>,
    ) -> Result<IntervalReport> {
        let averaged = ingest::resample_average(series, interval_min * 60)?;
        let geo = self.params.geometry(averaged.cadence_s())?;

        let speeds: Vec<f64> = averaged.speeds().iter().flatten().copied().collect();
        let stats = WindStats {
            summary: stats::summary_of(&speeds),
            weibull: stats::fit_weibull(&speeds).map_err(|e| e.to_string()),
            windrose: stats::windrose(&averaged, self.config.windrose_sectors)?,
        };

        let full_day = (SECONDS_PER_DAY / averaged.cadence_s() as i64) as usize;
        let excluded_days: Vec<(NaiveDate, ExclusionReason)> = averaged
            .day_ranges()
            .into_iter()
            .filter_map(|(date, range)| {
                let from = averaged.timestamp(range.start);
                let to = averaged.timestamp(range.end);
                if averaged.gaps().iter().any(|g| g.intersects(from, to)) {
                    Some((date, ExclusionReason::Gap))
                } else if range.len() < full_day {
                    Some((date, ExclusionReason::IncompleteDay))
                } else {
                    None
                }
            })
            .collect();
        let exclusion: BTreeMap<NaiveDate, ExclusionReason> = excluded_days.iter().copied().collect();

        let months = self.heatmap_months(&averaged);
        let in_heatmap = |d: NaiveDate| months.contains(&format!("{:04}-{:02}", d.year(), d.month()));

        // speed heat-map: the same windows, averaged over measured speed
        let speed_heatmap = averaged
            .day_ranges()
            .into_iter()
            .filter(|(d, _)| in_heatmap(*d))
            .map(|(date, range)| {
                let day = DaySlice {
                    date,
                    start: averaged.timestamp(range.start),
                    cadence_s: averaged.cadence_s(),
                    values: &averaged.speeds()[range],
                };
                let means = stability::enumerate_windows(&day, &self.params)
                    .map(|c| window_means(&c))
                    .unwrap_or_default();
                (date, means)
            })
            .collect();

        let mut turbines = Vec::new();
        for spec in &self.turbines {
            match self.turbine(spec, &averaged, &exclusion, &in_heatmap) {
                Ok(t) => turbines.push(t),
                Err(e) => failures.push(Failure {
                    dataset: Some(dataset.to_string()),
                    interval_min: Some(interval_min),
                    turbine: Some(spec.id.clone()),
                    error: e.to_string(),
                }),
            }
        }

        Ok(IntervalReport {
            dataset: dataset.to_string(),
            interval_min,
            site_id: averaged.site_id().to_string(),
            measurement_height_m: averaged.height_m(),
            window: self.params,
            window_len_samples: geo.len,
            energy_floor_kwh: self.params.energy_floor_kwh(&self.profile),
            stats,
            excluded_days,
            turbines,
            speed_heatmap,
        })
    }

    fn turbine(
        &self,
        spec: &TurbineSpec,
        averaged: &WindSeries,
        exclusion: &BTreeMap<NaiveDate, ExclusionReason>,
        in_heatmap: &dyn Fn(NaiveDate) -> bool,
    ) -> Result<TurbineReport> {
        let hub = shear::extrapolate_series(averaged, spec.hub_height_m, self.config.shear)?;
        let power = turbine::power_series_with_uplift(spec, &hub, self.config.uplift);
        let analyses = stability::analyze_series(&power, &self.params, &self.profile, self.exec)?;

        let mut share = StabilityShare {
            n_candidates: 0,
            n_valid_candidates: 0,
            n_stable: 0,
            pct_of_all: None,
            pct_of_valid: None,
        };
        let mut monthly: BTreeMap<String, MonthTotal> = BTreeMap::new();
        let mut days = Vec::with_capacity(analyses.len());
        let mut heatmap = Vec::new();
        for a in analyses {
            let r = &a.result;
            share.n_candidates += r.n_candidates;
            share.n_valid_candidates += r.n_valid_candidates;
            share.n_stable += r.n_stable_candidates;
            let month = format!("{:04}-{:02}", r.date.year(), r.date.month());
            let total = monthly.entry(month.clone()).or_insert_with(|| MonthTotal {
                month,
                analyzed_days: 0,
                excluded_days: 0,
                energy_kwh: 0.0,
                ev_count: 0,
            });
            let excluded = exclusion.get(&r.date).copied();
            if excluded.is_some() {
                total.excluded_days += 1;
            } else {
                total.analyzed_days += 1;
                total.energy_kwh += r.total_energy_kwh;
                total.ev_count += r.ev_count;
            }
            if in_heatmap(r.date) {
                heatmap.push((r.date, window_means(&a.candidates)));
            }
            days.push(DayRecord {
                result: a.result,
                excluded,
            });
        }
        share.pct_of_all = pct(share.n_stable, share.n_candidates);
        share.pct_of_valid = pct(share.n_stable, share.n_valid_candidates);

        Ok(TurbineReport {
            turbine_id: spec.id.clone(),
            hub_height_m: spec.hub_height_m,
            cut_in_ms: spec.cut_in_ms,
            rated_ms: spec.rated_ms,
            cut_out_ms: spec.cut_out_ms,
            nominal_kw: spec.nominal_kw,
            stability: share,
            monthly: monthly.into_values().collect(),
            days,
            heatmap,
        })
    }
}

fn window_means(candidates: &[Candidate]) -> Vec<Option<f64>> {
    candidates.iter().map(|c| c.stats.map(|s| s.mean_kw)).collect()
}

// ---------------------------------------------------------------------------
// Emission

struct Csv {
    path: PathBuf,
    buf: Vec<u8>,
}

impl Csv {
    fn new(path: PathBuf, header: &[&str]) -> Self {
        let mut c = Self { path, buf: Vec::new() };
        c.row(header.iter().map(|s| s.to_string()));
        c
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) {
        let line = fields.into_iter().collect::<Vec<_>>().join(",");
        self.buf.extend_from_slice(line.as_bytes());
        self.buf.push(b'\n');
    }

    fn finish(self) -> Result<()> {
        fs::write(&self.path, &self.buf).map_err(|e| Error::io(&self.path, e))
    }
}

/// Key column values, date and one value per candidate window.
pub type HeatmapRow = (Vec<String>, NaiveDate, Vec<Option<f64>>);

/// Heat-map matrix: one row per day, one column per candidate window.
/// `key` columns precede the date; short days are padded with `NA`.
pub fn emit_heatmap_matrix(
    path: PathBuf,
    key_columns: &[&str],
    rows: &[HeatmapRow],
) -> Result<()> {
    let width = rows.iter().map(|r| r.2.len()).max().unwrap_or(0);
    let mut header: Vec<String> = key_columns.iter().map(|s| s.to_string()).collect();
    header.push("date".into());
    header.extend((0..width).map(|i| format!("w{i:04}")));
    let mut csv = Csv {
        path,
        buf: Vec::new(),
    };
    csv.row(header);
    for (keys, date, values) in rows {
        let mut fields = keys.clone();
        fields.push(date.to_string());
        fields.extend((0..width).map(|i| fmt_opt(values.get(i).copied().flatten())));
        csv.row(fields);
    }
    csv.finish()
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

type PctPair = (Option<f64>, Option<f64>);

pub fn write_outputs(report: &FeasibilityReport, out: &Path) -> Result<()> {
    mkdir(out)?;
    write_json(out.join("failures.json"), &report.failures)?;

    let mut columns: Vec<String> = Vec::new();
    let mut table: BTreeMap<String, BTreeMap<String, PctPair>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();

    for ds in &report.datasets {
        let ds_dir = out.join(&ds.name);
        mkdir(&ds_dir)?;
        let mut csv = Csv::new(ds_dir.join("missing_by_month.csv"), &["month", "expected", "missing", "fraction"]);
        for (month, m) in &ds.missing_by_month {
            csv.row([month.clone(), m.expected.to_string(), m.missing.to_string(), fmt_sig6(m.fraction)]);
        }
        csv.finish()?;

        for iv in &ds.intervals {
            let col = format!("{}_{}min", ds.name, iv.interval_min);
            columns.push(col.clone());
            for t in &iv.turbines {
                if !order.contains(&t.turbine_id) {
                    order.push(t.turbine_id.clone());
                }
                table
                    .entry(t.turbine_id.clone())
                    .or_default()
                    .insert(col.clone(), (t.stability.pct_of_all, t.stability.pct_of_valid));
            }
            write_interval(iv, &ds_dir.join(format!("{}min", iv.interval_min)))?;
        }
    }

    let mut header = vec!["turbine".to_string()];
    for c in &columns {
        header.push(format!("{c}_pct_all"));
        header.push(format!("{c}_pct_valid"));
    }
    let mut csv = Csv {
        path: out.join("table2_stability.csv"),
        buf: Vec::new(),
    };
    csv.row(header);
    for id in &order {
        let mut fields = vec![id.clone()];
        for c in &columns {
            let cell = table.get(id).and_then(|m| m.get(c)).copied().unwrap_or((None, None));
            fields.push(fmt_opt(cell.0));
            fields.push(fmt_opt(cell.1));
        }
        csv.row(fields);
    }
    csv.finish()
}

#[derive(Serialize)]
struct DaySummary<'a> {
    turbine: &'a str,
    date: NaiveDate,
    n_windows: usize,
    total_energy_kwh: f64,
    ev_count: u64,
    excluded: Option<ExclusionReason>,
}

#[derive(Serialize)]
struct IntervalJson<'a> {
    #[serde(flatten)]
    report: &'a IntervalReport,
    daily: Vec<DaySummary<'a>>,
}

fn write_interval(iv: &IntervalReport, dir: &Path) -> Result<()> {
    mkdir(dir)?;
    let daily = iv
        .turbines
        .iter()
        .flat_map(|t| {
            t.days.iter().map(move |d| DaySummary {
                turbine: &t.turbine_id,
                date: d.result.date,
                n_windows: d.result.n_windows,
                total_energy_kwh: d.result.total_energy_kwh,
                ev_count: d.result.ev_count,
                excluded: d.excluded,
            })
        })
        .collect();
    write_json(dir.join("report.json"), &IntervalJson { report: iv, daily })?;

    let mut csv = Csv::new(
        dir.join("table2_stability.csv"),
        &[
            "turbine",
            "hub_height_m",
            "cut_in_ms",
            "rated_ms",
            "cut_out_ms",
            "nominal_kw",
            "n_candidates",
            "n_valid_candidates",
            "n_stable",
            "stability_pct_all",
            "stability_pct_valid",
        ],
    );
    for t in &iv.turbines {
        let s = &t.stability;
        csv.row([
            t.turbine_id.clone(),
            fmt_sig6(t.hub_height_m),
            fmt_sig6(t.cut_in_ms),
            fmt_sig6(t.rated_ms),
            fmt_sig6(t.cut_out_ms),
            fmt_sig6(t.nominal_kw),
            s.n_candidates.to_string(),
            s.n_valid_candidates.to_string(),
            s.n_stable.to_string(),
            fmt_opt(s.pct_of_all),
            fmt_opt(s.pct_of_valid),
        ]);
    }
    csv.finish()?;

    let mut csv = Csv::new(
        dir.join("fig7_monthly_evs.csv"),
        &["turbine", "month", "analyzed_days", "excluded_days", "energy_kwh", "ev_count"],
    );
    for t in &iv.turbines {
        for m in &t.monthly {
            csv.row([
                t.turbine_id.clone(),
                m.month.clone(),
                m.analyzed_days.to_string(),
                m.excluded_days.to_string(),
                fmt_sig6(m.energy_kwh),
                m.ev_count.to_string(),
            ]);
        }
    }
    csv.finish()?;

    let mut daily = Csv::new(
        dir.join("daily_results.csv"),
        &[
            "turbine",
            "date",
            "n_windows",
            "total_energy_kwh",
            "ev_count",
            "n_candidates",
            "n_valid_candidates",
            "n_stable_candidates",
            "missing_samples",
            "excluded",
        ],
    );
    let mut windows = Csv::new(
        dir.join("windows.csv"),
        &["turbine", "date", "start", "index", "mean_kw", "std_kw", "energy_kwh"],
    );
    for t in &iv.turbines {
        for d in &t.days {
            let r = &d.result;
            daily.row([
                t.turbine_id.clone(),
                r.date.to_string(),
                r.n_windows.to_string(),
                fmt_sig6(r.total_energy_kwh),
                r.ev_count.to_string(),
                r.n_candidates.to_string(),
                r.n_valid_candidates.to_string(),
                r.n_stable_candidates.to_string(),
                r.missing_samples.to_string(),
                match d.excluded {
                    None => String::new(),
                    Some(ExclusionReason::Gap) => "gap".into(),
                    Some(ExclusionReason::IncompleteDay) => "incomplete-day".into(),
                },
            ]);
            for w in &r.windows {
                windows.row([
                    t.turbine_id.clone(),
                    r.date.to_string(),
                    w.start.format(ISO_FORMAT).to_string(),
                    w.index.to_string(),
                    fmt_sig6(w.mean_kw),
                    fmt_sig6(w.std_kw),
                    fmt_sig6(w.energy_kwh),
                ]);
            }
        }
    }
    daily.finish()?;
    windows.finish()?;

    let speed_rows: Vec<_> = iv
        .speed_heatmap
        .iter()
        .map(|(d, v)| (Vec::new(), *d, v.clone()))
        .collect();
    emit_heatmap_matrix(dir.join("fig8_speed_matrix.csv"), &[], &speed_rows)?;
    let power_rows: Vec<_> = iv
        .turbines
        .iter()
        .flat_map(|t| t.heatmap.iter().map(|(d, v)| (vec![t.turbine_id.clone()], *d, v.clone())))
        .collect();
    emit_heatmap_matrix(dir.join("fig8_power_matrix.csv"), &["turbine"], &power_rows)?;

    let rose = &iv.stats.windrose;
    let mut header = vec!["sector".to_string(), "label".into(), "count".into(), "frequency".into()];
    header.extend(rose.speed_bin_edges.iter().map(|e| format!("speed_ge_{}", fmt_sig6(*e))));
    let mut csv = Csv {
        path: dir.join("windrose.csv"),
        buf: Vec::new(),
    };
    csv.row(header);
    for s in 0..rose.n_sectors {
        let mut fields = vec![
            s.to_string(),
            rose.labels[s].clone(),
            rose.counts[s].to_string(),
            fmt_sig6(rose.frequencies[s]),
        ];
        fields.extend(rose.speed_counts[s].iter().map(u64::to_string));
        csv.row(fields);
    }
    csv.finish()
}

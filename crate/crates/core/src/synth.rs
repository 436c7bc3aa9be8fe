//! Seeded synthetic wind data for tests, benchmarks and demos.

use std::io::Write;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::{WindSeries, ISO_FORMAT};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Constant speed and direction on a regular grid.
pub fn constant_series(
    site_id: &str,
    height_m: f64,
    start: DateTime<Utc>,
    cadence_s: u32,
    len: usize,
    speed: f64,
) -> Result<WindSeries> {
    WindSeries::new(site_id, height_m, start, cadence_s, vec![Some(speed); len], vec![Some(270.0); len])
}

#[derive(Debug, Clone, Copy)]
pub struct TowerParams {
    pub height_m: f64,
    pub cadence_s: u32,
    /// Long-run mean of the log-speed process; speeds hover near `exp(mean)`.
    pub log_mean: f64,
    pub log_sd: f64,
    /// Per-sample persistence of the log-speed process.
    pub persistence: f64,
    /// Probability that a sample starts a short dropout (1-3 samples).
    pub dropout_rate: f64,
    /// Probability that a day loses a multi-hour block.
    pub outage_rate: f64,
}

impl Default for TowerParams {
    fn default() -> Self {
        Self {
            height_m: 20.0,
            cadence_s: 60,
            log_mean: 1.4,
            log_sd: 0.6,
            persistence: 0.995,
            dropout_rate: 0.002,
            outage_rate: 0.02,
        }
    }
}

/// Persistent log-normal wind with a wandering direction, isolated dropouts
/// and occasional outages. Identical seeds give identical series.
pub fn synthetic_tower(seed: u64, site_id: &str, start: DateTime<Utc>, days: usize, params: TowerParams) -> Result<WindSeries> {
    if params.cadence_s == 0 || 86_400 % params.cadence_s != 0 {
        return Err(Error::Config(format!("cadence {} s does not tile a day", params.cadence_s)));
    }
    let mut rng = rng(seed);
    let per_day = (86_400 / params.cadence_s) as usize;
    let n = per_day * days;
    let innovation = Normal::new(0.0, params.log_sd * (1.0 - params.persistence.powi(2)).sqrt())
        .map_err(|e| Error::Config(e.to_string()))?;
    let turn = Normal::new(0.0, 4.0).map_err(|e| Error::Config(e.to_string()))?;

    let mut x = 0.0f64;
    let mut dir: f64 = rng.random_range(0.0..360.0);
    let mut speeds = Vec::with_capacity(n);
    let mut directions = Vec::with_capacity(n);
    for _ in 0..n {
        x = params.persistence * x + innovation.sample(&mut rng);
        dir = (dir + turn.sample(&mut rng)).rem_euclid(360.0);
        if dir >= 360.0 {
            dir = 0.0;
        }
        // speeds quantized to 0.01 m/s like typical logger output
        let v = ((params.log_mean + x).exp() * 100.0).round() / 100.0;
        speeds.push(Some(v));
        directions.push(Some((dir * 10.0).round() / 10.0 % 360.0));
    }

    let mut i = 0;
    while i < n {
        if rng.random_bool(params.dropout_rate) {
            let run = rng.random_range(1..=3).min(n - i);
            for s in &mut speeds[i..i + run] {
                *s = None;
            }
            i += run + 6;
        } else {
            i += 1;
        }
    }
    for d in 0..days {
        if rng.random_bool(params.outage_rate) {
            let from = d * per_day + rng.random_range(0..per_day / 2);
            let len = rng.random_range(per_day / 12..per_day / 2);
            for s in &mut speeds[from..(from + len).min(n)] {
                *s = None;
            }
        }
    }
    WindSeries::new(site_id, params.height_m, start, params.cadence_s, speeds, directions)
}

/// Writes a tower file in a raw logger layout (`time,ws,wd`) with `-999`
/// for missing values.
pub fn write_tower_csv<W: Write>(series: &WindSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "time,ws,wd")?;
    for s in series.samples() {
        let fmt = |v: Option<f64>| v.map_or("-999".to_string(), |v| v.to_string());
        writeln!(out, "{},{},{}", s.timestamp.format(ISO_FORMAT), fmt(s.speed), fmt(s.direction))?;
    }
    Ok(())
}

/// Random power day mixing nominal plateaus, calm stretches, partial-load
/// noise and missing runs. Used by the algorithm equivalence tests.
pub fn random_power_day<R: Rng>(rng: &mut R, len: usize, nominal_kw: f64) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let seg = rng.random_range(1..80).min(len - out.len());
        let kind = rng.random_range(0..10);
        for _ in 0..seg {
            out.push(match kind {
                0..=3 => Some(nominal_kw),
                4 => Some(0.0),
                5 => None,
                6 => Some(nominal_kw - rng.random_range(0.0..0.3)),
                7 => Some(500.0 + rng.random_range(0.0..0.25)),
                _ => Some(rng.random_range(0.0..nominal_kw)),
            });
        }
    }
    out
}

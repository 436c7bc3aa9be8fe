#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use windfeas_core::synth::{self, TowerParams};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn utc(s: &str) -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
}

/// One selected window from the reference implementation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleWindow {
    pub index: usize,
    pub energy_kwh: f64,
}

/// Straight-line reference: every start at the stride, two-pass population
/// variance, the three filters, then a first-fit scan.
pub fn oracle_day(
    values: &[Option<f64>],
    cadence_s: u32,
    t_charge_min: u32,
    t_ov_min: Option<u32>,
    sigma_max_kw: f64,
    floor_kwh: f64,
) -> Vec<OracleWindow> {
    let len = ((t_charge_min as f64 * 60.0) / cadence_s as f64).ceil() as usize;
    let stride = match t_ov_min {
        None => 1,
        Some(ov) => ((t_charge_min - ov) * 60 / cadence_s) as usize,
    };
    let mut stable = Vec::new();
    let mut s = 0;
    while s + len <= values.len() {
        let w = &values[s..s + len];
        if w.iter().all(|v| v.is_some()) {
            let xs: Vec<f64> = w.iter().map(|v| v.unwrap()).collect();
            let mean = xs.iter().sum::<f64>() / len as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / len as f64;
            let energy = mean * t_charge_min as f64 / 60.0;
            if var.sqrt() <= sigma_max_kw && energy >= floor_kwh {
                stable.push(OracleWindow { index: s, energy_kwh: energy });
            }
        }
        s += stride;
    }
    let mut taken: Vec<OracleWindow> = Vec::new();
    let mut free_from = 0;
    for w in stable {
        if w.index >= free_from {
            free_from = w.index + len;
            taken.push(w);
        }
    }
    taken
}

/// Whole EV sessions in `energy_kwh`, tolerant of summation round-off.
pub fn oracle_ev_count(energy_kwh: f64, per_ev_kwh: f64) -> u64 {
    let n = (energy_kwh / per_ev_kwh).floor();
    if (n + 1.0) * per_ev_kwh - energy_kwh <= 1e-9 * energy_kwh.max(1.0) {
        n as u64 + 1
    } else {
        n as u64
    }
}

/// Writes a seeded tower year plus a run config into `dir` and returns the
/// config path. Outputs go to `dir/<out>`.
pub fn synthetic_run(dir: &Path, seed: u64, days: usize, out: &str) -> PathBuf {
    let series = synth::synthetic_tower(seed, "SYN", utc("2019-01-01T00:00:00Z"), days, TowerParams::default()).unwrap();
    let tower = dir.join("tower.csv");
    if !tower.exists() {
        let f = std::fs::File::create(&tower).unwrap();
        synth::write_tower_csv(&series, std::io::BufWriter::new(f)).unwrap();
    }
    let cfg = format!(
        r#"output_dir = "{out}"
intervals_min = [1, 2, 3]
heatmap_months = ["2019-01"]

[turbines]
library = "{lib}"

[ev]
profile = "{ev}"

[[datasets]]
name = "SYN"
path = "tower.csv"
[datasets.schema]
timestamp_column = "time"
speed_column = "ws"
direction_column = "wd"
height_m = 20.0
sentinels = ["-999"]
"#,
        lib = fixture("turbines_sample.json").display(),
        ev = fixture("tesla_model3_srp.toml").display(),
    );
    let path = dir.join(format!("{out}.toml"));
    std::fs::write(&path, cfg).unwrap();
    path
}

/// Relative path and contents of every file under `root`, sorted.
pub fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

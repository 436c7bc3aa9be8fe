//! Run configuration file (TOML).
//!
//! ```toml
//! output_dir = "out"
//! intervals_min = [1, 2, 3]
//!
//! [shear]
//! alpha = 0.143
//!
//! [turbines]
//! library = "turbines.json"
//! ids = ["no16", "no124"]
//!
//! [ev]
//! profile = "tesla_model3_srp.toml"
//!
//! [window]
//! sigma_max_kw = 0.1
//! energy_floor = "full-charge"
//!
//! [[datasets]]
//! name = "M2"
//! path = "m2.csv"
//! [datasets.schema]
//! timestamp_column = "time"
//! speed_column = "ws"
//! direction_column = "wd"
//! height_m = 20.0
//! sentinels = ["-999"]
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ev::ChargingProfile;
use crate::ingest::TowerSchema;
use crate::shear::ShearParams;
use crate::stability::{EnergyFloor, WindowParams, DEFAULT_SIGMA_MAX_KW};
use crate::stats::DEFAULT_SECTORS;

pub const DEFAULT_MAX_IMPUTE_RUN: usize = 5;

fn default_intervals() -> Vec<u32> {
    vec![1, 2, 3]
}

fn default_max_run() -> usize {
    DEFAULT_MAX_IMPUTE_RUN
}

fn default_uplift() -> f64 {
    1.0
}

fn default_sectors() -> usize {
    DEFAULT_SECTORS
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA_MAX_KW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default = "default_intervals")]
    pub intervals_min: Vec<u32>,
    #[serde(default = "default_max_run")]
    pub max_impute_run: usize,
    /// Shortest missing run recorded as a gap; defaults to one sample more
    /// than `max_impute_run`.
    #[serde(default)]
    pub min_gap_min: Option<f64>,
    /// Multiplier on partial-load turbine output.
    #[serde(default = "default_uplift")]
    pub uplift: f64,
    #[serde(default = "default_sectors")]
    pub windrose_sectors: usize,
    /// `YYYY-MM` months written to the heat-map matrices; the first month
    /// of each dataset when empty.
    #[serde(default)]
    pub heatmap_months: Vec<String>,
    /// Also write the imputed, gap-marked input series per dataset.
    #[serde(default)]
    pub write_normalized: bool,
    #[serde(default)]
    pub shear: ShearParams,
    pub turbines: TurbineSelection,
    pub ev: EvSection,
    #[serde(default)]
    pub window: WindowSection,
    pub datasets: Vec<DatasetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbineSelection {
    pub library: PathBuf,
    /// Restrict the run to these ids, in this order. All turbines when absent.
    #[serde(default)]
    pub ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvSection {
    pub profile: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    /// Charge duration; derived from the EV profile when absent.
    #[serde(default)]
    pub t_charge_min: Option<u32>,
    #[serde(default)]
    pub t_ov_min: Option<u32>,
    #[serde(default = "default_sigma")]
    pub sigma_max_kw: f64,
    #[serde(default, alias = "energy_floor_mode")]
    pub energy_floor: EnergyFloor,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            t_charge_min: None,
            t_ov_min: None,
            sigma_max_kw: DEFAULT_SIGMA_MAX_KW,
            energy_floor: EnergyFloor::FullCharge,
        }
    }
}

impl WindowSection {
    pub fn params(&self, profile: &ChargingProfile) -> Result<WindowParams> {
        let t_charge_min = match self.t_charge_min {
            Some(t) => t,
            None => profile.charge_time()?,
        };
        let params = WindowParams {
            t_charge_min,
            t_ov_min: self.t_ov_min,
            sigma_max_kw: self.sigma_max_kw,
            energy_floor: self.energy_floor,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub schema: DatasetSchema,
}

/// [`TowerSchema`] with an optional site id (defaults to the dataset name).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    #[serde(default)]
    pub site_id: Option<String>,
    #[serde(flatten)]
    pub rest: toml::Table,
}

impl DatasetSpec {
    pub fn tower_schema(&self) -> Result<TowerSchema> {
        let mut table = self.schema.rest.clone();
        let site = self.schema.site_id.clone().unwrap_or_else(|| self.name.clone());
        table.insert("site_id".into(), toml::Value::String(site));
        table
            .try_into()
            .map_err(|e| Error::Config(format!("dataset `{}` schema: {e}", self.name)))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.turbines.library);
        fix(&mut self.ev.profile);
        for d in &mut self.datasets {
            fix(&mut d.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals_min.is_empty() {
            return Err(Error::Config("at least one averaging interval is required".into()));
        }
        if self.intervals_min.contains(&0) {
            return Err(Error::Config("averaging intervals must be positive".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("at least one dataset is required".into()));
        }
        if matches!(&self.turbines.ids, Some(ids) if ids.is_empty()) {
            return Err(Error::Config("turbine id filter is empty".into()));
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("dataset names must be unique".into()));
        }
        if let Some(bad) = self
            .datasets
            .iter()
            .find(|d| d.name.is_empty() || d.name.contains(['/', '\\']))
        {
            return Err(Error::Config(format!("dataset name `{}` is not a valid directory name", bad.name)));
        }
        if self.max_impute_run == 0 {
            return Err(Error::Config("max_impute_run must be at least 1".into()));
        }
        if !(self.uplift > 0.0 && self.uplift.is_finite()) {
            return Err(Error::Config(format!("uplift {} must be positive", self.uplift)));
        }
        if self.windrose_sectors == 0 {
            return Err(Error::Config("windrose_sectors must be positive".into()));
        }
        self.shear.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
output_dir = "out"
intervals_min = [1, 3]

[turbines]
library = "lib.json"
ids = ["no16"]

[ev]
profile = "/abs/ev.toml"

[window]
t_ov_min = 20
energy_floor_mode = "partial-charge"

[[datasets]]
name = "M2"
path = "m2.csv"
[datasets.schema]
timestamp_column = "time"
speed_column = "ws"
height_m = 20.0
sentinels = ["-999"]
"#;

    #[test]
    fn parses_and_resolves_paths() {
        let cfg = RunConfig::from_toml_str(SAMPLE, Path::new("/data/run")).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("/data/run/out"));
        assert_eq!(cfg.ev.profile, PathBuf::from("/abs/ev.toml"));
        assert_eq!(cfg.shear.alpha, 0.143);
        assert_eq!(cfg.max_impute_run, 5);
        let schema = cfg.datasets[0].tower_schema().unwrap();
        assert_eq!(schema.site_id, "M2");
        assert_eq!(schema.sentinels, vec!["-999".to_string()]);
        let params = cfg.window.params(&ChargingProfile::tesla_model3_srp()).unwrap();
        assert_eq!(params.t_charge_min, 21);
        assert_eq!(params.t_ov_min, Some(20));
        assert_eq!(params.energy_floor, EnergyFloor::PartialCharge);
    }

    #[test]
    fn rejects_empty_intervals() {
        let text = SAMPLE.replace("intervals_min = [1, 3]", "intervals_min = []");
        assert!(RunConfig::from_toml_str(&text, Path::new(".")).is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = SAMPLE.replace("output_dir", "outptu_dir = 1\noutput_dir");
        assert!(RunConfig::from_toml_str(&text, Path::new(".")).is_err());
    }
}

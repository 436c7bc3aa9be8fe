//! EV battery and charger characteristics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_soc_end() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingProfile {
    pub name: String,
    pub battery_kwh: f64,
    pub soc_start: f64,
    #[serde(default = "default_soc_end")]
    pub soc_end: f64,
    pub charger_kw: f64,
    /// Published charge time; checked against the derived one when given.
    #[serde(default)]
    pub t_charge_min: Option<f64>,
}

impl ChargingProfile {
    /// 50 kWh pack, 10-80 % fast-charge span, 100 kW average charger power.
    pub fn tesla_model3_srp() -> Self {
        Self {
            name: "Tesla Model 3 Standard Range Plus".into(),
            battery_kwh: 50.0,
            soc_start: 0.1,
            soc_end: 0.8,
            charger_kw: 100.0,
            t_charge_min: Some(21.0),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let profile: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.battery_kwh > 0.0 && self.battery_kwh.is_finite()) {
            return Err(Error::Domain(format!("battery capacity {} kWh must be positive", self.battery_kwh)));
        }
        if !(self.charger_kw > 0.0 && self.charger_kw.is_finite()) {
            return Err(Error::Domain(format!("charger power {} kW must be positive", self.charger_kw)));
        }
        if !(0.0..1.0).contains(&self.soc_start) || !(self.soc_end > 0.0 && self.soc_end <= 1.0) {
            return Err(Error::Domain(format!(
                "state of charge span [{}, {}] outside [0, 1]",
                self.soc_start, self.soc_end
            )));
        }
        if self.soc_start >= self.soc_end {
            return Err(Error::Domain(format!(
                "soc_start {} must be below soc_end {}",
                self.soc_start, self.soc_end
            )));
        }
        if let Some(t) = self.t_charge_min {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("charge time {t} min must be positive")));
            }
            let derived = self.charge_time_exact_min();
            if (t - derived).abs() > 1.0 {
                return Err(Error::Domain(format!(
                    "stated charge time {t} min disagrees with derived {derived:.2} min"
                )));
            }
        }
        Ok(())
    }

    /// Energy delivered by one charging session in kWh.
    pub fn energy_per_charge(&self) -> f64 {
        // difference of products keeps round SoC values exact (50*0.8 - 50*0.1 == 35)
        self.battery_kwh * self.soc_end - self.battery_kwh * self.soc_start
    }

    /// Unrounded charge duration in minutes.
    pub fn charge_time_exact_min(&self) -> f64 {
        60.0 * self.energy_per_charge() / self.charger_kw
    }

    /// Charge duration rounded to whole minutes, the unit used for windowing.
    pub fn charge_time(&self) -> Result<u32> {
        if !(self.charger_kw > 0.0) {
            return Err(Error::Domain("charger power must be positive".into()));
        }
        let t = self.charge_time_exact_min().round();
        if t < 1.0 {
            return Err(Error::Domain(format!("charge time rounds to {t} min")));
        }
        Ok(t as u32)
    }

    /// Energy a charger draws in one minute, the partial-charge floor.
    pub fn charger_energy_per_minute(&self) -> f64 {
        self.charger_kw / 60.0
    }
}

/// Whole charging sessions an energy total can supply.
pub fn ev_count(energy_kwh: f64, profile: &ChargingProfile) -> u64 {
    if !(energy_kwh > 0.0) {
        return 0;
    }
    let ratio = energy_kwh / profile.energy_per_charge();
    // absorbs representation error when the total is an exact multiple
    (ratio * (1.0 + 1e-12)).floor() as u64
}

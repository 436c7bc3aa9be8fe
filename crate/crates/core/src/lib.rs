//! Wind data analysis for off-grid direct EV fast charging.
//!
//! The pipeline ingests met-tower wind records, averages them over short
//! intervals, lifts them to turbine hub height, converts them to turbine
//! output and looks for charge-length windows of near-constant power that
//! could feed a DC fast charger without storage. Daily energy from the
//! non-overlapping stable windows is turned into a count of EV charging
//! sessions.
//!
//! Modules follow the pipeline order: [`ingest`], [`shear`], [`turbine`],
//! [`ev`], [`stability`], [`stats`] and [`report`], which ties them together
//! behind a [`config::RunConfig`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod ev;
pub mod exec;
pub mod ingest;
pub mod report;
pub mod shear;
pub mod stability;
pub mod stats;
pub mod synth;
pub mod turbine;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use ev::ChargingProfile;
pub use exec::Exec;
pub use ingest::{Gap, TowerSchema, WindSample, WindSeries};
pub use report::FeasibilityReport;
pub use shear::ShearParams;
pub use stability::{DailyResult, EnergyFloor, StableWindow, WindowParams};
pub use stats::{SummaryStats, WeibullFit, WindroseTable};
pub use turbine::{PowerSeries, TurbineSpec};

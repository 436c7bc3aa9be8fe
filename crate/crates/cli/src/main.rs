use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};
use serde_json::json;
use windfeas_core::ingest::{self, TowerSchema};
use windfeas_core::synth::{self, TowerParams};
use windfeas_core::{report, stats, turbine, Exec, RunConfig};

#[derive(Parser)]
#[command(name = "windfeas", version, about = "Wind-powered direct EV fast-charging feasibility")]
struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for synthetic data generation.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a turbine library and list rejected entries.
    ValidateTurbines { path: PathBuf },
    /// Summary, Weibull fit and windrose of one tower file, as JSON.
    Stats {
        #[arg(long)]
        wind: PathBuf,
        /// Averaging interval in minutes.
        #[arg(long)]
        interval: u32,
        /// Tower schema (TOML); the normalized CSV layout when omitted.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Measurement height for the normalized layout.
        #[arg(long, default_value_t = 20.0)]
        height: f64,
        #[arg(long, default_value_t = 5)]
        max_impute_run: usize,
        #[arg(long, default_value_t = stats::DEFAULT_SECTORS)]
        sectors: usize,
    },
    /// Write a seeded synthetic tower file (`time,ws,wd`, -999 for missing).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 365)]
        days: usize,
        #[arg(long, default_value = "2019-01-01T00:00:00Z")]
        start: DateTime<Utc>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let exec = Exec::for_threads(cli.threads);
    match cli.command {
        Command::Run { config } => run(&config, exec),
        Command::ValidateTurbines { path } => validate_turbines(&path),
        Command::Stats {
            wind,
            interval,
            schema,
            height,
            max_impute_run,
            sectors,
        } => wind_stats(&wind, interval, schema, height, max_impute_run, sectors),
        Command::Synth { out, days, start } => {
            let series = synth::synthetic_tower(cli.seed, "SYN", start, days, TowerParams::default())?;
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            synth::write_tower_csv(&series, BufWriter::new(f))?;
            log::info!("wrote {} samples to {}", series.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(config: &PathBuf, exec: Exec) -> Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let rep = report::run(&cfg, exec)?;
    for f in &rep.failures {
        log::warn!(
            "{} / {} / {}: {}",
            f.dataset.as_deref().unwrap_or("-"),
            f.interval_min.map_or("-".into(), |m| format!("{m} min")),
            f.turbine.as_deref().unwrap_or("-"),
            f.error
        );
    }
    log::info!(
        "{} datasets analysed, {} failures, outputs in {}",
        rep.datasets.len(),
        rep.failures.len(),
        cfg.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate_turbines(path: &PathBuf) -> Result<ExitCode> {
    let lib = turbine::load_turbine_library(path)?;
    for t in &lib.turbines {
        println!(
            "ok       {}  hub {} m  cut-in {}  rated {}  cut-out {} m/s  {} kW",
            t.id, t.hub_height_m, t.cut_in_ms, t.rated_ms, t.cut_out_ms, t.nominal_kw
        );
    }
    for r in &lib.rejected {
        println!("rejected #{} {}: {}", r.index, r.id.as_deref().unwrap_or("?"), r.reason);
    }
    Ok(if lib.rejected.is_empty() && !lib.turbines.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn wind_stats(
    wind: &PathBuf,
    interval_min: u32,
    schema: Option<PathBuf>,
    height: f64,
    max_impute_run: usize,
    sectors: usize,
) -> Result<ExitCode> {
    let schema = match schema {
        Some(p) => {
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            TowerSchema::from_toml_str(&text)?
        }
        None => TowerSchema {
            cadence_s: None,
            ..TowerSchema::normalized("wind", height, 60)
        },
    };
    let raw = ingest::parse_tower_file(wind, &schema)?;
    let months = ingest::missing_fraction_by_month(&raw);
    let cleaned = ingest::impute_short_gaps(&raw, max_impute_run)?;
    let min_gap = (max_impute_run as i64 + 1) * raw.cadence_s() as i64;
    let gaps = ingest::detect_long_gaps(&cleaned, min_gap)?;
    let cleaned = cleaned.with_gaps(gaps)?;
    let averaged = ingest::resample_average(&cleaned, interval_min * 60)?;
    let speeds: Vec<f64> = averaged.speeds().iter().flatten().copied().collect();
    let out = json!({
        "site_id": raw.site_id(),
        "interval_min": interval_min,
        "n_samples": averaged.len(),
        "n_gaps": cleaned.gaps().len(),
        "missing_by_month": months,
        "overall_missing_fraction": ingest::overall_missing_fraction(&months),
        "summary": stats::summary_of(&speeds),
        "weibull": stats::fit_weibull(&speeds).map_err(|e| e.to_string()),
        "windrose": stats::windrose(&averaged, sectors)?,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

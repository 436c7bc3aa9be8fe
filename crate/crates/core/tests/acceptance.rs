//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Set `WINDFEAS_REPLAY_CONFIG` to a run config over real tower extracts to
//! enable the replay check.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Weibull};
use windfeas_core::ev::ChargingProfile;
use windfeas_core::exec::Exec;
use windfeas_core::ingest::{self, WindSeries};
use windfeas_core::shear;
use windfeas_core::stability::{self, DaySlice, EnergyFloor, WindowParams};
use windfeas_core::stats;
use windfeas_core::synth::{self, TowerParams};
use windfeas_core::turbine::{self, TurbineSpec};
use windfeas_core::RunConfig;

use common::{fixture, oracle_day, oracle_ev_count, utc};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn timed(budget: Duration, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let t = Instant::now();
    let r = f();
    let el = t.elapsed();
    match r {
        Err(e) => Outcome::Fail(e),
        Ok(_) if el > budget => Outcome::Fail(format!("took {el:.2?}, budget {budget:?}")),
        Ok(msg) => Outcome::Pass(format!("{msg} in {el:.2?}")),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn charge_time() -> Outcome {
    let loaded = match ChargingProfile::load(fixture("tesla_model3_srp.toml")) {
        Ok(p) => p,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    timed(Duration::from_millis(1), || {
        for p in [ChargingProfile::tesla_model3_srp(), loaded] {
            let t = p.charge_time().map_err(|e| e.to_string())?;
            ensure(t == 21, || format!("t_charge {t} min, expected 21"))?;
        }
        Ok("t_charge = 21 min".into())
    })
}

fn boundary_suite() -> Outcome {
    timed(Duration::from_secs(1), || {
        let lib = turbine::load_turbine_library(fixture("turbines_sample.json")).map_err(|e| e.to_string())?;
        ensure(lib.turbines.len() == 3 && lib.rejected.is_empty(), || "fixture must hold 3 valid turbines".into())?;
        for t in &lib.turbines {
            let below_cut_out = [t.cut_out_ms - 1e-9, f64::from_bits(t.cut_out_ms.to_bits() - 1)];
            let mut cases = vec![(t.cut_in_ms, 0.0), (t.rated_ms, t.nominal_kw), (t.cut_out_ms, 0.0)];
            cases.extend(below_cut_out.map(|v| (v, t.nominal_kw)));
            for (v, want) in cases {
                let got = t.power_at(Some(v));
                ensure(got == Some(want), || format!("{} at {v} m/s: {got:?}, expected {want}", t.id))?;
            }
        }
        Ok("3 turbines, 15 boundary points exact".into())
    })
}

fn no16() -> TurbineSpec {
    let lib = turbine::load_turbine_library(fixture("turbines_sample.json")).unwrap();
    lib.get("no16").unwrap().clone()
}

fn constant_rated_day() -> Outcome {
    let spec = no16();
    timed(Duration::from_secs(1), || {
        let wind = synth::constant_series("X", spec.hub_height_m, utc("2018-06-01T00:00:00Z"), 60, 1440, spec.rated_ms)
            .map_err(|e| e.to_string())?;
        let power = turbine::power_series(&spec, &wind);
        let params = WindowParams::new(21).with_overlap(20);
        let profile = ChargingProfile::tesla_model3_srp();
        let days = power.days();
        ensure(days.len() == 1, || format!("{} days", days.len()))?;
        let a = stability::analyze_day(&days[0], &params, &profile).map_err(|e| e.to_string())?;
        let r = &a.result;
        ensure(r.n_windows == 68, || format!("N = {}", r.n_windows))?;
        ensure((r.total_energy_kwh - 78_540.0).abs() <= 1e-6, || format!("E = {}", r.total_energy_kwh))?;
        ensure(r.ev_count == 2_244, || format!("EVs = {}", r.ev_count))?;
        Ok("N = 68, E = 78540 kWh, 2244 EVs".into())
    })
}

fn oracle_equivalence() -> Outcome {
    timed(Duration::from_secs(30), || {
        let mut rng = synth::rng(20_240_601);
        let profile = ChargingProfile::tesla_model3_srp();
        let start = utc("2018-03-01T00:00:00Z");
        let mut total_windows = 0;
        for case in 0..200 {
            let len = rng.random_range(1..=2000);
            let values = synth::random_power_day(&mut rng, len, 3300.0);
            let t_charge = [21, 15, 30, 10][case % 4];
            let t_ov = match rng.random_range(0..3) {
                0 => None,
                1 => Some(t_charge - 1),
                _ => Some(rng.random_range(0..t_charge)),
            };
            let sigma = [0.1, 0.2, 5.0][case % 3];
            let floor = if case % 5 == 0 { EnergyFloor::PartialCharge } else { EnergyFloor::FullCharge };
            let params = WindowParams {
                t_charge_min: t_charge,
                t_ov_min: t_ov,
                sigma_max_kw: sigma,
                energy_floor: floor,
            };
            let day = DaySlice {
                date: start.date_naive(),
                start,
                cadence_s: 60,
                values: &values,
            };
            let got = stability::analyze_day(&day, &params, &profile).map_err(|e| e.to_string())?.result;
            let floor_kwh = params.energy_floor_kwh(&profile);
            let want = oracle_day(&values, 60, t_charge, t_ov, sigma, floor_kwh);
            let got_idx: Vec<usize> = got.windows.iter().map(|w| w.index).collect();
            let want_idx: Vec<usize> = want.iter().map(|w| w.index).collect();
            ensure(got_idx == want_idx, || format!("case {case}: windows {got_idx:?} vs {want_idx:?}"))?;
            let e: f64 = want.iter().map(|w| w.energy_kwh).sum();
            let rel = (got.total_energy_kwh - e).abs() / e.abs().max(f64::MIN_POSITIVE);
            ensure(rel <= 1e-9 || got.total_energy_kwh == e, || {
                format!("case {case}: energy {} vs {e}", got.total_energy_kwh)
            })?;
            let evs = oracle_ev_count(e, profile.energy_per_charge());
            ensure(got.ev_count == evs, || format!("case {case}: EVs {} vs {evs}", got.ev_count))?;
            total_windows += want.len();
        }
        Ok(format!("200 cases, {total_windows} windows matched"))
    })
}

fn block_means(values: &[Option<f64>], k: usize) -> Vec<Option<f64>> {
    values
        .chunks(k)
        .map(|c| c.iter().copied().sum::<Option<f64>>().map(|s| s / k as f64))
        .collect()
}

fn slice(values: &[Option<f64>], cadence_s: u32) -> DaySlice<'_> {
    let start = utc("2018-01-01T00:00:00Z");
    DaySlice {
        date: start.date_naive(),
        start,
        cadence_s,
        values,
    }
}

fn averaging_monotonicity() -> Outcome {
    timed(Duration::from_secs(10), || {
        let mut rng = synth::rng(7);
        let profile = ChargingProfile::tesla_model3_srp();
        let fine = WindowParams::new(21).with_overlap(18);
        let coarse = fine;
        let (mut checked, mut stable_fine, mut stable_coarse) = (0usize, 0usize, 0usize);
        for d in 0..100 {
            let values = synth::random_power_day(&mut rng, 1440, 3300.0);
            let blocks = block_means(&values, 3);
            let cf = stability::enumerate_windows(&slice(&values, 60), &fine).map_err(|e| e.to_string())?;
            let cc = stability::enumerate_windows(&slice(&blocks, 180), &coarse).map_err(|e| e.to_string())?;
            ensure(cf.len() == cc.len(), || format!("day {d}: {} vs {} candidates", cf.len(), cc.len()))?;
            for (f, c) in cf.iter().zip(&cc) {
                let (Some(sf), Some(sc)) = (f.stats, c.stats) else {
                    ensure(f.stats.is_none() && c.stats.is_none(), || format!("day {d}: validity differs at {}", f.index))?;
                    continue;
                };
                checked += 1;
                ensure(sc.std_kw <= sf.std_kw * (1.0 + 1e-9) + 1e-12, || {
                    format!("day {d} window {}: sigma {} > {}", f.index, sc.std_kw, sf.std_kw)
                })?;
            }
            let n = |cands: &[stability::Candidate], len| stability::filter_stable(cands, &fine, &profile, len).len();
            let (nf, nc) = (n(&cf, 21), n(&cc, 7));
            ensure(nc >= nf, || format!("day {d}: {nc} stable at 3 min < {nf} at 1 min"))?;
            stable_fine += nf;
            stable_coarse += nc;
        }
        Ok(format!("{checked} windows, stable {stable_fine} -> {stable_coarse}"))
    })
}

fn weibull_recovery() -> Outcome {
    timed(Duration::from_secs(5), || {
        let dist = Weibull::new(4.8, 1.34).unwrap();
        let mut rng = synth::rng(1234);
        let xs: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
        let fit = stats::fit_weibull(&xs).map_err(|e| e.to_string())?;
        let (es, ek) = ((fit.scale / 4.8 - 1.0).abs(), (fit.shape / 1.34 - 1.0).abs());
        ensure(es <= 0.02 && ek <= 0.02, || format!("lambda {} k {}", fit.scale, fit.shape))?;
        Ok(format!("lambda = {:.4}, k = {:.4}", fit.scale, fit.shape))
    })
}

fn tower(seed: u64, days: usize, dropout: f64, outage: f64) -> WindSeries {
    let params = TowerParams {
        dropout_rate: dropout,
        outage_rate: outage,
        ..TowerParams::default()
    };
    synth::synthetic_tower(seed, "P", utc("2018-05-01T00:00:00Z"), days, params).unwrap()
}

fn ingest_invariants() -> Outcome {
    timed(Duration::from_secs(10), || {
        for seed in 0..100u64 {
            let s = tower(seed, 1 + seed as usize % 3, 0.0, 0.0);
            let interval = [120, 180, 300, 600][seed as usize % 4];
            let r = ingest::resample_average(&s, interval).map_err(|e| e.to_string())?;
            let mean = |x: &WindSeries| x.speeds().iter().flatten().sum::<f64>() / x.speeds().iter().flatten().count() as f64;
            let (a, b) = (mean(&s), mean(&r));
            ensure(((a - b) / a).abs() <= 1e-12, || format!("seed {seed}: mean {a} -> {b}"))?;
        }
        for seed in 100..200u64 {
            let raw = tower(seed, 2, 0.01, 0.5);
            let cleaned = ingest::impute_short_gaps(&raw, 5).map_err(|e| e.to_string())?;
            let gaps = ingest::detect_long_gaps(&cleaned, 360).map_err(|e| e.to_string())?;
            let cleaned = cleaned.with_gaps(gaps).map_err(|e| e.to_string())?;
            let interval = [120u32, 180, 300][seed as usize % 3];
            let r = ingest::resample_average(&cleaned, interval).map_err(|e| e.to_string())?;
            for (i, v) in r.speeds().iter().enumerate() {
                let (ws, we) = (r.timestamp(i), r.timestamp(i + 1));
                ensure(v.is_none() || !cleaned.gaps().iter().any(|g| g.intersects(ws, we)), || {
                    format!("seed {seed}: averaged sample at {ws} spans a gap")
                })?;
            }
            for g in cleaned.gaps() {
                ensure(r.gaps().iter().any(|h| h.start <= g.start && g.end <= h.end), || {
                    format!("seed {seed}: gap {g:?} lost by averaging")
                })?;
            }
        }
        for seed in 200..300u64 {
            let raw = tower(seed, 1, 0.05, 0.3);
            let once = ingest::impute_short_gaps(&raw, 5).map_err(|e| e.to_string())?;
            let twice = ingest::impute_short_gaps(&once, 5).map_err(|e| e.to_string())?;
            ensure(once == twice, || format!("seed {seed}: imputation not idempotent"))?;
        }
        Ok("300 series".into())
    })
}

fn shear_composition() -> Outcome {
    timed(Duration::from_secs(1), || {
        let mut rng = synth::rng(99);
        for _ in 0..1000 {
            let v = rng.random_range(0.0..30.0);
            let [z0, z1, z2] = [(); 3].map(|_| rng.random_range(1.0..200.0));
            let a = rng.random_range(0.05..0.5);
            let same = shear::extrapolate(v, z0, z0, a).map_err(|e| e.to_string())?;
            ensure(same == v, || format!("identity broke at v {v} z {z0}"))?;
            let via = shear::extrapolate(shear::extrapolate(v, z0, z1, a).unwrap(), z1, z2, a).unwrap();
            let direct = shear::extrapolate(v, z0, z2, a).unwrap();
            ensure((via - direct).abs() <= 1e-12 * direct.abs(), || format!("{via} vs {direct}"))?;
        }
        Ok("1000 triples".into())
    })
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    timed(Duration::from_secs(120), || {
        let mut snaps = Vec::new();
        for (out, exec) in [("a", Exec::default()), ("b", Exec::Sequential)] {
            let cfg_path = common::synthetic_run(dir.path(), 2019, 365, out);
            let cfg = RunConfig::load(&cfg_path).map_err(|e| e.to_string())?;
            windfeas_core::report::run(&cfg, exec).map_err(|e| e.to_string())?;
            snaps.push(common::snapshot(&dir.path().join(out)));
        }
        ensure(!snaps[0].is_empty(), || "no output written".into())?;
        for (x, y) in snaps[0].iter().zip(&snaps[1]) {
            ensure(x.0 == y.0 && x.1 == y.1, || format!("{} differs", x.0.display()))?;
        }
        ensure(snaps[0].len() == snaps[1].len(), || "file sets differ".into())?;
        Ok(format!("{} files identical", snaps[0].len()))
    })
}

fn replay() -> Outcome {
    let Ok(path) = std::env::var("WINDFEAS_REPLAY_CONFIG") else {
        return Outcome::Skip("WINDFEAS_REPLAY_CONFIG not set".into());
    };
    timed(Duration::MAX, || {
        let cfg = RunConfig::load(&path).map_err(|e| e.to_string())?;
        let report = windfeas_core::report::run(&cfg, Exec::default()).map_err(|e| e.to_string())?;
        ensure(report.failures.is_empty(), || format!("{} failures recorded", report.failures.len()))?;
        let mut cells = 0;
        for ds in &report.datasets {
            ensure(ds.intervals.len() == cfg.intervals_min.len(), || format!("{}: missing intervals", ds.name))?;
            for iv in &ds.intervals {
                for t in &iv.turbines {
                    let ctx = format!("{} {} min {}", ds.name, iv.interval_min, t.turbine_id);
                    for p in [t.stability.pct_of_all, t.stability.pct_of_valid] {
                        let p = p.ok_or_else(|| format!("{ctx}: empty cell"))?;
                        ensure((0.0..=100.0).contains(&p), || format!("{ctx}: {p}%"))?;
                    }
                    ensure(!t.monthly.is_empty(), || format!("{ctx}: no monthly EV table"))?;
                    cells += 1;
                }
            }
            let pick = |m: u32| ds.intervals.iter().find(|iv| iv.interval_min == m);
            if let (Some(one), Some(three)) = (pick(1), pick(3)) {
                for (a, b) in one.turbines.iter().zip(&three.turbines) {
                    ensure(b.stability.pct_of_all >= a.stability.pct_of_all, || {
                        format!("{} {}: 3 min below 1 min", ds.name, a.turbine_id)
                    })?;
                }
            }
        }
        Ok(format!("{cells} cells"))
    })
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("charge time from EV profile", charge_time),
        ("power-curve boundaries", boundary_suite),
        ("constant rated wind day", constant_rated_day),
        ("window selection matches brute force", oracle_equivalence),
        ("averaging never raises window variability", averaging_monotonicity),
        ("Weibull parameter recovery", weibull_recovery),
        ("ingest invariants", ingest_invariants),
        ("shear identity and composition", shear_composition),
        ("byte-identical repeated runs", determinism),
        ("data replay structure", replay),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let (tag, detail) = match check() {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Fail(m) => {
                failed += 1;
                ("FAIL", m)
            }
            Outcome::Skip(m) => ("SKIP", m),
        };
        println!("{tag} [{:>2}] {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

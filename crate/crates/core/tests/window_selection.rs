mod common;

use proptest::prelude::*;
use windfeas_core::ev::ChargingProfile;
use windfeas_core::stability::{self, DaySlice, EnergyFloor, WindowParams};
use windfeas_core::synth;

use common::{oracle_day, oracle_ev_count, utc};

fn day(values: &[Option<f64>], cadence_s: u32) -> DaySlice<'_> {
    let start = utc("2018-04-01T00:00:00Z");
    DaySlice {
        date: start.date_naive(),
        start,
        cadence_s,
        values,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn analyze_day_matches_brute_force(
        seed in any::<u64>(),
        len in 1usize..1500,
        t_charge in 2u32..40,
        ov_pick in 0u32..100,
        sigma in prop::sample::select(vec![0.1, 1.0, 50.0]),
        partial in any::<bool>(),
    ) {
        let mut rng = synth::rng(seed);
        let values = synth::random_power_day(&mut rng, len, 3000.0);
        let t_ov = (ov_pick < 90).then_some(ov_pick % t_charge);
        let params = WindowParams {
            t_charge_min: t_charge,
            t_ov_min: t_ov,
            sigma_max_kw: sigma,
            energy_floor: if partial { EnergyFloor::PartialCharge } else { EnergyFloor::FullCharge },
        };
        let profile = ChargingProfile::tesla_model3_srp();
        let got = stability::analyze_day(&day(&values, 60), &params, &profile).unwrap().result;
        let want = oracle_day(&values, 60, t_charge, t_ov, sigma, params.energy_floor_kwh(&profile));
        let gi: Vec<usize> = got.windows.iter().map(|w| w.index).collect();
        let wi: Vec<usize> = want.iter().map(|w| w.index).collect();
        prop_assert_eq!(gi, wi);
        let e: f64 = want.iter().map(|w| w.energy_kwh).sum();
        prop_assert!((got.total_energy_kwh - e).abs() <= 1e-9 * e.max(1.0));
        prop_assert_eq!(got.ev_count, oracle_ev_count(e, 35.0));
        for pair in got.windows.windows(2) {
            prop_assert!(!pair[0].overlaps(&pair[1]));
        }
    }

    #[test]
    fn two_minute_cadence_matches_brute_force(seed in any::<u64>(), len in 1usize..720) {
        let mut rng = synth::rng(seed);
        let values = synth::random_power_day(&mut rng, len, 3300.0);
        let params = WindowParams::new(21);
        let profile = ChargingProfile::tesla_model3_srp();
        let got = stability::analyze_day(&day(&values, 120), &params, &profile).unwrap().result;
        let want = oracle_day(&values, 120, 21, None, 0.1, 35.0);
        let gi: Vec<usize> = got.windows.iter().map(|w| w.index).collect();
        let wi: Vec<usize> = want.iter().map(|w| w.index).collect();
        prop_assert_eq!(gi, wi);
    }
}

#[test]
fn candidate_count_for_full_day() {
    let values = vec![Some(3300.0); 1440];
    let c = stability::enumerate_windows(&day(&values, 60), &WindowParams::new(21).with_overlap(20)).unwrap();
    assert_eq!(c.len(), 1420);
    let c = stability::enumerate_windows(&day(&values, 60), &WindowParams::new(21).with_overlap(0)).unwrap();
    assert_eq!(c.len(), 68);
}

#[test]
fn constant_rated_day_closed_form() {
    let values = vec![Some(3300.0); 1440];
    let profile = ChargingProfile::tesla_model3_srp();
    let r = stability::analyze_day(&day(&values, 60), &WindowParams::new(21).with_overlap(20), &profile)
        .unwrap()
        .result;
    assert_eq!(r.n_windows, 68);
    assert!((r.total_energy_kwh - 78_540.0).abs() < 1e-6);
    assert_eq!(r.ev_count, 2244);
    assert_eq!(r.n_stable_candidates, 1420);
}

#[test]
fn stride_not_on_sample_grid_is_rejected() {
    let values = vec![Some(3300.0); 720];
    let params = WindowParams::new(21).with_overlap(20);
    assert!(stability::analyze_day(&day(&values, 120), &params, &ChargingProfile::tesla_model3_srp()).is_err());
}

//! Randomized invariants over the whole pipeline: trajectories never leave
//! the invariant domain, scenario files survive a save/load round trip
//! bit-for-bit, and the generator only emits scenarios that validate and
//! land on the requested side of the threshold.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use siws::dynamics::simulate_multi;
use siws::generate::{random_scenario, RegimeTarget};
use siws::scenario::{load_scenario, save_scenario, ScenarioFile, RNG_ALGORITHM};
use siws::spectral::reproduction_number;
use siws::{assemble_full, resource_bound, validate, MultiVirusScenario, SpreadingParams, State};

prop_compose! {
    fn arb_params(n: usize, m: usize)(
        infection in proptest::collection::vec(0.005f64..0.2, n * n),
        resource_infection in proptest::collection::vec(0.005f64..0.2, n * m),
        contamination in proptest::collection::vec(0.005f64..0.2, m * n),
        healing in proptest::collection::vec(0.1f64..1.0, n),
        decay in proptest::collection::vec(0.1f64..1.0, m),
    ) -> SpreadingParams {
        SpreadingParams::new(
            DMatrix::from_row_slice(n, n, &infection),
            DMatrix::from_row_slice(n, m, &resource_infection),
            DMatrix::from_row_slice(m, n, &contamination),
            DVector::from_row_slice(&healing),
            DVector::from_row_slice(&decay),
        )
        .expect("strictly positive draws satisfy every shape and sign check")
    }
}

fn arb_scenario() -> impl Strategy<Value = MultiVirusScenario> {
    (2usize..6, 1usize..3).prop_flat_map(|(n, m)| {
        (
            arb_params(n, m),
            proptest::collection::vec(0.0f64..0.9, n),
            proptest::collection::vec(0.0f64..1.5, m),
        )
            .prop_map(move |(params, x, w)| {
                let initial =
                    State::new(DVector::from_row_slice(&x), DVector::from_row_slice(&w));
                MultiVirusScenario::single(params, initial, 0.01).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn trajectories_stay_in_domain(scenario in arb_scenario()) {
        prop_assume!(validate(&scenario).passed);
        let bound = resource_bound(scenario.viruses(), &scenario.initial()[0].w).unwrap();
        let traj = simulate_multi(&scenario, None, 200, 1e-300, 1).unwrap();
        for (step, states) in &traj.samples {
            prop_assert!(
                states[0].in_domain(bound),
                "left the domain at step {}",
                step
            );
        }
    }

    #[test]
    fn scenario_files_round_trip(scenario in arb_scenario()) {
        let file = ScenarioFile::from_scenario(&scenario);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        save_scenario(&path, &file).unwrap();
        let loaded = load_scenario(&path).unwrap();
        prop_assert_eq!(loaded, file);
    }

    #[test]
    fn generated_scenarios_always_validate(
        seed in any::<u64>(),
        n in 2usize..10,
        m in 1usize..3,
        l in 1usize..3,
        parity in any::<bool>(),
    ) {
        let target = match (l, parity) {
            (1, true) => RegimeTarget::Subcritical,
            (1, false) => RegimeTarget::Supercritical,
            (_, true) => RegimeTarget::Mixed,
            (_, false) => RegimeTarget::Subcritical,
        };
        let file = random_scenario(n, m, l, 0.01, seed, target).unwrap();
        let rng = file.rng.as_ref().expect("generator stamps its bit source");
        prop_assert_eq!(rng.algorithm.as_str(), RNG_ALGORITHM);
        prop_assert_eq!(rng.seed, seed);

        // Same arguments, same file, bit for bit.
        let again = random_scenario(n, m, l, 0.01, seed, target).unwrap();
        prop_assert_eq!(&again, &file);

        let scenario = file.to_scenario().unwrap();
        prop_assert!(validate(&scenario).passed);
        for (k, params) in scenario.viruses().iter().enumerate() {
            let full = assemble_full(params, scenario.h).unwrap();
            let r0 = reproduction_number(&full).unwrap();
            let supercritical_expected = match target {
                RegimeTarget::Subcritical => false,
                RegimeTarget::Supercritical => true,
                RegimeTarget::Mixed => k == 0,
            };
            prop_assert_eq!(
                r0 > 1.0,
                supercritical_expected,
                "virus {} at r0 {}",
                k + 1,
                r0
            );
        }
    }
}

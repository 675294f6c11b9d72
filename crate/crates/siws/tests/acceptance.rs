//! Acceptance gate: one test per release criterion. Each prints a single
//! `ACCEPTANCE NN <name>: PASS` line on success (visible with
//! `cargo test --test acceptance -- --nocapture`) and fails loudly otherwise.
//! Tolerances are stated inline next to each assertion.

use nalgebra::{DMatrix, DVector};
use siws::analysis::{
    classify_time_varying, endemic_fixed_point, equilibrium_preserving_family, error_matrices,
    homogeneous_equilibrium, sensitivity, HomogeneousBase, Regime,
};
use siws::dynamics::{
    reference_continuous, simulate, simulate_multi, step_single, ParameterSchedule, StopReason,
};
use siws::generate::{random_scenario, random_switching_schedule, RegimeTarget};
use siws::model::FullSystem;
use siws::scenario::{load_scenario, StateBlock};
use siws::spectral::{reproduction_number, spectral_radius, step_radius, EIGEN_TOL};
use siws::{assemble_full, resource_bound, validate, MultiVirusScenario, SpreadingParams, State};
use std::collections::HashMap;
use std::time::Instant;

fn report(number: usize, name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("ACCEPTANCE {:02} {}: PASS", number, name),
        Err(cause) => {
            println!("ACCEPTANCE {:02} {}: FAIL", number, name);
            std::panic::resume_unwind(cause);
        }
    }
}

/// Survey-sized subcritical scenario (15 nodes, 2 resources, h = 0.01)
/// started from the half-infected state. The drawn coupling is weakened
/// until the step radius clears one by at least 1e-4, so the extinction
/// transient fits the stated step budget.
fn firm_subcritical(seed: u64) -> MultiVirusScenario {
    let mut file = random_scenario(15, 2, 1, 0.01, seed, RegimeTarget::Subcritical).unwrap();
    file.initial = vec![StateBlock {
        x: vec![0.5; 15],
        w: vec![0.5; 2],
    }];
    loop {
        let scenario = file.to_scenario().unwrap();
        let full = assemble_full(&scenario.viruses()[0], scenario.h).unwrap();
        if step_radius(&full).unwrap() <= 1.0 - 1e-4 {
            assert!(validate(&scenario).passed, "seed {}", seed);
            return scenario;
        }
        let block = &mut file.viruses[0];
        for v in block
            .infection
            .iter_mut()
            .chain(block.resource_infection.iter_mut())
            .chain(block.contamination.iter_mut())
        {
            *v *= 0.7;
        }
    }
}

#[test]
fn acceptance_01_healthy_state_convergence() {
    report(1, "healthy-state convergence", || {
        let start = Instant::now();
        for seed in 0..50u64 {
            let scenario = firm_subcritical(1_000 + seed);
            let full = assemble_full(&scenario.viruses()[0], scenario.h).unwrap();
            assert!(step_radius(&full).unwrap() <= 1.0);
            let traj = simulate_multi(&scenario, None, 1_000_000, 1e-13, 0).unwrap();
            let norm = traj.limit[0].max_norm();
            assert!(norm < 1e-8, "seed {}: final max-norm {}", seed, norm);
        }
        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed < 60.0, "took {} s", elapsed);
    });
}

#[test]
fn acceptance_02_endemic_convergence() {
    report(2, "endemic convergence to the solved equilibrium", || {
        for seed in 0..50u64 {
            let file =
                random_scenario(15, 2, 1, 0.01, 2_000 + seed, RegimeTarget::Supercritical)
                    .unwrap();
            let scenario = file.to_scenario().unwrap();
            let checked = validate(&scenario);
            assert!(checked.passed && checked.endemic_margin_ok, "seed {}", seed);
            assert!(scenario.initial()[0].max_norm() > 0.0, "seed {}", seed);

            let full = assemble_full(&scenario.viruses()[0], scenario.h).unwrap();
            let solved = endemic_fixed_point(&full, 1e-12, 1_000_000).unwrap();
            let z_star = solved.z_star.expect("supercritical draw");

            let traj = simulate_multi(&scenario, None, 2_000_000, 1e-12, 0).unwrap();
            assert!(traj.converged, "seed {}: no convergence", seed);
            let gap = traj.limit[0].max_abs_diff(&z_star);
            assert!(gap < 1e-6, "seed {}: limit off by {}", seed, gap);
        }
    });
}

#[test]
fn acceptance_03_homogeneous_closed_form() {
    report(3, "homogeneous closed-form equilibrium", || {
        let shapes = [
            (3usize, 1usize),
            (3, 2),
            (5, 1),
            (5, 2),
            (8, 1),
            (8, 2),
            (10, 1),
            (10, 2),
            (12, 1),
            (15, 2),
        ];
        let mut idx = 0usize;
        for &(n, m) in &shapes {
            for &factor in &[1.6f64, 2.5] {
                let delta = 0.4 + 0.02 * idx as f64;
                let c = 0.25 + 0.01 * idx as f64;
                let decay = 0.7;
                let c_hat = c / decay;
                let beta = factor * delta / (n as f64 * (1.0 + m as f64 * c_hat));
                idx += 1;

                let x_expected = 1.0 - 1.0 / factor;
                let w_expected = n as f64 * c_hat * x_expected;
                let (x_form, w_form) = homogeneous_equilibrium(n, m, beta, delta, c_hat).unwrap();
                assert!((x_form - x_expected).abs() < 1e-12);
                assert!((w_form - w_expected).abs() < 1e-12);

                let params = SpreadingParams::new(
                    DMatrix::from_element(n, n, beta),
                    DMatrix::from_element(n, m, beta),
                    DMatrix::from_element(m, n, c),
                    DVector::from_element(n, delta),
                    DVector::from_element(m, decay),
                )
                .unwrap();
                let initial = State::new(DVector::from_element(n, 0.3), DVector::zeros(m));
                let scenario =
                    MultiVirusScenario::single(params, initial, 0.01).unwrap();
                assert!(validate(&scenario).passed, "set {}", idx);

                let traj = simulate_multi(&scenario, None, 2_000_000, 1e-12, 0).unwrap();
                assert!(traj.converged, "set {}", idx);
                let limit = &traj.limit[0];
                for &x in limit.x.iter() {
                    assert!((x - x_expected).abs() < 1e-6, "set {}: x {}", idx, x);
                }
                for &w in limit.w.iter() {
                    assert!((w - w_expected).abs() < 1e-6, "set {}: w {}", idx, w);
                }
            }
        }
        assert_eq!(idx, 20);
    });
}

#[test]
fn acceptance_04_local_contraction_rate() {
    report(4, "local contraction rate near extinction", || {
        for seed in 0..20u64 {
            let mut file =
                random_scenario(15, 2, 1, 0.01, 4_000 + seed, RegimeTarget::Subcritical).unwrap();
            file.initial = vec![StateBlock {
                x: vec![1e-6; 15],
                w: vec![1e-6; 2],
            }];
            let scenario = file.to_scenario().unwrap();
            let full = assemble_full(&scenario.viruses()[0], scenario.h).unwrap();
            let s1 = step_radius(&full).unwrap();
            assert!(s1 < 1.0);

            // Window scaled to the spectral margin so the transient of the
            // subdominant modes has died down before measuring.
            let window = ((3.0 / (1.0 - s1)).ceil() as u64).clamp(10_000, 300_000);
            let traj =
                simulate_multi(&scenario, None, 2 * window, 1e-300, window).unwrap();
            let norm_at = |step: u64| -> f64 {
                traj.samples
                    .iter()
                    .find(|(s, _)| *s == step)
                    .map(|(_, states)| states[0].max_norm())
                    .expect("sample missing")
            };
            let ratio = (norm_at(2 * window) / norm_at(window)).powf(1.0 / window as f64);
            assert!(ratio < 1.0, "seed {}: ratio {}", seed, ratio);
            assert!(
                (ratio - s1).abs() <= 0.05 * s1,
                "seed {}: ratio {} vs s1 {}",
                seed,
                ratio,
                s1
            );
            // Tighter guard on the decay margin itself.
            assert!(
                (ratio - s1).abs() <= 0.5 * (1.0 - s1),
                "seed {}: ratio {} vs s1 {} margin {}",
                seed,
                ratio,
                s1,
                1.0 - s1
            );
        }
    });
}

#[test]
fn acceptance_05_threshold_sign_agreement() {
    report(5, "step-radius and reproduction-number thresholds agree", || {
        let mut disagreements = 0u32;
        for k in 0..10_000u64 {
            let n = 2 + (k % 11) as usize;
            let m = 1 + (k % 3) as usize;
            let target = if k % 2 == 0 {
                RegimeTarget::Subcritical
            } else {
                RegimeTarget::Supercritical
            };
            let file = random_scenario(n, m, 1, 0.01, 50_000 + k, target).unwrap();
            let scenario = file.to_scenario().unwrap();
            let full = assemble_full(&scenario.viruses()[0], scenario.h).unwrap();
            let s1 = step_radius(&full).unwrap();
            let r0 = reproduction_number(&full).unwrap();
            if (s1 - 1.0).signum() != (r0 - 1.0).signum() {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    });
}

#[test]
fn acceptance_06_reproduction_number_dominates_sis() {
    report(6, "resource layer strictly raises the reproduction number", || {
        for k in 0..10_000u64 {
            let n = 2 + (k % 11) as usize;
            let m = 1 + (k % 3) as usize;
            let target = if k % 2 == 0 {
                RegimeTarget::Subcritical
            } else {
                RegimeTarget::Supercritical
            };
            let file = random_scenario(n, m, 1, 0.01, 60_000 + k, target).unwrap();
            let scenario = file.to_scenario().unwrap();
            let params = &scenario.viruses()[0];
            let full = assemble_full(params, scenario.h).unwrap();
            let r0 = reproduction_number(&full).unwrap();

            // Person-only comparison system: drop the resource layer.
            let mut sis = params.infection.clone();
            for i in 0..params.n() {
                let inv = 1.0 / params.healing[i];
                for j in 0..params.n() {
                    sis[(i, j)] *= inv;
                }
            }
            let rho_sis = spectral_radius(&sis, EIGEN_TOL).unwrap().rho;
            assert!(
                r0 > rho_sis * (1.0 + 1e-12),
                "k {}: r0 {} vs person-only {}",
                k,
                r0,
                rho_sis
            );
        }
    });
}

fn positive_entries(m: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] > 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

#[test]
fn acceptance_07_sensitivity_matches_finite_differences() {
    report(7, "equilibrium sensitivity against finite differences", || {
        let eps = 1e-6;
        for s in 0..50u64 {
            let n = 4 + (s % 7) as usize;
            let m = 1 + (s % 2) as usize;
            let file =
                random_scenario(n, m, 1, 0.01, 70_000 + s, RegimeTarget::Supercritical).unwrap();
            let scenario = file.to_scenario().unwrap();
            let full = assemble_full(&scenario.viruses()[0], scenario.h).unwrap();
            let z_star = endemic_fixed_point(&full, 1e-13, 1_000_000)
                .unwrap()
                .z_star
                .expect("supercritical draw");
            let d = full.n + full.m;

            let entries = positive_entries(&full.coupling);
            assert!(entries.len() >= 3);
            let singles = [
                entries[0],
                entries[entries.len() / 2],
                entries[entries.len() - 1],
            ];

            // Directions: one person removal, one resource removal, three
            // single coupling entries, and a proportional scaling of the
            // whole coupling matrix.
            let mut directions: Vec<(DVector<f64>, DMatrix<f64>, bool)> = Vec::new();
            let mut d_person = DVector::zeros(d);
            d_person[(s % n as u64) as usize] = 1.0;
            directions.push((d_person, DMatrix::zeros(d, d), true));
            let mut d_resource = DVector::zeros(d);
            d_resource[n + (s % m as u64) as usize] = 1.0;
            directions.push((d_resource, DMatrix::zeros(d, d), true));
            for &(i, j) in &singles {
                let mut db = DMatrix::zeros(d, d);
                db[(i, j)] = 1.0;
                directions.push((DVector::zeros(d), db, false));
            }
            directions.push((DVector::zeros(d), full.coupling.clone(), false));

            for (pos, (dd, db, is_removal)) in directions.iter().enumerate() {
                let analytic = sensitivity(&full, &z_star, dd, db).unwrap();

                let solve = |sign: f64| -> DVector<f64> {
                    let mut pert = full.clone();
                    pert.coupling += db * (sign * eps);
                    pert.removal += dd * (sign * eps);
                    endemic_fixed_point(&pert, 1e-13, 1_000_000)
                        .unwrap()
                        .z_star
                        .expect("perturbed system stays supercritical")
                        .stacked()
                };
                let fd = (solve(1.0) - solve(-1.0)) / (2.0 * eps);

                let scale = fd.amax();
                let err = (&analytic - &fd).amax();
                assert!(
                    err <= 1e-3 * scale,
                    "seed {} direction {}: error {} vs scale {}",
                    s,
                    pos,
                    err,
                    scale
                );
                // Removal pushes every component down, coupling pushes every
                // component up; check strictly above the numerical floor.
                for i in 0..d {
                    if analytic[i].abs() > 1e-9 * scale {
                        if *is_removal {
                            assert!(analytic[i] < 0.0, "seed {} dir {} comp {}", s, pos, i);
                        } else {
                            assert!(analytic[i] > 0.0, "seed {} dir {} comp {}", s, pos, i);
                        }
                    }
                    if fd[i].abs() > 1e-6 * scale {
                        assert_eq!(fd[i] < 0.0, *is_removal, "seed {} dir {} comp {}", s, pos, i);
                    }
                }
            }
        }
    });
}

#[test]
fn acceptance_08_winner_takes_all() {
    report(8, "two-virus winner takes all with single-virus bound", || {
        for s in 0..5u64 {
            let file = random_scenario(15, 2, 2, 0.01, 80_000 + s, RegimeTarget::Mixed).unwrap();
            let scenario = file.to_scenario().unwrap();
            assert!(validate(&scenario).passed, "seed {}", s);
            let fulls: Vec<FullSystem> = scenario
                .viruses()
                .iter()
                .map(|p| assemble_full(p, scenario.h).unwrap())
                .collect();
            let r01 = reproduction_number(&fulls[0]).unwrap();
            let r02 = reproduction_number(&fulls[1]).unwrap();
            assert!(r01 > 1.0 && r02 <= 1.0, "seed {}: {} {}", s, r01, r02);

            let stride = 1_000u64;
            let multi = simulate_multi(&scenario, None, 2_000_000, 1e-12, stride).unwrap();
            assert!(multi.converged, "seed {}", s);

            // Limit: winner at its exclusive equilibrium, loser extinct.
            let z1 = endemic_fixed_point(&fulls[0], 1e-12, 1_000_000)
                .unwrap()
                .z_star
                .unwrap();
            let winner_gap = multi.limit[0].max_abs_diff(&z1);
            assert!(winner_gap < 1e-6, "seed {}: winner off by {}", s, winner_gap);
            let loser = multi.limit[1].max_norm();
            assert!(loser < 1e-6, "seed {}: loser at {}", s, loser);

            // Single-virus comparison runs on the same sampling grid.
            let singles: Vec<_> = (0..2)
                .map(|k| {
                    simulate(
                        &scenario.initial()[k],
                        &ParameterSchedule::Constant(scenario.viruses()[k].clone()),
                        scenario.h,
                        multi.steps,
                        1e-18,
                        stride,
                    )
                    .unwrap()
                })
                .collect();
            let maps: Vec<HashMap<u64, State>> = singles
                .iter()
                .map(|t| {
                    t.samples
                        .iter()
                        .map(|(step, states)| (*step, states[0].clone()))
                        .collect()
                })
                .collect();

            for (step, states) in &multi.samples {
                for k in 0..2 {
                    let fallback = &singles[k].limit[0];
                    let reference = maps[k].get(step).unwrap_or_else(|| {
                        assert!(singles[k].converged && *step > singles[k].steps);
                        fallback
                    });
                    for i in 0..states[k].n() {
                        assert!(
                            states[k].x[i] <= reference.x[i] + 1e-12,
                            "seed {} virus {} step {} node {}",
                            s,
                            k + 1,
                            step,
                            i
                        );
                    }
                    for j in 0..states[k].m() {
                        assert!(
                            states[k].w[j] <= reference.w[j] + 1e-12,
                            "seed {} virus {} step {} resource {}",
                            s,
                            k + 1,
                            step,
                            j
                        );
                    }
                }
            }
        }
    });
}

#[test]
fn acceptance_09_symmetric_coexistence() {
    report(9, "symmetric two-virus coexistence", || {
        let file = random_scenario(6, 1, 1, 0.01, 90_000, RegimeTarget::Supercritical).unwrap();
        let scenario = file.to_scenario().unwrap();
        let mut params = scenario.viruses()[0].clone();
        let r0 = reproduction_number(&assemble_full(&params, scenario.h).unwrap()).unwrap();
        // Rescale the coupling onto a fixed reproduction number so the
        // endemic level is comfortably interior.
        let gain = 1.3 / r0;
        params.infection *= gain;
        params.resource_infection *= gain;
        params.contamination *= gain;

        let mut x1 = DVector::zeros(6);
        let mut x2 = DVector::zeros(6);
        for i in 0..3 {
            x1[i] = 0.3;
            x2[i + 3] = 0.3;
        }
        let pair = MultiVirusScenario::new(
            vec![params.clone(), params],
            vec![
                State::new(x1, DVector::zeros(1)),
                State::new(x2, DVector::zeros(1)),
            ],
            0.01,
        )
        .unwrap();
        assert!(validate(&pair).passed);

        let traj = simulate_multi(&pair, None, 4_000_000, 1e-11, 0).unwrap();
        assert!(traj.converged);
        for k in 0..2 {
            let mean = traj.limit[k].x.mean();
            assert!(mean > 0.01, "virus {} mean {}", k + 1, mean);
        }
    });
}

fn envelope(pieces: &[&SpreadingParams], h: f64) -> FullSystem {
    let first = assemble_full(pieces[0], h).unwrap();
    let (n, m) = (first.n, first.m);
    let mut coupling = first.coupling;
    let mut removal = first.removal;
    for p in &pieces[1..] {
        let full = assemble_full(p, h).unwrap();
        coupling.zip_apply(&full.coupling, |a, b| *a = a.max(b));
        removal.zip_apply(&full.removal, |a, b| *a = a.min(b));
    }
    FullSystem::from_raw(coupling, removal, h, n, m).unwrap()
}

#[test]
fn acceptance_10_switched_healthy_state_and_counterexample() {
    report(10, "switched extinction plus divergent counterexample", || {
        // Random switching below a subcritical envelope dies out.
        for s in 0..3u64 {
            let file =
                random_scenario(8, 2, 1, 0.01, 10_000 + s, RegimeTarget::Subcritical).unwrap();
            let scenario = file.to_scenario().unwrap();
            let schedule = random_switching_schedule(
                &scenario.viruses()[0],
                10_100 + s,
                6,
                Some((200, 500)),
            )
            .unwrap();
            let env = envelope(&schedule.pieces(), scenario.h);
            let classification =
                classify_time_varying(&schedule, scenario.h, &env.coupling, &env.removal).unwrap();
            assert_eq!(classification.regime, Regime::HealthyGas, "seed {}", s);

            let traj = simulate(
                &scenario.initial()[0],
                &schedule,
                scenario.h,
                2_000_000,
                1e-13,
                0,
            )
            .unwrap();
            let norm = traj.limit_single().max_norm();
            assert!(norm < 1e-8, "seed {}: final {}", s, norm);
        }

        // Regression fixture: every piece subcritical on its own, envelope
        // supercritical, fast alternation keeps the infection alive.
        let path = format!(
            "{}/tests/fixtures/counterexample.json",
            env!("CARGO_MANIFEST_DIR")
        );
        let file = load_scenario(path).unwrap();
        let scenario = file.to_scenario().unwrap();
        let schedules = file.schedules().unwrap().unwrap();
        let pieces = schedules[0].pieces();
        assert_eq!(pieces.len(), 2);
        for p in &pieces {
            let s1 = step_radius(&assemble_full(p, scenario.h).unwrap()).unwrap();
            assert!(s1 < 1.0, "piece radius {}", s1);
        }
        let env_s1 = step_radius(&envelope(&pieces, scenario.h)).unwrap();
        assert!(env_s1 > 1.0, "envelope radius {}", env_s1);

        let initial = &scenario.initial()[0];
        let start_norm = initial.max_norm();
        let traj = simulate(initial, &schedules[0], scenario.h, 100_000, 1e-13, 0).unwrap();
        assert!(matches!(traj.stop, StopReason::MaxSteps));
        assert!(!traj.converged);
        let final_norm = traj.limit_single().max_norm();
        assert!(final_norm > 1e-3, "died to {}", final_norm);
        assert!(final_norm > start_norm, "shrank from {}", start_norm);
    });
}

#[test]
fn acceptance_11_equilibrium_preserving_switching() {
    report(11, "equilibrium-preserving switching family", || {
        let base = HomogeneousBase {
            beta: 0.4,
            delta: 0.3,
            contamination: 0.2,
            decay: 0.8,
        };
        let (n, m) = (3usize, 1usize);
        let (x_star, w_star) = base.equilibrium(n, m).unwrap();
        let family = equilibrium_preserving_family(
            x_star,
            n,
            m,
            &base,
            &[1.0, 0.6, 1.7, 2.4],
            0.01,
            150,
        )
        .unwrap();
        assert!(family.accepted.len() >= 3, "accepted {:?}", family.accepted);
        assert!((family.shared_x - x_star).abs() < 1e-12);
        assert!((family.shared_w - w_star).abs() < 1e-12);

        let start = State::new(DVector::from_element(n, 0.2), DVector::from_element(m, 0.1));
        let traj = simulate(&start, &family.schedule, 0.01, 4_000_000, 1e-12, 0).unwrap();
        assert!(traj.converged);
        let limit = traj.limit_single();
        for &x in limit.x.iter() {
            assert!((x - x_star).abs() < 1e-6, "x {} vs {}", x, x_star);
        }
        for &w in limit.w.iter() {
            assert!((w - w_star).abs() < 1e-6, "w {} vs {}", w, w_star);
        }
    });
}

#[test]
fn acceptance_12_error_dynamics_consistency() {
    report(12, "error dynamics reproduce the primal recursion", || {
        for s in 0..5u64 {
            let n = 5 + s as usize;
            let m = 1 + (s % 2) as usize;
            let file =
                random_scenario(n, m, 1, 0.01, 120_000 + s, RegimeTarget::Supercritical).unwrap();
            let scenario = file.to_scenario().unwrap();
            let params = scenario.viruses()[0].clone();
            let full = assemble_full(&params, scenario.h).unwrap();
            let z_star = endemic_fixed_point(&full, 1e-13, 1_000_000)
                .unwrap()
                .z_star
                .unwrap();

            let ed = error_matrices(&full, &z_star).unwrap();
            let fixed_residual = (&ed.f_matrix * &ed.mu - &ed.mu).amax();
            assert!(fixed_residual <= 1e-9, "seed {}: residual {}", s, fixed_residual);

            let mut current = State::new(&z_star.x * 0.6, &z_star.w * 0.6);
            let bound = resource_bound([&params], &current.w).unwrap();
            let target = z_star.stacked();
            for step in 0..25 {
                let err = current.stacked() - &target;
                let predicted = ed.step(&current.x, &err).unwrap();
                let next = step_single(&current, &params, scenario.h, bound).unwrap();
                let gap = (next.stacked() - &target - predicted).amax();
                assert!(gap <= 1e-12, "seed {} step {}: gap {}", s, step, gap);
                current = next;
            }
        }
    });
}

#[test]
fn acceptance_13_continuous_reference_agreement() {
    report(13, "discrete and continuous limits agree", || {
        // Subcritical survey scenarios: both routes reach extinction.
        for s in 0..3u64 {
            let scenario = firm_subcritical(130_000 + s);
            let discrete = simulate_multi(&scenario, None, 1_000_000, 1e-13, 0).unwrap();
            let continuous = reference_continuous(
                &scenario.initial()[0],
                &scenario.viruses()[0],
                scenario.h,
                1_000_000,
                1e-13,
                0,
                2,
            )
            .unwrap();
            let gap = discrete.limit[0].max_abs_diff(continuous.limit_single());
            assert!(gap < 1e-5, "seed {}: gap {}", s, gap);
        }

        // Supercritical winners: both routes reach the same endemic state.
        for s in 0..2u64 {
            let file =
                random_scenario(15, 2, 2, 0.01, 131_000 + s, RegimeTarget::Mixed).unwrap();
            let scenario = file.to_scenario().unwrap();
            let params = scenario.viruses()[0].clone();
            let initial = scenario.initial()[0].clone();
            let full = assemble_full(&params, scenario.h).unwrap();
            let z_star = endemic_fixed_point(&full, 1e-12, 1_000_000)
                .unwrap()
                .z_star
                .unwrap();

            let discrete = simulate(
                &initial,
                &ParameterSchedule::Constant(params.clone()),
                scenario.h,
                2_000_000,
                1e-12,
                0,
            )
            .unwrap();
            assert!(discrete.converged);
            let continuous = reference_continuous(
                &initial,
                &params,
                scenario.h,
                2_000_000,
                1e-12,
                0,
                2,
            )
            .unwrap();
            let solver_gap = discrete.limit_single().max_abs_diff(&z_star);
            assert!(solver_gap < 1e-6, "seed {}: {}", s, solver_gap);
            let route_gap = discrete
                .limit_single()
                .max_abs_diff(continuous.limit_single());
            assert!(route_gap < 1e-5, "seed {}: {}", s, route_gap);
        }
    });
}

//! Cross-module pipeline checks: the data-driven test and the model-based
//! oracle looking at the same system must tell the same story.

use dissipativity::excitation::{min_t_for_nullspace, min_t_for_pe};
use dissipativity::lti::{mass_spring_damper, random_normal_input, StateSpaceModel};
use dissipativity::oracle::oracle_dissipative;
use dissipativity::supply::{mass_spring_damper_shifted_supply, QsrBlock, SupplyRate};
use dissipativity::trajectory::Trajectory;
use dissipativity::verifier::{verify, VerificationProblem};
use dissipativity::DEFAULT_EIG_TOL;
use nalgebra::DMatrix;

fn record_of(model: &StateSpaceModel, len: usize, seed: u64) -> Trajectory {
    let u = random_normal_input(len, model.num_inputs(), 10.0, seed);
    let y = model.simulate_zero_state(&u).unwrap();
    Trajectory::from_io(u, y).unwrap()
}

#[test]
fn oscillator_verdicts_confirmed_by_the_oracle() {
    let model = mass_spring_damper().to_state_space().unwrap();
    let supply = mass_spring_damper_shifted_supply();
    let negated = supply.scale(-1.0);
    let (horizon, nu, order) = (10usize, 2usize, 2usize);
    let t_used = min_t_for_pe(horizon, order, 1, 1);
    let traj = record_of(&model, t_used + 1, 11);

    for (label, candidate, expected) in
        [("supply", &supply, true), ("negated supply", &negated, false)]
    {
        let problem = VerificationProblem::with_t(&traj, candidate, horizon, nu, t_used)
            .unwrap()
            .with_known_order(order);
        let data_verdict = verify(&problem).unwrap();
        let oracle_verdict =
            oracle_dissipative(&model, candidate, horizon, nu, DEFAULT_EIG_TOL).unwrap();
        assert_eq!(data_verdict.dissipative, expected, "{label}: data side");
        assert_eq!(oracle_verdict.dissipative, expected, "{label}: oracle side");
    }
}

#[test]
fn depth_zero_verdicts_match_the_oracle_on_small_systems() {
    // Classical QSR supplies on first-order systems, both branches.
    for (seed, gamma) in [(1u64, 0.05), (2, 50.0), (3, 0.2), (4, 20.0)] {
        let model = StateSpaceModel::random_stable(1, 1, 1, seed, (0.4, 0.8)).unwrap();
        let supply = SupplyRate::l2_gain(gamma, 1, 1);
        let (horizon, nu) = (6usize, 1usize);
        let t_used = min_t_for_pe(horizon, 1, 1, 0).max(min_t_for_nullspace(horizon, 1, 1));
        let traj = record_of(&model, t_used, 40 + seed);

        let problem = VerificationProblem::with_t(&traj, &supply, horizon, nu, t_used)
            .unwrap()
            .with_known_order(1);
        let data_verdict = verify(&problem).unwrap();
        assert!(data_verdict.pe_passed);
        let oracle_verdict =
            oracle_dissipative(&model, &supply, horizon, nu, DEFAULT_EIG_TOL).unwrap();
        assert_eq!(
            data_verdict.dissipative, oracle_verdict.dissipative,
            "seed {seed} gamma {gamma}: data {} vs oracle {}",
            data_verdict.min_eigenvalue, oracle_verdict.min_eigenvalue
        );
    }
}

#[test]
fn passivity_style_qsr_block_round_trips_through_the_test() {
    // Supply 2 y u (Q = 0, S = 1, R = 0) on a positive-gain first-order lag:
    // not dissipative in general for a sign-indefinite response.
    let q = DMatrix::zeros(1, 1);
    let s = DMatrix::from_element(1, 1, 1.0);
    let r = DMatrix::zeros(1, 1);
    let supply = SupplyRate::from_qsr(QsrBlock::new(q, s, r).unwrap()).unwrap();
    assert_eq!(supply.shift_depth(), 0);

    let model = StateSpaceModel::new(
        DMatrix::from_element(1, 1, 0.5),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, -1.0),
        DMatrix::from_element(1, 1, 0.0),
    )
    .unwrap();
    let (horizon, nu) = (8usize, 1usize);
    let t_used = min_t_for_nullspace(horizon, 1, 1);
    let traj = record_of(&model, t_used, 5);
    let problem = VerificationProblem::with_t(&traj, &supply, horizon, nu, t_used).unwrap();
    let data_verdict = verify(&problem).unwrap();
    let oracle_verdict = oracle_dissipative(&model, &supply, horizon, nu, DEFAULT_EIG_TOL).unwrap();
    assert!(!oracle_verdict.dissipative);
    assert_eq!(data_verdict.dissipative, oracle_verdict.dissipative);
}

mod common;

use common::*;
use proptest::prelude::*;
use vwe_core::incentives::*;
use vwe_core::model::{DiscreteGrid, SignRule};
use vwe_core::vwe::{decide, VweParams};
use vwe_core::{DecisionTensor, Error};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn assert_profile(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!(close(*g, *w, tol), "{got:?} vs {want:?}");
    }
}

#[test]
fn two_voter_interim_decisions() {
    let mech = Mechanism::decision_only(two_voter_grid(), two_voter_decisions()).unwrap();
    assert_profile(&interim(&mech, 1).decision, &[0.8, 0.2, 0.4], 1e-12);
    assert_profile(&interim(&mech, 0).decision, &[0.2, 0.7, 0.5], 1e-12);
}

#[test]
fn constant_rule_interim() {
    let grid = two_voter_grid();
    let n = grid.len();
    let mech = Mechanism::decision_only(grid, vec![1.0; n]).unwrap();
    for i in 0..2 {
        let prof = interim(&mech, i);
        assert!(prof.decision.iter().all(|&d| d == 1.0));
        assert!(prof.verification.iter().all(|&a| a == 0.0));
    }
}

#[test]
fn two_voter_worst_off() {
    let mech = Mechanism::decision_only(two_voter_grid(), two_voter_decisions()).unwrap();
    let w = worst_off(&mech, 1);
    assert!(close(w.inf_plus, 0.2, 1e-12));
    assert_eq!(w.argmin_plus, vec![1]);
    assert_eq!(w.sup_minus, f64::NEG_INFINITY);
    assert!(w.argmax_minus.is_empty());

    let grid = two_voter_grid();
    let n = grid.len();
    let half = Mechanism::decision_only(grid, vec![0.5; n]).unwrap();
    let w = worst_off(&half, 0);
    assert_eq!((w.inf_plus, w.sup_minus), (0.5, 0.5));
}

#[test]
fn two_voter_binding_verification() {
    let mech = two_voter_bic_mechanism();
    assert_profile(&interim(&mech, 1).verification, &[0.6, 0.0, 0.2], 1e-12);
    let report = check_bic(&mech, 1.0);
    assert!(report.satisfied());
    assert!(close(report.min_slack, 0.0, 1e-9), "{}", report.min_slack);
    for k in 0..3 {
        assert!(close(report.slack(1, k, Side::Plus).unwrap(), 0.0, 1e-9));
    }
    assert!(report.slack(1, 0, Side::Minus).is_none());
}

#[test]
fn two_voter_without_verification_fails() {
    let mech = Mechanism::decision_only(two_voter_grid(), two_voter_decisions()).unwrap();
    let report = check_bic(&mech, 1.0);
    assert_eq!(report.status, IcStatus::Violated);
    assert!(close(report.slack(1, 2, Side::Plus).unwrap(), -0.2, 1e-12));
    assert!(report.witnesses.iter().any(|w| w.agent == 1 && w.report == 2 && w.true_type == 1 && w.side == Side::Plus));
}

#[test]
fn type_independent_rules_are_compatible() {
    let grid = two_voter_grid();
    let n = grid.len();
    let mech = Mechanism::decision_only(grid, vec![0.3; n]).unwrap();
    assert!(check_bic(&mech, 1.0).satisfied());
    assert!(check_bic(&mech, 0.4).satisfied());
    assert!(check_epic(&mech).satisfied());
}

/// Minimal pointwise verification of the vertical agent on the original
/// example table, worked out by hand: in each row, every policy cell above
/// the row minimum is checked with the excess share.
const FIGURE_VERIFICATION: [[f64; 3]; 3] = [[0.4, 0.0, 0.2], [0.9, 0.0, 0.9], [1.0, 0.5, 0.0]];

#[test]
fn two_voter_pointwise_verification() {
    let grid = two_voter_grid();
    let tensor = DecisionTensor::new(grid.clone(), two_voter_decisions()).unwrap();
    let ver = vwe_core::epic_verification(&tensor).unwrap();
    let mech = Mechanism::new(grid, two_voter_decisions(), ver.a1, ver.a0).unwrap();
    for h in 0..3 {
        for v in 0..3 {
            assert!(close(mech.verification(1, cell(h, v)), FIGURE_VERIFICATION[h][v], 1e-12));
        }
    }
    assert_profile(&interim(&mech, 1).verification, &[2.3 / 3.0, 0.5 / 3.0, 1.1 / 3.0], 1e-9);
    let report = check_epic(&mech);
    assert!(report.satisfied(), "{:?}", report.witnesses);
}

#[test]
fn bayesian_verification_is_not_ex_post() {
    let report = check_epic(&two_voter_bic_mechanism());
    assert_eq!(report.status, IcStatus::Violated);
    // the vertical agent's failures happen when the horizontal type is high
    assert!(report.witnesses.iter().any(|w| w.agent == 1 && w.others == Some(2)));
}

#[test]
fn caught_liar_gets_the_status_quo() {
    let specs = three_voter_specs();
    let params = VweParams::perfect(&[(1.0, -1.0); 3]).unwrap();
    let truth = [-5.0, 2.0, 2.0];
    let r = replay_deviation(&params, &specs, &truth, 1, 6.0).unwrap();
    assert!(r.decision_at_reports);
    assert_eq!(r.verified, vec![1]);
    assert_eq!(r.caught, vec![1]);
    assert!(r.penalty);
    assert!(!r.outcome);
}

#[test]
fn second_liar_hides_the_first() {
    let specs = three_voter_specs();
    let params = VweParams::perfect(&[(1.0, -1.0); 3]).unwrap();
    let truth = [-5.0, 2.0, 2.0];
    let alone = replay_reports(&params, &specs, &truth, &[-5.0, 6.0, 2.0]).unwrap();
    let both = replay_reports(&params, &specs, &truth, &[-5.0, 6.0, 6.0]).unwrap();
    assert!(!alone.outcome);
    assert!(both.verified.is_empty() && !both.penalty);
    assert!(both.outcome);
    // agent 2 favors the policy, so lying strictly pays given agent 1's lie
    assert!(specs[2].in_favor(truth[2]) && both.outcome && !alone.outcome);
}

#[test]
fn truthful_replay_is_the_rule_itself() {
    let specs = three_voter_specs();
    let params = VweParams::perfect(&[(1.0, -1.0); 3]).unwrap();
    for truth in [[-5.0, 2.0, 2.0], [-5.0, 6.0, 2.0], [3.0, -1.0, 0.0]] {
        for i in 0..3 {
            let r = replay_deviation(&params, &specs, &truth, i, truth[i]).unwrap();
            assert!(!r.penalty);
            assert_eq!(r.outcome, decide(&params, &specs, &truth).unwrap());
        }
    }
}

#[test]
fn replay_rejects_bad_input() {
    let specs = three_voter_specs();
    let params = VweParams::perfect(&[(1.0, -1.0); 3]).unwrap();
    assert!(matches!(replay_deviation(&params, &specs, &[-5.0, 2.0, 2.5], 0, 1.0), Err(Error::OutOfSupport { .. })));
    assert!(replay_deviation(&params, &specs, &[-5.0, 2.0, 2.0], 3, 1.0).is_err());
    // two caught liars
    let specs2 = vec![
        uniform_agent(&[-1.0, 1.0], SignRule::Threshold(0.0), 0.0),
        uniform_agent(&[-1.0, 1.0], SignRule::Threshold(0.0), 0.0),
    ];
    // negative plateaus make each of two supporters decisive on its own
    let lone = VweParams::perfect(&[(-1.0, -1.0); 2]).unwrap();
    let r = replay_reports(&lone, &specs2, &[-1.0, -1.0], &[1.0, 1.0]);
    assert!(matches!(r, Err(Error::MultipleLiarsCaught)));
}

fn slack_map(report: &IcReport, agent: usize, side: Side) -> Vec<(usize, f64)> {
    report.rows.iter().filter(|r| r.agent == agent && r.side == side).map(|r| (r.type_index, r.slack)).collect()
}

proptest! {
    #[test]
    fn ex_post_implies_bayesian(seed in 0u64..2000) {
        let mut r = rng(seed);
        let grid = random_grid(&mut r, 3, 3, 0.5);
        let d = random_decisions(&mut r, &grid);
        let tensor = vwe_core::monotone_rearrange(&DecisionTensor::new(grid.clone(), d).unwrap()).unwrap();
        let ver = vwe_core::epic_verification(&tensor).unwrap();
        let mech = Mechanism::new(grid.clone(), tensor.values.clone(), ver.a1, ver.a0).unwrap();
        prop_assert!(check_epic(&mech).satisfied());
        prop_assert!(check_bic(&mech, 1.0).satisfied());
        let raw = random_mechanism(&mut r, &grid);
        if check_epic(&raw).satisfied() {
            prop_assert!(check_bic(&raw, 1.0).satisfied());
        }
    }

    #[test]
    fn more_verification_never_hurts_plus_constraints(seed in 0u64..2000, bump in 0.0f64..1.0) {
        let mut r = rng(seed);
        let grid = random_grid(&mut r, 3, 3, 0.5);
        let mech = random_mechanism(&mut r, &grid);
        let i = seed as usize % grid.n_agents();
        let t = (seed as usize / 7) % grid.len();
        let mut a1: Vec<Vec<f64>> = (0..grid.n_agents()).map(|j| mech.a1(j).to_vec()).collect();
        let a0: Vec<Vec<f64>> = (0..grid.n_agents()).map(|j| mech.a0(j).to_vec()).collect();
        a1[i][t] += (1.0 - a1[i][t]) * bump;
        let more = mech.with_verification(a1, a0).unwrap();
        for p in [1.0, 0.6] {
            let before = slack_map(&check_bic(&mech, p), i, Side::Plus);
            let after = slack_map(&check_bic(&more, p), i, Side::Plus);
            for ((k, s0), (_, s1)) in before.iter().zip(&after) {
                prop_assert!(*s1 >= *s0 - 1e-15, "type {}: {} -> {}", k, s0, s1);
            }
        }
    }

    #[test]
    fn interim_verification_is_the_weighted_average(seed in 0u64..2000) {
        let mut r = rng(seed);
        let grid = random_grid(&mut r, 3, 4, 0.5);
        let mech = random_mechanism(&mut r, &grid);
        for i in 0..grid.n_agents() {
            let prof = interim(&mech, i);
            for k in 0..grid.n_types(i) {
                let (mut a, mut d) = (0.0, 0.0);
                for t in 0..grid.len() {
                    if grid.type_index(t, i) == k {
                        let f = grid.prob(t) / grid.type_prob(i, k);
                        let dt = mech.decision(t);
                        a += f * (dt * mech.a1(i)[t] + (1.0 - dt) * mech.a0(i)[t]);
                        d += f * dt;
                    }
                }
                prop_assert!(close(prof.verification[k], a, 1e-12));
                prop_assert!(close(prof.decision[k], d, 1e-12));
            }
        }
    }

    #[test]
    fn status_matches_min_slack(seed in 0u64..2000) {
        let mut r = rng(seed);
        let grid = random_grid(&mut r, 3, 3, 0.5);
        let mech = random_mechanism(&mut r, &grid);
        for report in [check_bic(&mech, 1.0), check_bic(&mech, 0.5), check_epic(&mech)] {
            prop_assert_eq!(report.satisfied(), report.min_slack >= -1e-9);
            prop_assert_eq!(report.witnesses.is_empty(), report.satisfied());
        }
    }
}

#[test]
fn single_agent_grid_has_no_opponents() {
    let grid = DiscreteGrid::new(vec![uniform_agent(&[-1.0, 1.0], SignRule::Threshold(0.0), 0.2)]).unwrap();
    // the rule favors the wrong side, so only certain detection deters lies
    let mech = Mechanism::new(grid, vec![1.0, 0.0], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]).unwrap();
    assert!(check_bic(&mech, 1.0).satisfied());
    assert!(check_epic(&mech).satisfied());
    assert!(!check_bic(&mech, 0.5).satisfied());
}

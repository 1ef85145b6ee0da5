mod common;

use common::*;
use proptest::prelude::*;
use vwe_core::model::{DiscreteGrid, SignRule};
use vwe_core::vwe::*;
use vwe_core::{check_epic, interim};

fn cutoffs() -> VweParams {
    VweParams::perfect(&[(1.0, -1.0); 3]).unwrap()
}

#[test]
fn weight_cases() {
    let w = AgentWeights::new(0.3, -0.2);
    assert!((weight_value(&w, 1.0, true, 0.1, 0.5) - 0.4).abs() < 1e-12);
    assert_eq!(weight_value(&w, 1.0, true, 0.1, 0.2), 0.3);
    assert!((weight_value(&w, 1.0, false, 0.1, -0.5) + 0.4).abs() < 1e-12);
    assert_eq!(weight_value(&w, 1.0, false, 0.1, -0.25), -0.2);
    let capped = AgentWeights::new(0.3, -0.2).with_caps(0.8, -0.9);
    assert_eq!(weight_value(&capped, 0.5, true, 0.1, 1.2), 0.8);
    assert!((weight_value(&capped, 0.5, true, 0.1, 0.9) - 0.7).abs() < 1e-12);
}

#[test]
fn weight_rejects_types_off_the_grid() {
    let specs = three_voter_specs();
    assert!(weight(&cutoffs(), 0, &specs[0], &CostRule::Constant, 0.5).is_err());
}

#[test]
fn sign_of_the_sum_decides() {
    let specs = vec![
        uniform_agent(&[-0.3, 0.2], SignRule::Threshold(0.0), 0.0),
        uniform_agent(&[-0.3, 0.4], SignRule::Threshold(0.0), 0.0),
    ];
    let params = VweParams::perfect(&[(0.0, 0.0), (0.0, 0.0)]).unwrap();
    assert!(decide(&params, &specs, &[-0.3, 0.4]).unwrap());
    assert!(!decide(&params, &specs, &[0.2, -0.3]).unwrap());
}

#[test]
fn tie_keeps_status_quo() {
    let specs = vec![
        uniform_agent(&[-0.25, 0.5], SignRule::Threshold(0.0), 0.0),
        uniform_agent(&[-0.5, 0.25], SignRule::Threshold(0.0), 0.0),
    ];
    let params = VweParams::perfect(&[(0.0, 0.0), (0.0, 0.0)]).unwrap();
    assert!(!decide(&params, &specs, &[0.5, -0.5]).unwrap());
    assert!(decide(&params, &specs, &[0.5, 0.25]).unwrap());
}

#[test]
fn decisiveness_in_the_three_agent_example() {
    let specs = three_voter_specs();
    let params = cutoffs();
    // status quo at (-5, 2, 2); the against agent's vote is what blocks the
    // policy, so it is the decisive one
    assert!(!decide(&params, &specs, &[-5.0, 2.0, 2.0]).unwrap());
    assert!(is_decisive(&params, &specs, &[-5.0, 2.0, 2.0], 0).unwrap());
    assert!(!is_decisive(&params, &specs, &[-5.0, 2.0, 2.0], 1).unwrap());
    assert!(!is_decisive(&params, &specs, &[-5.0, 2.0, 2.0], 2).unwrap());

    assert!(decide(&params, &specs, &[-5.0, 6.0, 2.0]).unwrap());
    assert!(is_decisive(&params, &specs, &[-5.0, 6.0, 2.0], 1).unwrap());
    assert!(!is_decisive(&params, &specs, &[-5.0, 6.0, 2.0], 2).unwrap());

    assert!(decide(&params, &specs, &[-5.0, 6.0, 6.0]).unwrap());
    for i in 0..3 {
        assert!(!is_decisive(&params, &specs, &[-5.0, 6.0, 6.0], i).unwrap());
    }
}

#[test]
fn three_agent_mechanism_rows() {
    let specs = three_voter_specs();
    let grid = DiscreteGrid::new(specs).unwrap();
    let mech = vwe_mechanism(&cutoffs(), &grid).unwrap();
    let at = |v: [f64; 3]| grid.index_of_values(&v).unwrap();
    let t = at([-5.0, 6.0, 2.0]);
    assert_eq!(mech.decision(t), 1.0);
    assert_eq!(mech.a1(1)[t], 1.0);
    assert_eq!(mech.a1(2)[t], 0.0);
    let t = at([-5.0, 6.0, 6.0]);
    assert_eq!(mech.decision(t), 1.0);
    assert!((0..3).all(|i| mech.verification(i, t) == 0.0));
    let t = at([-5.0, 2.0, 2.0]);
    assert_eq!(mech.decision(t), 0.0);
    assert_eq!(mech.a0(0)[t], 1.0);
}

#[test]
fn lone_agent_on_a_positive_plateau_is_never_checked() {
    let grid = DiscreteGrid::new(vec![uniform_agent(&[-1.0, 0.0, 2.0], SignRule::AlwaysInFavor, 0.0)]).unwrap();
    let params = VweParams::perfect(&[(0.5, 0.0)]).unwrap();
    let mech = vwe_mechanism(&params, &grid).unwrap();
    assert!(mech.decisions().iter().all(|&d| d == 1.0));
    assert!((0..grid.len()).all(|t| mech.verification(0, t) == 0.0));
}

#[test]
fn symmetric_agents_mirror_under_sign_flip() {
    let values = [-2.0, -0.5, 0.5, 2.0];
    let grid = DiscreteGrid::new(vec![
        uniform_agent(&values, SignRule::Threshold(0.0), 0.3),
        uniform_agent(&values, SignRule::Threshold(0.0), 0.3),
    ])
    .unwrap();
    let params = VweParams::perfect(&[(0.4, -0.4), (0.4, -0.4)]).unwrap();
    let specs = grid.agents().to_vec();
    for a in values {
        for b in values {
            let sum: f64 = [a, b].iter().enumerate().map(|(i, &t)| weight(&params, i, &specs[i], &CostRule::Constant, t).unwrap()).sum();
            let flipped: f64 = [-a, -b].iter().enumerate().map(|(i, &t)| weight(&params, i, &specs[i], &CostRule::Constant, t).unwrap()).sum();
            assert!((sum + flipped).abs() < 1e-12);
            if sum.abs() > 1e-12 {
                assert_ne!(decide(&params, &specs, &[a, b]).unwrap(), decide(&params, &specs, &[-a, -b]).unwrap());
            }
        }
    }
}

#[test]
fn per_type_costs_must_keep_weights_monotone() {
    let agent = uniform_agent(&[-1.0, 0.5, 1.0], SignRule::Threshold(0.0), 0.1);
    assert!(CostRule::PerType(vec![0.1, 0.1, 0.2]).validate(&agent).is_ok());
    assert!(CostRule::PerType(vec![0.1, 0.1, 0.7]).validate(&agent).is_err());
    assert!(CostRule::PerType(vec![0.1, 0.1]).validate(&agent).is_err());
}

#[test]
fn params_validation() {
    assert!(VweParams::perfect(&[(-0.1, 0.1)]).is_err());
    assert!(VweParams::new(vec![AgentWeights::new(0.1, -0.1).with_caps(1.0, -1.0)], 1.0).is_err());
    assert!(VweParams::new(vec![AgentWeights::new(0.1, -0.1).with_caps(0.0, -1.0)], 0.5).is_err());
    assert!(VweParams::new(vec![AgentWeights::new(0.1, -0.1)], 0.0).is_err());
    let grid = two_voter_grid();
    let imperfect = VweParams::new(vec![AgentWeights::new(0.1, -0.1); 2], 0.5).unwrap();
    assert!(vwe_mechanism(&imperfect, &grid).is_err());
}

fn weights_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-2.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0)
        .prop_map(|(op, gap, up, down)| (op, op - gap, op + up, op - gap - down))
}

proptest! {
    #[test]
    fn weight_is_monotone_on_each_side(
        (op, om, np, nm) in weights_strategy(),
        p in 0.1f64..1.0,
        cost in 0.0f64..1.0,
        a in -4.0f64..4.0,
        b in -4.0f64..4.0,
    ) {
        let w = AgentWeights::new(op, om).with_caps(np, nm);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for side in [true, false] {
            prop_assert!(weight_value(&w, p, side, cost, lo) <= weight_value(&w, p, side, cost, hi));
        }
    }

    #[test]
    fn plateau_is_exactly_the_low_region(
        (op, om, _np, _nm) in weights_strategy(),
        cost in 0.0f64..1.0,
        t in -4.0f64..4.0,
    ) {
        let w = AgentWeights::new(op, om);
        let v = weight_value(&w, 1.0, true, cost, t);
        if t <= op + cost {
            prop_assert_eq!(v, op);
        } else {
            prop_assert!(v > op);
            prop_assert!((v - (t - cost)).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_verification_reduces_to_uncapped_weights(
        (op, om, _np, _nm) in weights_strategy(),
        cost in 0.0f64..1.0,
        t in -4.0f64..4.0,
    ) {
        let capped = AgentWeights::new(op, om).with_caps(f64::INFINITY, f64::NEG_INFINITY);
        let plus = if t <= op + cost { op } else { t - cost };
        let minus = if t >= om - cost { om } else { t + cost };
        prop_assert_eq!(weight_value(&capped, 1.0, true, cost, t), plus);
        prop_assert_eq!(weight_value(&capped, 1.0, false, cost, t), minus);
    }

    #[test]
    fn linear_segments_shift_by_the_type_gap(
        (op, om, np, nm) in weights_strategy(),
        p in 0.1f64..1.0,
        cost in 0.0f64..1.0,
        a in -4.0f64..4.0,
        b in -4.0f64..4.0,
    ) {
        let w = AgentWeights::new(op, om).with_caps(np, nm);
        for side in [true, false] {
            let diff = weight_value(&w, p, side, cost, a) - weight_value(&w, p, side, cost, b);
            let shift = cost / p;
            let interior = |t: f64| if side { t > op + shift && t < np + shift } else { t < om - shift && t > nm - shift };
            if interior(a) && interior(b) {
                prop_assert!((diff - (a - b)).abs() < 1e-9);
            }
            if !interior(a) && !interior(b) && (a <= op + shift) == (b <= op + shift) && side {
                prop_assert!(diff.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn verification_only_of_decisive_supporters(seed in 0u64..5000) {
        let mut r = rng(seed);
        let grid = random_grid(&mut r, 3, 3, 0.5);
        let pairs: Vec<(f64, f64)> = (0..grid.n_agents())
            .map(|i| {
                let hi = grid.type_value(i, (seed as usize + i) % grid.n_types(i));
                (hi, hi - 0.3)
            })
            .collect();
        let params = VweParams::perfect(&pairs).unwrap();
        let mech = vwe_mechanism(&params, &grid).unwrap();
        for i in 0..grid.n_agents() {
            for t in 0..grid.len() {
                let k = grid.type_index(t, i);
                if mech.a1(i)[t] > 0.0 {
                    prop_assert!(mech.decision(t) == 1.0 && grid.in_favor(i, k));
                }
                if mech.a0(i)[t] > 0.0 {
                    prop_assert!(mech.decision(t) == 0.0 && !grid.in_favor(i, k));
                }
            }
            let prof = interim(&mech, i);
            prop_assert!(prof.verification.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let report = check_epic(&mech);
        prop_assert!(report.satisfied() && report.min_slack >= -1e-12);
    }
}

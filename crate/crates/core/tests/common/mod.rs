//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vwe_core::model::{make_discrete_agent, AgentSpec, DiscreteGrid, SignRule};
use vwe_core::optimize::relaxed_value;
use vwe_core::Mechanism;

pub fn uniform_agent(values: &[f64], rule: SignRule, cost: f64) -> AgentSpec {
    let n = values.len();
    make_discrete_agent(values.to_vec(), vec![1.0 / n as f64; n], rule, cost).unwrap()
}

/// The two-agent example with a 3×3 uniform grid. Agent 0 (the horizontal
/// agent of the worked example) has types −1, 0, 1 split at 0; agent 1 has
/// types 1, 2, 3 and always favors the policy.
pub fn two_voter_grid() -> DiscreteGrid {
    DiscreteGrid::new(vec![
        uniform_agent(&[-1.0, 0.0, 1.0], SignRule::Threshold(0.0), 0.0),
        uniform_agent(&[1.0, 2.0, 3.0], SignRule::AlwaysInFavor, 0.0),
    ])
    .unwrap()
}

/// Decision table indexed `[horizontal type][vertical type]`, low to high.
pub const EXAMPLE2_D: [[f64; 3]; 3] = [[0.4, 0.0, 0.2], [1.0, 0.1, 1.0], [1.0, 0.5, 0.0]];

pub fn two_voter_decisions() -> Vec<f64> {
    EXAMPLE2_D.iter().flat_map(|row| row.iter().copied()).collect()
}

/// Profile index of (horizontal type, vertical type).
pub fn cell(h: usize, v: usize) -> usize {
    3 * h + v
}

/// Verification of the vertical agent that makes its constraints bind:
/// 0.9 on the two policy cells of its low type, 0.6 on the policy cell of
/// its high type.
pub fn two_voter_bic_a1_vertical() -> Vec<f64> {
    let mut a1 = vec![0.0; 9];
    a1[cell(1, 0)] = 0.9;
    a1[cell(2, 0)] = 0.9;
    a1[cell(1, 2)] = 0.6;
    a1
}

/// The example mechanism: the paper's vertical-agent verification plus a
/// binding verification rule for the horizontal agent.
pub fn two_voter_bic_mechanism() -> Mechanism {
    let grid = two_voter_grid();
    let d = two_voter_decisions();
    let base = vwe_core::build_verification(&d, &grid, 1.0).unwrap();
    let a1 = vec![base.a1(0).to_vec(), two_voter_bic_a1_vertical()];
    let a0 = vec![base.a0(0).to_vec(), vec![0.0; 9]];
    Mechanism::new(grid, d, a1, a0).unwrap()
}

pub fn three_voter_specs() -> Vec<AgentSpec> {
    let values: Vec<f64> = (-5..=6).map(f64::from).collect();
    (0..3).map(|_| uniform_agent(&values, SignRule::Threshold(0.0), 0.0)).collect()
}

/// Random discrete agent with `n` distinct types in [-1, 1], random
/// probabilities, a threshold at 0 or a constant sign, and a random cost.
pub fn random_agent(rng: &mut ChaCha8Rng, n: usize, max_cost: f64) -> AgentSpec {
    let mut values: Vec<f64> = Vec::with_capacity(n);
    while values.len() < n {
        let v = (rng.random::<f64>() * 2.0 - 1.0) * 1.0;
        let v = (v * 1e4).round() / 1e4;
        if values.iter().all(|w| (w - v).abs() > 1e-3) {
            values.push(v);
        }
    }
    values.sort_by(f64::total_cmp);
    let raw: Vec<f64> = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    let rule = match rng.random_range(0..6) {
        0 => SignRule::AlwaysInFavor,
        1 => SignRule::AlwaysAgainst,
        _ => SignRule::Threshold(0.0),
    };
    let cost = (rng.random::<f64>() * max_cost * 1e3).round() / 1e3;
    make_discrete_agent(values, probs, rule, cost).unwrap()
}

pub fn random_grid(rng: &mut ChaCha8Rng, max_agents: usize, max_types: usize, max_cost: f64) -> DiscreteGrid {
    let agents = rng.random_range(1..=max_agents);
    let specs = (0..agents)
        .map(|_| {
            let types = rng.random_range(1..=max_types);
            random_agent(rng, types, max_cost)
        })
        .collect();
    DiscreteGrid::new(specs).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Decision table of the voting rule with per-agent plateaus `(ω⁺, ω⁻)`
/// and perfect verification, written out without the library's weight code.
pub fn voting_table(grid: &DiscreteGrid, plateaus: &[(f64, f64)]) -> Vec<f64> {
    (0..grid.len())
        .map(|t| {
            let mut sum = 0.0;
            for (i, &(hi, lo)) in plateaus.iter().enumerate() {
                let k = grid.type_index(t, i);
                let v = grid.type_value(i, k);
                let c = grid.agent(i).cost();
                sum += if grid.in_favor(i, k) { (v - c).max(hi) } else { (v + c).min(lo) };
            }
            if sum > 0.0 { 1.0 } else { 0.0 }
        })
        .collect()
}

/// Best relaxed value over voting rules, found by exact coordinate-wise
/// line search over the plateau weights from many starting points. Along
/// one coordinate the decision table only changes where the plateau meets
/// a net type or the negated weight sum of some opponent profile, so
/// checking those breakpoints and their neighbours is an exact line search.
pub fn weight_search_oracle(grid: &DiscreteGrid) -> f64 {
    let n = grid.n_agents();
    let nets: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..grid.n_types(i))
                .map(|k| {
                    let c = grid.agent(i).cost();
                    let v = grid.type_value(i, k);
                    if grid.in_favor(i, k) { v - c } else { v + c }
                })
                .collect()
        })
        .collect();
    let span = 2.0 + nets.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs())) * n as f64;
    let value = |w: &[(f64, f64)]| relaxed_value(&voting_table(grid, w), grid, 1.0).unwrap();
    let weight_of = |w: &[(f64, f64)], i: usize, k: usize| {
        if grid.in_favor(i, k) { nets[i][k].max(w[i].0) } else { nets[i][k].min(w[i].1) }
    };
    let eps = 1e-7;
    let mut starts: Vec<Vec<(f64, f64)>> = Vec::new();
    let levels: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut l = vec![-span, span];
            l.extend(nets[i].iter().copied());
            l
        })
        .collect();
    // starting points: every agent's plateaus at one of a few levels
    let mut index = vec![0usize; 2 * n];
    loop {
        starts.push((0..n).map(|i| (levels[i][index[2 * i]], levels[i][index[2 * i + 1]])).collect());
        let mut pos = 0;
        loop {
            if pos == 2 * n {
                break;
            }
            index[pos] += 1;
            if index[pos] < levels[pos / 2].len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
        if pos == 2 * n || starts.len() > 4000 {
            break;
        }
    }
    let mut best = f64::NEG_INFINITY;
    for start in starts {
        let mut w = start;
        let mut current = value(&w);
        for _sweep in 0..20 {
            let mut improved = false;
            for coord in 0..2 * n {
                let i = coord / 2;
                let mut candidates: Vec<f64> = vec![-span, span];
                candidates.extend(nets[i].iter().copied());
                for t in 0..grid.len() {
                    let others: f64 =
                        (0..n).filter(|&j| j != i).map(|j| weight_of(&w, j, grid.type_index(t, j))).sum();
                    candidates.push(-others);
                }
                let mut trial = w.clone();
                for base in candidates {
                    for x in [base - eps, base, base + eps] {
                        if coord % 2 == 0 {
                            trial[i].0 = x;
                        } else {
                            trial[i].1 = x;
                        }
                        let v = value(&trial);
                        if v > current + 1e-12 {
                            current = v;
                            w = trial.clone();
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best = best.max(current);
    }
    best
}

/// Every subset of `0..n` (n is small in the tests).
pub fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n)).map(|mask| (0..n).filter(|k| mask & (1 << k) != 0).collect()).collect()
}

/// Random decision table; about a third of the entries are exactly 0 or 1.
pub fn random_decisions(rng: &mut ChaCha8Rng, grid: &DiscreteGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|_| match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        })
        .collect()
}

/// Random mechanism with independent verification tables.
pub fn random_mechanism(rng: &mut ChaCha8Rng, grid: &DiscreteGrid) -> Mechanism {
    let d = random_decisions(rng, grid);
    let table = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..grid.len()).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random::<f64>() }).collect()
    };
    let a1 = (0..grid.n_agents()).map(|_| table(rng)).collect();
    let a0 = (0..grid.n_agents()).map(|_| table(rng)).collect();
    Mechanism::new(grid.clone(), d, a1, a0).unwrap()
}

/// Random incentive compatible mechanism: binding verification for a random
/// decision table plus random extra checks, which only add slack. `None`
/// when the decision table admits no verification at this detection
/// probability.
pub fn random_bic_mechanism(rng: &mut ChaCha8Rng, grid: &DiscreteGrid, p: f64) -> Option<Mechanism> {
    let d = random_decisions(rng, grid);
    let base = vwe_core::build_verification(&d, grid, p).ok()?;
    let extra = |rng: &mut ChaCha8Rng, v: f64| -> f64 {
        if rng.random_bool(0.7) { v } else { v + (1.0 - v) * rng.random::<f64>() }
    };
    let a1 = (0..grid.n_agents()).map(|i| base.a1(i).iter().map(|&v| extra(rng, v)).collect()).collect();
    let a0 = (0..grid.n_agents()).map(|i| base.a0(i).iter().map(|&v| extra(rng, v)).collect()).collect();
    Some(Mechanism::new(grid.clone(), d, a1, a0).unwrap())
}

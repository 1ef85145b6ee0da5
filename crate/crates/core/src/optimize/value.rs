use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::incentives::Mechanism;
use crate::model::DiscreteGrid;
use crate::numeric::Accumulator;

/// Expected total type of the implemented decision minus expected
/// verification costs.
pub fn principal_value(mech: &Mechanism) -> f64 {
    let grid = mech.grid();
    let mut acc = Accumulator::new();
    for t in 0..grid.len() {
        let f = grid.prob(t);
        let d = mech.decision(t);
        for i in 0..grid.n_agents() {
            let ti = grid.type_value(i, grid.type_index(t, i));
            acc.add(f * (d * ti - mech.verification(i, t) * grid.agent(i).cost()));
        }
    }
    acc.value()
}

/// Interim decision probability of every type of agent `i`.
pub fn interim_decisions(d: &[f64], grid: &DiscreteGrid, i: usize) -> Vec<f64> {
    (0..grid.n_types(i))
        .map(|k| {
            let mut acc = Accumulator::new();
            for (t, f) in grid.slice(i, k) {
                acc.add(f * d[t]);
            }
            acc.value()
        })
        .collect()
}

pub(crate) fn check_decisions(d: &[f64], grid: &DiscreteGrid) -> Result<()> {
    if d.len() != grid.len() {
        return Err(Error::InvalidMechanism(format!(
            "decision table has {} entries, grid has {}",
            d.len(),
            grid.len()
        )));
    }
    if let Some(k) = d.iter().position(|v| !(*v >= -1e-12 && *v <= 1.0 + 1e-12)) {
        return Err(Error::InvalidMechanism(format!("decision entry {k} = {} is outside [0, 1]", d[k])));
    }
    Ok(())
}

pub(crate) fn check_detection(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParams(format!("detection probability {p} not in (0, 1]")));
    }
    Ok(())
}

/// Value of a decision rule in the relaxed problem: the decision weighted
/// by net types, plus the verification savings earned through the
/// worst-off types' interim decisions.
pub fn relaxed_value(d: &[f64], grid: &DiscreteGrid, p: f64) -> Result<f64> {
    check_decisions(d, grid)?;
    check_detection(p)?;
    let mut acc = Accumulator::new();
    for t in 0..grid.len() {
        let f = grid.prob(t);
        for i in 0..grid.n_agents() {
            let k = grid.type_index(t, i);
            let c = grid.agent(i).cost() / p;
            let net = if grid.in_favor(i, k) { grid.type_value(i, k) - c } else { grid.type_value(i, k) + c };
            acc.add(f * d[t] * net);
        }
    }
    for i in 0..grid.n_agents() {
        let c = grid.agent(i).cost() / p;
        if c == 0.0 {
            continue;
        }
        let interim = interim_decisions(d, grid, i);
        let plus = grid.plus_types(i);
        let minus = grid.minus_types(i);
        if !plus.is_empty() {
            let mass: f64 = plus.iter().map(|&k| grid.type_prob(i, k)).sum();
            let low = plus.iter().map(|&k| interim[k]).fold(f64::INFINITY, f64::min);
            acc.add(c * mass * low);
        }
        if !minus.is_empty() {
            let mass: f64 = minus.iter().map(|&k| grid.type_prob(i, k)).sum();
            let high = minus.iter().map(|&k| interim[k]).fold(f64::NEG_INFINITY, f64::max);
            acc.add(-c * mass * high);
        }
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Estimates `principal_value` by sampling type profiles from the grid's
/// marginals with a seeded ChaCha8 stream.
pub fn monte_carlo_value(mech: &Mechanism, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParams("Monte Carlo needs at least two samples".into()));
    }
    let grid = mech.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cumulative: Vec<Vec<f64>> = (0..grid.n_agents())
        .map(|i| {
            let mut run = 0.0;
            grid.dist(i)
                .probs()
                .iter()
                .map(|p| {
                    run += p;
                    run
                })
                .collect()
        })
        .collect();
    let mut types = vec![0usize; grid.n_agents()];
    let mut sum = Accumulator::new();
    let mut sum_sq = Accumulator::new();
    for _ in 0..samples {
        for (i, cdf) in cumulative.iter().enumerate() {
            let u: f64 = rng.random();
            types[i] = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
        }
        let t = grid.index_of(&types);
        let d = mech.decision(t);
        let mut payoff = 0.0;
        for (i, &k) in types.iter().enumerate() {
            payoff += d * grid.type_value(i, k) - mech.verification(i, t) * grid.agent(i).cost();
        }
        sum.add(payoff);
        sum_sq.add(payoff * payoff);
    }
    let n = samples as f64;
    let mean = sum.value() / n;
    let var = ((sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate { mean, std_error: (var / n).sqrt(), samples })
}

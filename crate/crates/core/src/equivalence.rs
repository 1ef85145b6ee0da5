//! From Bayesian to ex-post incentive compatibility: marginal-preserving
//! monotone rearrangement of decision tables and the pointwise verification
//! rule built on top of it.

use crate::error::{Error, Result};
use crate::incentives::{check_bic, interim, Mechanism};
use crate::lp::{LinearProgram, Relation};
use crate::model::DiscreteGrid;
use crate::numeric::{bisect_root, Accumulator};
use crate::optimize::interim_decisions;

/// Largest number of agents `monotone_rearrange` accepts.
pub const MAX_REARRANGE_AGENTS: usize = 3;
const MARGIN_TOL: f64 = 1e-9;
const SNAP_TOL: f64 = 1e-12;

/// A table of probabilities in [0, 1] over a grid.
#[derive(Debug, Clone)]
pub struct DecisionTensor {
    pub grid: DiscreteGrid,
    pub values: Vec<f64>,
}

impl DecisionTensor {
    pub fn new(grid: DiscreteGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidMechanism(format!(
                "tensor has {} entries, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(*v >= -1e-12 && *v <= 1.0 + 1e-12)) {
            return Err(Error::InvalidMechanism(format!("tensor entry {k} = {} is outside [0, 1]", values[k])));
        }
        let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self { grid, values })
    }

    /// Probability-weighted marginal of agent `i`: one value per type.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        interim_decisions(&self.values, &self.grid, i)
    }
}

/// Type indices of agent `i` sorted by ascending marginal; ties keep the
/// original order.
fn axis_order(marginal: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..marginal.len()).collect();
    order.sort_by(|&a, &b| marginal[a].total_cmp(&marginal[b]));
    order
}

/// Finds a table with the same marginals as `g` that is nondecreasing in
/// every coordinate once each axis is ordered by its marginal. Among such
/// tables the one closest to `g` in weighted L1 distance is returned.
pub fn monotone_rearrange(g: &DecisionTensor) -> Result<DecisionTensor> {
    let grid = &g.grid;
    if grid.n_agents() > MAX_REARRANGE_AGENTS {
        return Err(Error::InvalidMechanism(format!(
            "rearrangement supports at most {MAX_REARRANGE_AGENTS} agents, got {}",
            grid.n_agents()
        )));
    }
    let n = grid.len();
    // variables: ĝ, then positive and negative deviations from g
    let mut lp = LinearProgram::new(3 * n);
    for j in 0..3 * n {
        lp.set_upper(j, 1.0);
    }
    for t in 0..n {
        lp.set_objective(n + t, -grid.prob(t));
        lp.set_objective(2 * n + t, -grid.prob(t));
        lp.add_row(vec![(t, 1.0), (n + t, -1.0), (2 * n + t, 1.0)], Relation::Eq, g.values[t]);
    }
    for i in 0..grid.n_agents() {
        let marginal = g.marginal(i);
        for (k, &m) in marginal.iter().enumerate() {
            lp.add_row(grid.slice(i, k).collect(), Relation::Eq, m);
        }
        let order = axis_order(&marginal);
        for pair in order.windows(2) {
            for r in 0..grid.n_others(i) {
                let lo = grid.join(i, pair[0], r);
                let hi = grid.join(i, pair[1], r);
                lp.add_row(vec![(lo, 1.0), (hi, -1.0)], Relation::Le, 0.0);
            }
        }
    }
    let solution = lp.solve().map_err(|e| Error::Numerical(format!("rearrangement program failed: {e}")))?;
    // entries the program left in place come back with round-off; restore them
    let values = solution.x[..n]
        .iter()
        .zip(&g.values)
        .map(|(&v, &orig)| if (v - orig).abs() <= SNAP_TOL { orig } else { v.clamp(0.0, 1.0) })
        .collect();
    let out = DecisionTensor::new(grid.clone(), values)?;
    for i in 0..grid.n_agents() {
        let before = g.marginal(i);
        let after = out.marginal(i);
        if before.iter().zip(&after).any(|(a, b)| (a - b).abs() > MARGIN_TOL) {
            return Err(Error::Numerical(format!("rearrangement drifted from agent {i}'s marginals")));
        }
    }
    Ok(out)
}

/// Largest gap between the interim of a pointwise minimum (maximum) over the
/// types in `subset` and the minimum (maximum) of their interims.
pub fn commuting_gap(g: &DecisionTensor, i: usize, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let grid = &g.grid;
    let marginal = g.marginal(i);
    let mut low = Accumulator::new();
    let mut high = Accumulator::new();
    for r in 0..grid.n_others(i) {
        let f = grid.others_prob(i, r);
        let cells = subset.iter().map(|&k| g.values[grid.join(i, k, r)]);
        low.add(f * cells.clone().fold(f64::INFINITY, f64::min));
        high.add(f * cells.fold(f64::NEG_INFINITY, f64::max));
    }
    let min_marginal = subset.iter().map(|&k| marginal[k]).fold(f64::INFINITY, f64::min);
    let max_marginal = subset.iter().map(|&k| marginal[k]).fold(f64::NEG_INFINITY, f64::max);
    (low.value() - min_marginal).abs().max((high.value() - max_marginal).abs())
}

/// Decision-conditional verification tables per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub a1: Vec<Vec<f64>>,
    pub a0: Vec<Vec<f64>>,
}

/// Smallest pointwise verification making `d_hat` ex-post incentive
/// compatible: when the policy is implemented, verify with the share of the
/// decision above the lowest in-favor alternative; on the status quo, with
/// the share of the gap to the highest against alternative.
pub fn epic_verification(d_hat: &DecisionTensor) -> Result<Verification> {
    let grid = &d_hat.grid;
    let n = grid.len();
    let mut a1 = vec![vec![0.0; n]; grid.n_agents()];
    let mut a0 = vec![vec![0.0; n]; grid.n_agents()];
    for i in 0..grid.n_agents() {
        let plus = grid.plus_types(i);
        let minus = grid.minus_types(i);
        for r in 0..grid.n_others(i) {
            let at = |k: usize| d_hat.values[grid.join(i, k, r)];
            let low = plus.iter().map(|&k| at(k)).fold(f64::INFINITY, f64::min);
            let high = minus.iter().map(|&k| at(k)).fold(f64::NEG_INFINITY, f64::max);
            for k in 0..grid.n_types(i) {
                let t = grid.join(i, k, r);
                let d = d_hat.values[t];
                let up = if !plus.is_empty() && d > 0.0 { ((d - low) / d).max(0.0) } else { 0.0 };
                let down = if !minus.is_empty() && d < 1.0 { ((high - d) / (1.0 - d)).max(0.0) } else { 0.0 };
                for (name, v) in [("a1", up), ("a0", down)] {
                    if v.is_nan() || v > 1.0 + 1e-9 {
                        return Err(Error::Numerical(format!("{name}[{i}] at profile {t} is {v}")));
                    }
                }
                a1[i][t] = up.min(1.0);
                a0[i][t] = down.min(1.0);
            }
        }
    }
    Ok(Verification { a1, a0 })
}

/// Builds an ex-post incentive compatible mechanism with the same interim
/// decision and verification rules as a Bayesian incentive compatible one.
///
/// The decision table is rearranged, the pointwise verification rule is
/// attached, and each type's verification is then raised uniformly across
/// opponent profiles (capped at 1) until its interim value matches the input.
pub fn bic_to_epic(mech: &Mechanism) -> Result<Mechanism> {
    let report = check_bic(mech, 1.0);
    if !report.satisfied() {
        return Err(Error::InvalidMechanism(format!(
            "input is not Bayesian incentive compatible (min slack {:.3e})",
            report.min_slack
        )));
    }
    let grid = mech.grid();
    let tensor = DecisionTensor::new(grid.clone(), mech.decisions().to_vec())?;
    let d_hat = monotone_rearrange(&tensor)?;
    let Verification { mut a1, mut a0 } = epic_verification(&d_hat)?;
    let raw = Mechanism::new(grid.clone(), d_hat.values.clone(), a1.clone(), a0.clone())?;
    for i in 0..grid.n_agents() {
        let target = interim(mech, i).verification;
        let current = interim(&raw, i).verification;
        for k in 0..grid.n_types(i) {
            let deficit = target[k] - current[k];
            if deficit < -MARGIN_TOL {
                return Err(Error::Numerical(format!(
                    "agent {i}, type {k}: pointwise verification {:.12} exceeds the input's {:.12}",
                    current[k], target[k]
                )));
            }
            if deficit <= 0.0 {
                continue;
            }
            let cells: Vec<(usize, f64, f64)> =
                grid.slice(i, k).map(|(t, f)| (t, f, raw.verification(i, t))).collect();
            let padded = |x: f64| -> f64 {
                let mut acc = Accumulator::new();
                for &(_, f, v) in &cells {
                    acc.add(f * (v + x).min(1.0));
                }
                acc.value() - target[k]
            };
            let x = bisect_root(padded, 0.0, 1.0, 1e-15).unwrap_or(1.0);
            for &(t, _, v) in &cells {
                let goal = (v + x).min(1.0);
                if v >= 1.0 || goal <= v {
                    continue;
                }
                let s = (goal - v) / (1.0 - v);
                a1[i][t] += s * (1.0 - a1[i][t]);
                a0[i][t] += s * (1.0 - a0[i][t]);
            }
        }
    }
    Mechanism::new(grid.clone(), d_hat.values, a1, a0)
}

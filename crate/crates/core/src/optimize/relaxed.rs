use crate::error::{Error, Result};
use crate::incentives::Mechanism;
use crate::lp::{LinearProgram, Relation};
use crate::model::DiscreteGrid;

use super::value::{check_decisions, check_detection, interim_decisions, relaxed_value};

/// Largest grid the relaxed linear program accepts.
pub const MAX_LP_PROFILES: usize = 100_000;

const SNAP_TOL: f64 = 1e-10;
/// Interim gaps below this are round-off, not influence that needs auditing.
const GAP_TOL: f64 = 1e-12;

/// Optimal decision rule of the relaxed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub d: Vec<f64>,
    pub value: f64,
    /// Lowest interim decision over each agent's in-favor types (`+∞` if none).
    pub m_plus: Vec<f64>,
    /// Highest interim decision over each agent's against types (`-∞` if none).
    pub m_minus: Vec<f64>,
    pub p: f64,
}

fn extremes(d: &[f64], grid: &DiscreteGrid, i: usize) -> (f64, f64) {
    let interim = interim_decisions(d, grid, i);
    let low = grid.plus_types(i).iter().map(|&k| interim[k]).fold(f64::INFINITY, f64::min);
    let high = grid.minus_types(i).iter().map(|&k| interim[k]).fold(f64::NEG_INFINITY, f64::max);
    (low, high)
}

/// Solves the relaxed problem over decision tables as a linear program.
///
/// The lowest in-favor and highest against interim decisions enter the
/// objective through one auxiliary variable each, bounded by every interim
/// value on its side. With `p < 1` the influence bounds
/// `D ≤ m⁺/(1-p)` on in-favor types and `D ≥ (m⁻-p)/(1-p)` on against types
/// are added.
pub fn solve_relaxed_lp(grid: &DiscreteGrid, p: f64) -> Result<RelaxedSolution> {
    check_detection(p)?;
    let n = grid.len();
    if n > MAX_LP_PROFILES {
        return Err(Error::GridTooLarge { profiles: n, cap: MAX_LP_PROFILES });
    }
    let agents = grid.n_agents();
    // variable layout: d[0..n], then m⁺ and m⁻ per agent
    let plus_var = |i: usize| n + 2 * i;
    let minus_var = |i: usize| n + 2 * i + 1;
    let mut lp = LinearProgram::new(n + 2 * agents);
    for j in 0..lp.n_vars() {
        lp.set_upper(j, 1.0);
    }
    for t in 0..n {
        let mut net = 0.0;
        for i in 0..agents {
            let k = grid.type_index(t, i);
            let c = grid.agent(i).cost() / p;
            net += if grid.in_favor(i, k) { grid.type_value(i, k) - c } else { grid.type_value(i, k) + c };
        }
        lp.set_objective(t, grid.prob(t) * net);
    }
    for i in 0..agents {
        let c = grid.agent(i).cost() / p;
        let plus = grid.plus_types(i);
        let minus = grid.minus_types(i);
        let mass = |ks: &[usize]| ks.iter().map(|&k| grid.type_prob(i, k)).sum::<f64>();
        lp.set_objective(plus_var(i), c * mass(&plus));
        lp.set_objective(minus_var(i), -c * mass(&minus));
        if plus.is_empty() {
            lp.set_upper(plus_var(i), 0.0);
        }
        if minus.is_empty() {
            lp.set_upper(minus_var(i), 0.0);
        }
        let interim_row = |k: usize, scale: f64| -> Vec<(usize, f64)> {
            grid.slice(i, k).map(|(t, f)| (t, scale * f)).collect()
        };
        for &k in &plus {
            let mut row = interim_row(k, -1.0);
            row.push((plus_var(i), 1.0));
            lp.add_row(row, Relation::Le, 0.0);
            if p < 1.0 {
                let mut row = interim_row(k, 1.0 - p);
                row.push((plus_var(i), -1.0));
                lp.add_row(row, Relation::Le, 0.0);
            }
        }
        for &k in &minus {
            let mut row = interim_row(k, 1.0);
            row.push((minus_var(i), -1.0));
            lp.add_row(row, Relation::Le, 0.0);
            if p < 1.0 {
                let mut row = interim_row(k, -(1.0 - p));
                row.push((minus_var(i), 1.0));
                lp.add_row(row, Relation::Le, p);
            }
        }
    }
    let solution = lp.solve()?;
    // simplex round-off leaves entries a few ulps away from 0 and 1
    let d: Vec<f64> = solution.x[..n]
        .iter()
        .map(|v| {
            let v = v.clamp(0.0, 1.0);
            if v < SNAP_TOL {
                0.0
            } else if v > 1.0 - SNAP_TOL {
                1.0
            } else {
                v
            }
        })
        .collect();
    let (m_plus, m_minus): (Vec<f64>, Vec<f64>) = (0..agents).map(|i| extremes(&d, grid, i)).unzip();
    let value = relaxed_value(&d, grid, p)?;
    Ok(RelaxedSolution { d, value, m_plus, m_minus, p })
}

/// Slack allowed when checking that a verification probability fits in [0, 1].
const Q_TOL: f64 = 1e-9;

/// Attaches the cheapest verification rule that makes `d` Bayesian
/// incentive compatible: every binding constraint holds with equality.
///
/// A report `k` whose interim decision exceeds the worst-off in-favor
/// type's is verified with probability `q` whenever the policy is
/// implemented, where `D(k)(1 - p q) = inf D`; a report below the worst-off
/// against type's is verified on the status quo with
/// `D(k) + p q (1 - D(k)) = sup D`. The first only moves the in-favor
/// constraint and the second only the against one, so they are set
/// independently. For monotone rules only in-favor types need the first and
/// only against types the second.
pub fn build_verification(d: &[f64], grid: &DiscreteGrid, p: f64) -> Result<Mechanism> {
    check_decisions(d, grid)?;
    check_detection(p)?;
    let d: Vec<f64> = d.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let n = grid.len();
    let mut a1 = vec![vec![0.0; n]; grid.n_agents()];
    let mut a0 = vec![vec![0.0; n]; grid.n_agents()];
    for i in 0..grid.n_agents() {
        let interim = interim_decisions(&d, grid, i);
        let (low, high) = extremes(&d, grid, i);
        for k in 0..grid.n_types(i) {
            let dk = interim[k];
            let q_plus = if low.is_finite() && dk - low > GAP_TOL { (dk - low) / (p * dk) } else { 0.0 };
            let q_minus = if high.is_finite() && high - dk > GAP_TOL { (high - dk) / (p * (1.0 - dk)) } else { 0.0 };
            for q in [q_plus, q_minus] {
                if !(q <= 1.0 + Q_TOL) {
                    return Err(Error::Infeasible(format!(
                        "agent {i}, type {}: no verification probability in [0, 1] makes the constraint bind \
                         (needs {q:.9}); the decision rule gives this type too much influence",
                        grid.type_value(i, k)
                    )));
                }
            }
            let (q_plus, q_minus) = (q_plus.clamp(0.0, 1.0), q_minus.clamp(0.0, 1.0));
            if q_plus == 0.0 && q_minus == 0.0 {
                continue;
            }
            for (t, _) in grid.slice(i, k) {
                if d[t] > 0.0 {
                    a1[i][t] = q_plus;
                }
                if d[t] < 1.0 {
                    a0[i][t] = q_minus;
                }
            }
        }
    }
    Mechanism::new(grid.clone(), d, a1, a0)
}

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation};
use crate::model::{AgentSpec, ContinuousDist, DiscreteGrid, Distribution, SignRule};
use crate::numeric::{bisect_boundary, bisect_root, compensated_sum};
use crate::vwe::{weight_value, AgentWeights, VweParams};

use super::relaxed::RelaxedSolution;
use super::value::check_detection;

/// Optimal plateau weights of one agent in a two-agent problem. A side is
/// `None` when the agent has no types on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAgentWeights {
    pub omega_plus: Option<f64>,
    pub omega_minus: Option<f64>,
}

const ROOT_TOL: f64 = 1e-13;

/// One side of an agent's type distribution, seen through expectations.
trait Part {
    fn mass(&self) -> f64;
    fn mean(&self) -> f64;
    /// Essential infimum and supremum.
    fn range(&self) -> (f64, f64);
    /// `E[max(w, t - c)] `over the part, unnormalized.
    fn expect_max(&self, w: f64, c: f64) -> f64;
    /// `E[min(w, t + c)]` over the part, unnormalized.
    fn expect_min(&self, w: f64, c: f64) -> f64;
}

struct DiscretePart {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl Part for DiscretePart {
    fn mass(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    fn mean(&self) -> f64 {
        compensated_sum(self.values.iter().zip(&self.probs).map(|(v, p)| v * p))
    }

    fn range(&self) -> (f64, f64) {
        (self.values[0], self.values[self.values.len() - 1])
    }

    fn expect_max(&self, w: f64, c: f64) -> f64 {
        compensated_sum(self.values.iter().zip(&self.probs).map(|(v, p)| p * w.max(v - c)))
    }

    fn expect_min(&self, w: f64, c: f64) -> f64 {
        compensated_sum(self.values.iter().zip(&self.probs).map(|(v, p)| p * w.min(v + c)))
    }
}

/// Quantile range `[lo, hi]` of a continuous distribution.
struct QuantilePart<'a> {
    dist: &'a ContinuousDist,
    lo: f64,
    hi: f64,
}

impl QuantilePart<'_> {
    /// Largest `u` in the part with `Q(u) < x`.
    fn level(&self, x: f64) -> f64 {
        bisect_boundary(|u| u <= self.lo || self.dist.quantile(u) < x, self.lo, self.hi, 1e-15)
    }
}

impl Part for QuantilePart<'_> {
    fn mass(&self) -> f64 {
        self.hi - self.lo
    }

    fn mean(&self) -> f64 {
        self.dist.partial_expectation(self.lo, self.hi)
    }

    fn range(&self) -> (f64, f64) {
        (self.dist.quantile(self.lo), self.dist.quantile(self.hi))
    }

    fn expect_max(&self, w: f64, c: f64) -> f64 {
        let kink = self.level(w + c);
        w * (kink - self.lo) + self.dist.partial_expectation(kink, self.hi) - c * (self.hi - kink)
    }

    fn expect_min(&self, w: f64, c: f64) -> f64 {
        let kink = self.level(w - c);
        self.dist.partial_expectation(self.lo, kink) + c * (kink - self.lo) + w * (self.hi - kink)
    }
}

/// Solves `E[max(w, t - c) | t in T⁺] = E[t | t in T⁺]` for `w`.
fn solve_plus(part: &dyn Part, c: f64) -> Result<f64> {
    let (low, _) = part.range();
    if c == 0.0 {
        if !low.is_finite() {
            return Err(Error::Numerical("in-favor types are unbounded below".into()));
        }
        return Ok(low);
    }
    let mass = part.mass();
    let mean = part.mean();
    let gap = |w: f64| part.expect_max(w, c) - mean;
    // gap is nondecreasing: −c·mass far below the support, ≥ 0 at the mean
    let hi = mean / mass;
    let mut lo = hi - c - 1.0;
    let mut guard = 0;
    while gap(lo) >= 0.0 {
        lo -= 2.0 * (hi - lo);
        guard += 1;
        if guard > 200 {
            return Err(Error::Numerical("could not bracket the in-favor plateau weight".into()));
        }
    }
    bisect_root(gap, lo, hi, ROOT_TOL)
        .ok_or_else(|| Error::Numerical("in-favor plateau weight has no sign change".into()))
}

/// Solves `E[min(w, t + c) | t in T⁻] = E[t | t in T⁻]` for `w`.
fn solve_minus(part: &dyn Part, c: f64) -> Result<f64> {
    let (_, high) = part.range();
    if c == 0.0 {
        if !high.is_finite() {
            return Err(Error::Numerical("against types are unbounded above".into()));
        }
        return Ok(high);
    }
    let mass = part.mass();
    let mean = part.mean();
    let gap = |w: f64| part.expect_min(w, c) - mean;
    let lo = mean / mass;
    let mut hi = lo + c + 1.0;
    let mut guard = 0;
    while gap(hi) <= 0.0 {
        hi += 2.0 * (hi - lo);
        guard += 1;
        if guard > 200 {
            return Err(Error::Numerical("could not bracket the against plateau weight".into()));
        }
    }
    bisect_root(gap, lo, hi, ROOT_TOL)
        .ok_or_else(|| Error::Numerical("against plateau weight has no sign change".into()))
}

/// Optimal plateau weights of one agent when there are two agents: the
/// in-favor plateau equates the mean of `max(w, t - c)` with the mean type
/// on the in-favor side, and mirror-wise on the against side.
pub fn solve_two_agent_weights(agent: &AgentSpec) -> Result<TwoAgentWeights> {
    let c = agent.cost();
    let (plus_mass, minus_mass) = agent.part_masses();
    let mut out = TwoAgentWeights { omega_plus: None, omega_minus: None };
    match agent.distribution() {
        Distribution::Discrete(dist) => {
            let split = |favor: bool| {
                let (values, probs) = dist
                    .values()
                    .iter()
                    .zip(dist.probs())
                    .filter(|(v, _)| agent.in_favor(**v) == favor)
                    .map(|(v, p)| (*v, *p))
                    .unzip();
                DiscretePart { values, probs }
            };
            let plus = split(true);
            if !plus.values.is_empty() {
                out.omega_plus = Some(solve_plus(&plus, c)?);
            }
            let minus = split(false);
            if !minus.values.is_empty() {
                out.omega_minus = Some(solve_minus(&minus, c)?);
            }
        }
        Distribution::Continuous(dist) => {
            let split = minus_mass;
            if plus_mass > 0.0 {
                out.omega_plus = Some(solve_plus(&QuantilePart { dist, lo: split, hi: 1.0 }, c)?);
            }
            if minus_mass > 0.0 {
                out.omega_minus = Some(solve_minus(&QuantilePart { dist, lo: 0.0, hi: split }, c)?);
            }
            // with no cost the plateau sits at the threshold itself
            if let (SignRule::Threshold(theta), true) = (agent.sign_rule(), c == 0.0) {
                if plus_mass > 0.0 && minus_mass > 0.0 {
                    out.omega_minus = out.omega_minus.map(|w| w.min(theta));
                    out.omega_plus = out.omega_plus.map(|w| w.max(theta));
                }
            }
        }
    }
    if out.omega_plus.is_none() && out.omega_minus.is_none() {
        return Err(Error::InvalidDistribution("agent has no probability mass".into()));
    }
    Ok(out)
}

/// Voting-with-evidence parameters recovered from a relaxed solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedWeights {
    pub params: VweParams,
    /// Fraction of profiles where the fitted rule disagrees with the rounded
    /// relaxed decision (profiles on a tie of the fitted weights with a
    /// fractional relaxed decision count as agreeing).
    pub residual: f64,
    /// Decision margin achieved by the fit; positive when every strict
    /// decision is reproduced with room to spare.
    pub margin: f64,
}

const PLATEAU_TOL: f64 = 1e-7;
const ROUND_TOL: f64 = 1e-6;

/// How one type's weight is determined in the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Known(f64),
    Unknown(usize),
}

struct AgentLayout {
    nets: Vec<f64>,
    favor: Vec<bool>,
    slots: Vec<Slot>,
    /// Unknown variable index for ω⁺, ω⁻, ν⁺, ν⁻ if present.
    omega_plus: Option<usize>,
    omega_minus: Option<usize>,
    nu_plus: Option<usize>,
    nu_minus: Option<usize>,
    plateau_plus: Vec<usize>,
    plateau_minus: Vec<usize>,
    cap_plus: Vec<usize>,
    cap_minus: Vec<usize>,
}

/// Sides of agent `i` whose interim decision is constant at a value where
/// the plateau and the cap coincide (nothing on the in-favor side, or
/// everything on the against side, under imperfect verification). The split
/// between plateau and cap types is then not determined by the solution.
fn flexible_sides(grid: &DiscreteGrid, i: usize, sol: &RelaxedSolution, p: f64) -> [Option<usize>; 2] {
    if p >= 1.0 {
        return [None, None];
    }
    let interim = super::value::interim_decisions(&sol.d, grid, i);
    let plus = grid.plus_types(i);
    let minus = grid.minus_types(i);
    let flat = |ks: &[usize], level: f64| !ks.is_empty() && ks.iter().all(|&k| (interim[k] - level).abs() <= PLATEAU_TOL);
    [
        flat(&plus, 0.0).then_some(plus.len()),
        flat(&minus, 1.0).then_some(minus.len()),
    ]
}

fn layout(
    grid: &DiscreteGrid,
    i: usize,
    sol: &RelaxedSolution,
    p: f64,
    split: [Option<usize>; 2],
    next: &mut usize,
) -> AgentLayout {
    let interim = super::value::interim_decisions(&sol.d, grid, i);
    let c = grid.agent(i).cost() / p;
    let nets: Vec<f64> = (0..grid.n_types(i))
        .map(|k| if grid.in_favor(i, k) { grid.type_value(i, k) - c } else { grid.type_value(i, k) + c })
        .collect();
    let plus = grid.plus_types(i);
    let minus = grid.minus_types(i);
    let m_plus = sol.m_plus[i];
    let m_minus = sol.m_minus[i];
    // bunching plateaus: the lowest in-favor run at the minimum and the
    // highest against run at the maximum
    let mut plateau_plus: Vec<usize> = plus.iter().copied().take_while(|&k| interim[k] <= m_plus + PLATEAU_TOL).collect();
    let mut plateau_minus: Vec<usize> = {
        let mut v: Vec<usize> =
            minus.iter().rev().copied().take_while(|&k| interim[k] >= m_minus - PLATEAU_TOL).collect();
        v.reverse();
        v
    };
    let mut cap_plus = Vec::new();
    let mut cap_minus = Vec::new();
    if p < 1.0 {
        let bound = m_plus / (1.0 - p);
        cap_plus = plus
            .iter()
            .rev()
            .copied()
            .filter(|k| !plateau_plus.contains(k))
            .take_while(|&k| interim[k] >= bound - PLATEAU_TOL)
            .collect();
        cap_plus.reverse();
        let bound = (m_minus - p) / (1.0 - p);
        cap_minus = minus
            .iter()
            .copied()
            .filter(|k| !plateau_minus.contains(k))
            .take_while(|&k| interim[k] <= bound + PLATEAU_TOL)
            .collect();
    }
    // a flat side is cut into a low and a high block by the given split
    if let Some(s) = split[0] {
        plateau_plus = plus[..s].to_vec();
        cap_plus = plus[s..].to_vec();
    }
    if let Some(s) = split[1] {
        cap_minus = minus[..s].to_vec();
        plateau_minus = minus[s..].to_vec();
    }
    let mut fresh = |used: bool| {
        if used {
            *next += 1;
            Some(*next - 1)
        } else {
            None
        }
    };
    let omega_plus = fresh(!plus.is_empty());
    let omega_minus = fresh(!minus.is_empty());
    let nu_plus = fresh(!cap_plus.is_empty());
    let nu_minus = fresh(!cap_minus.is_empty());
    let slots = (0..grid.n_types(i))
        .map(|k| {
            if plateau_plus.contains(&k) {
                Slot::Unknown(omega_plus.unwrap())
            } else if plateau_minus.contains(&k) {
                Slot::Unknown(omega_minus.unwrap())
            } else if cap_plus.contains(&k) {
                Slot::Unknown(nu_plus.unwrap())
            } else if cap_minus.contains(&k) {
                Slot::Unknown(nu_minus.unwrap())
            } else {
                Slot::Known(nets[k])
            }
        })
        .collect();
    AgentLayout {
        nets,
        favor: (0..grid.n_types(i)).map(|k| grid.in_favor(i, k)).collect(),
        slots,
        omega_plus,
        omega_minus,
        nu_plus,
        nu_minus,
        plateau_plus,
        plateau_minus,
        cap_plus,
        cap_minus,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Target {
    Policy,
    StatusQuo,
    Tie,
}

fn target(d: f64) -> Target {
    if d >= 1.0 - ROUND_TOL {
        Target::Policy
    } else if d <= ROUND_TOL {
        Target::StatusQuo
    } else {
        Target::Tie
    }
}

/// Fits plateau and cap weights to a relaxed solution by a max-margin
/// linear program over the unknown plateau values, then moves each plateau
/// weight to the nearest net type that keeps the fit unchanged.
pub fn fit_weights(sol: &RelaxedSolution, grid: &DiscreteGrid, p: f64) -> Result<FittedWeights> {
    check_detection(p)?;
    if sol.d.len() != grid.len() || sol.m_plus.len() != grid.n_agents() {
        return Err(Error::InvalidMechanism("relaxed solution does not match the grid".into()));
    }
    // every combination of splits on flat sides, within a small budget
    let options: Vec<(usize, usize, usize)> = (0..grid.n_agents())
        .flat_map(|i| {
            let sides = flexible_sides(grid, i, sol, p);
            (0..2).filter_map(move |s| sides[s].map(|len| (i, s, len)))
        })
        .collect();
    let combos: usize = options.iter().map(|o| o.2 + 1).try_fold(1usize, |a, b| a.checked_mul(b)).unwrap_or(usize::MAX);
    let mut best: Option<FittedWeights> = None;
    let budget = if combos <= MAX_SPLIT_COMBOS { combos } else { 1 };
    for mut code in 0..budget {
        let mut splits = vec![[None, None]; grid.n_agents()];
        if budget > 1 {
            for &(i, side, len) in &options {
                splits[i][side] = Some(code % (len + 1));
                code /= len + 1;
            }
        }
        let fit = fit_with_splits(sol, grid, p, &splits)?;
        let better = match &best {
            None => true,
            Some(b) => fit.residual < b.residual || (fit.residual == b.residual && fit.margin > b.margin),
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one split is tried"))
}

const MAX_SPLIT_COMBOS: usize = 256;

fn fit_with_splits(
    sol: &RelaxedSolution,
    grid: &DiscreteGrid,
    p: f64,
    splits: &[[Option<usize>; 2]],
) -> Result<FittedWeights> {
    let mut n_unknown = 0;
    let layouts: Vec<AgentLayout> =
        (0..grid.n_agents()).map(|i| layout(grid, i, sol, p, splits[i], &mut n_unknown)).collect();
    let bound = 1.0
        + 2.0 * layouts
            .iter()
            .flat_map(|l| l.nets.iter())
            .fold(0.0_f64, |a, v| a.max(v.abs()))
            * grid.n_agents() as f64;

    // Group profiles by which unknowns they use; only the tightest constant
    // per group and target matters.
    let mut strict: HashMap<(Vec<usize>, bool), f64> = HashMap::new();
    let mut ties: Vec<(Vec<usize>, f64)> = Vec::new();
    for t in 0..grid.len() {
        let mut key = Vec::new();
        let mut constant = 0.0;
        for (i, l) in layouts.iter().enumerate() {
            match l.slots[grid.type_index(t, i)] {
                Slot::Known(v) => constant += v,
                Slot::Unknown(u) => key.push(u),
            }
        }
        key.sort_unstable();
        match target(sol.d[t]) {
            Target::Policy => {
                let e = strict.entry((key, true)).or_insert(f64::INFINITY);
                *e = e.min(constant);
            }
            Target::StatusQuo => {
                let e = strict.entry((key, false)).or_insert(f64::NEG_INFINITY);
                *e = e.max(constant);
            }
            Target::Tie => {
                if !ties.iter().any(|(k, c)| *k == key && (c - constant).abs() < 1e-12) {
                    ties.push((key, constant));
                }
            }
        }
    }
    let mut strict: Vec<_> = strict.into_iter().collect();
    strict.sort_by(|a, b| a.0.cmp(&b.0));

    let solve = |with_ties: bool, with_order: bool| -> Result<Option<(Vec<f64>, f64)>> {
        // variables: unknowns shifted by `bound`, then the margin
        let margin = n_unknown;
        let mut lp = LinearProgram::new(n_unknown + 1);
        for u in 0..n_unknown {
            lp.set_upper(u, 2.0 * bound);
        }
        lp.set_upper(margin, 2.0 * bound);
        lp.set_objective(margin, 1.0);
        // margin variable is stored as δ + bound so the program stays feasible
        let shifted = |key: &[usize]| -> (Vec<(usize, f64)>, f64) {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for &u in key {
                match row.iter_mut().find(|(j, _)| *j == u) {
                    Some(e) => e.1 += 1.0,
                    None => row.push((u, 1.0)),
                }
            }
            (row, key.len() as f64 * bound)
        };
        for ((key, policy), constant) in &strict {
            let (mut row, offset) = shifted(key);
            // Σ unknowns + constant ≥ δ   (policy)
            // Σ unknowns + constant ≤ −δ  (status quo)
            if *policy {
                for e in &mut row {
                    e.1 = -e.1;
                }
                row.push((margin, 1.0));
                lp.add_row(row, Relation::Le, constant - offset + bound);
            } else {
                row.push((margin, 1.0));
                lp.add_row(row, Relation::Le, offset - constant + bound);
            }
        }
        if with_ties {
            for (key, constant) in &ties {
                let (row, offset) = shifted(key);
                if row.is_empty() {
                    if constant.abs() > 1e-9 {
                        return Ok(None);
                    }
                    continue;
                }
                lp.add_row(row, Relation::Eq, offset - constant);
            }
        }
        for l in &layouts {
            let known = |ks: &[usize]| -> Vec<f64> { ks.iter().map(|&k| l.nets[k]).collect() };
            let others_plus = |k: &usize| !l.plateau_plus.contains(k) && !l.cap_plus.contains(k);
            let others_minus = |k: &usize| !l.plateau_minus.contains(k) && !l.cap_minus.contains(k);
            let plus_free: Vec<usize> =
                (0..l.nets.len()).filter(|k| matches!(l.slots[*k], Slot::Known(_)) && others_plus(k)).collect();
            if let Some(u) = l.omega_plus {
                // plateau types must sit at or below ω⁺, free in-favor types above
                for v in known(&l.plateau_plus) {
                    lp.add_row(vec![(u, 1.0)], Relation::Ge, v + bound);
                }
                for &k in plus_free.iter().filter(|k| l.in_plus(**k)) {
                    lp.add_row(vec![(u, 1.0)], Relation::Le, l.nets[k] + bound);
                }
            }
            if let Some(u) = l.nu_plus {
                for v in known(&l.cap_plus) {
                    lp.add_row(vec![(u, 1.0)], Relation::Le, v + bound);
                }
                for &k in plus_free.iter().filter(|k| l.in_plus(**k)) {
                    lp.add_row(vec![(u, 1.0)], Relation::Ge, l.nets[k] + bound);
                }
                if let Some(w) = l.omega_plus {
                    lp.add_row(vec![(u, 1.0), (w, -1.0)], Relation::Ge, 0.0);
                }
            }
            let minus_free: Vec<usize> = (0..l.nets.len())
                .filter(|k| matches!(l.slots[*k], Slot::Known(_)) && others_minus(k) && !l.in_plus(*k))
                .collect();
            if let Some(u) = l.omega_minus {
                for v in known(&l.plateau_minus) {
                    lp.add_row(vec![(u, 1.0)], Relation::Le, v + bound);
                }
                for &k in &minus_free {
                    lp.add_row(vec![(u, 1.0)], Relation::Ge, l.nets[k] + bound);
                }
            }
            if let Some(u) = l.nu_minus {
                for v in known(&l.cap_minus) {
                    lp.add_row(vec![(u, 1.0)], Relation::Ge, v + bound);
                }
                for &k in &minus_free {
                    lp.add_row(vec![(u, 1.0)], Relation::Le, l.nets[k] + bound);
                }
                if let Some(w) = l.omega_minus {
                    lp.add_row(vec![(u, 1.0), (w, -1.0)], Relation::Le, 0.0);
                }
            }
            if with_order {
                if let (Some(hi), Some(lo)) = (l.omega_plus, l.omega_minus) {
                    lp.add_row(vec![(hi, 1.0), (lo, -1.0)], Relation::Ge, 0.0);
                }
            }
        }
        match lp.solve() {
            Ok(s) => {
                let values = s.x[..n_unknown].iter().map(|x| x - bound).collect();
                Ok(Some((values, s.x[margin] - bound)))
            }
            Err(LpError::Infeasible) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let fit = match solve(true, true)? {
        Some(f) if f.1 > 0.0 || ties.is_empty() => Some(f),
        _ => solve(false, true)?,
    };
    let (values, margin) = match fit {
        Some(f) => f,
        None => solve(false, false)?.ok_or_else(|| Error::Numerical("weight fit is infeasible".into()))?,
    };

    let assemble = |values: &[f64]| -> Result<VweParams> {
        let agents = layouts
            .iter()
            .map(|l| {
                let get = |u: Option<usize>, default: f64| u.map_or(default, |u| values[u]);
                let mut omega_plus = get(l.omega_plus, f64::NAN);
                let mut omega_minus = get(l.omega_minus, f64::NAN);
                match (omega_plus.is_nan(), omega_minus.is_nan()) {
                    (true, true) => {
                        omega_plus = 0.0;
                        omega_minus = 0.0;
                    }
                    (true, false) => omega_plus = omega_minus,
                    (false, true) => omega_minus = omega_plus,
                    _ => omega_minus = omega_minus.min(omega_plus),
                }
                let nu_plus = get(l.nu_plus, f64::INFINITY).max(omega_plus);
                let nu_minus = get(l.nu_minus, f64::NEG_INFINITY).min(omega_minus);
                AgentWeights { omega_plus, omega_minus, nu_plus, nu_minus }
            })
            .collect();
        VweParams::new(agents, p)
    };
    let mut values = values;
    let mut params = assemble(&values)?;
    let mut residual = disagreement(&params, grid, sol)?;
    // snap each unknown to the boundary net type of its plateau when that
    // leaves the fit unchanged
    for l in &layouts {
        let snaps = [
            (l.omega_plus, l.plateau_plus.iter().map(|&k| l.nets[k]).fold(f64::NEG_INFINITY, f64::max)),
            (l.omega_minus, l.plateau_minus.iter().map(|&k| l.nets[k]).fold(f64::INFINITY, f64::min)),
            (l.nu_plus, l.cap_plus.iter().map(|&k| l.nets[k]).fold(f64::INFINITY, f64::min)),
            (l.nu_minus, l.cap_minus.iter().map(|&k| l.nets[k]).fold(f64::NEG_INFINITY, f64::max)),
        ];
        for (u, target) in snaps {
            let Some(u) = u else { continue };
            if !target.is_finite() {
                continue;
            }
            let mut trial = values.clone();
            trial[u] = target;
            if let Ok(candidate) = assemble(&trial) {
                let r = disagreement(&candidate, grid, sol)?;
                if r <= residual {
                    values = trial;
                    params = candidate;
                    residual = r;
                }
            }
        }
    }
    Ok(FittedWeights { params, residual, margin })
}

impl AgentLayout {
    fn in_plus(&self, k: usize) -> bool {
        self.favor[k]
    }
}

/// Fraction of profiles where voting with `params` contradicts the relaxed
/// decision.
fn disagreement(params: &VweParams, grid: &DiscreteGrid, sol: &RelaxedSolution) -> Result<f64> {
    let n = grid.n_agents();
    let table: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..grid.n_types(i))
                .map(|k| {
                    weight_value(
                        &params.agents[i],
                        params.p,
                        grid.in_favor(i, k),
                        grid.agent(i).cost(),
                        grid.type_value(i, k),
                    )
                })
                .collect()
        })
        .collect();
    let mut wrong = 0usize;
    for t in 0..grid.len() {
        let mut sum = 0.0;
        for (i, row) in table.iter().enumerate() {
            sum += row[grid.type_index(t, i)];
        }
        let agrees = match target(sol.d[t]) {
            Target::Policy => sum > 0.0,
            Target::StatusQuo => sum <= 0.0,
            Target::Tie => sum.abs() <= 1e-9 || (sum > 0.0) == (sol.d[t] > 0.5),
        };
        if !agrees {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / grid.len() as f64)
}

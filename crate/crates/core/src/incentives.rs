//! Tabular mechanisms, interim rules and incentive-compatibility audits.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{AgentSpec, DiscreteGrid, InterimProfile};
use crate::numeric::Accumulator;
use crate::vwe::{decide, is_decisive, VweParams};

/// Slack below which a constraint counts as violated.
pub const SLACK_TOL: f64 = 1e-9;
const ENTRY_TOL: f64 = 1e-12;

/// Decision probabilities and decision-conditional verification
/// probabilities over a finite grid.
#[derive(Debug, Clone)]
pub struct Mechanism {
    grid: DiscreteGrid,
    d: Vec<f64>,
    a1: Vec<Vec<f64>>,
    a0: Vec<Vec<f64>>,
}

fn check_table(name: &str, values: &[f64], len: usize) -> Result<()> {
    if values.len() != len {
        return Err(Error::InvalidMechanism(format!("{name} has {} entries, grid has {len}", values.len())));
    }
    if let Some(k) = values.iter().position(|v| !(*v >= -ENTRY_TOL && *v <= 1.0 + ENTRY_TOL)) {
        return Err(Error::InvalidMechanism(format!(
            "{name} entry {k} = {} is outside [0, 1]",
            values[k]
        )));
    }
    Ok(())
}

fn clamp_unit(values: Vec<f64>) -> Vec<f64> {
    values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

impl Mechanism {
    pub fn new(grid: DiscreteGrid, d: Vec<f64>, a1: Vec<Vec<f64>>, a0: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.n_agents();
        if a1.len() != n || a0.len() != n {
            return Err(Error::InvalidMechanism(format!("verification tables must cover {n} agents")));
        }
        check_table("decision", &d, grid.len())?;
        for i in 0..n {
            check_table(&format!("a1[{i}]"), &a1[i], grid.len())?;
            check_table(&format!("a0[{i}]"), &a0[i], grid.len())?;
        }
        Ok(Self {
            d: clamp_unit(d),
            a1: a1.into_iter().map(clamp_unit).collect(),
            a0: a0.into_iter().map(clamp_unit).collect(),
            grid,
        })
    }

    /// A decision rule with no verification.
    pub fn decision_only(grid: DiscreteGrid, d: Vec<f64>) -> Result<Self> {
        let zeros = vec![vec![0.0; grid.len()]; grid.n_agents()];
        Self::new(grid, d, zeros.clone(), zeros)
    }

    pub fn grid(&self) -> &DiscreteGrid {
        &self.grid
    }

    pub fn n_agents(&self) -> usize {
        self.grid.n_agents()
    }

    pub fn decisions(&self) -> &[f64] {
        &self.d
    }

    pub fn decision(&self, profile: usize) -> f64 {
        self.d[profile]
    }

    pub fn a1(&self, i: usize) -> &[f64] {
        &self.a1[i]
    }

    pub fn a0(&self, i: usize) -> &[f64] {
        &self.a0[i]
    }

    /// Unconditional probability that agent `i` is verified at `profile`.
    pub fn verification(&self, i: usize, profile: usize) -> f64 {
        let d = self.d[profile];
        d * self.a1[i][profile] + (1.0 - d) * self.a0[i][profile]
    }

    pub fn with_verification(&self, a1: Vec<Vec<f64>>, a0: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.grid.clone(), self.d.clone(), a1, a0)
    }
}

pub fn interim(mech: &Mechanism, i: usize) -> InterimProfile {
    let grid = mech.grid();
    let mut decision = Vec::with_capacity(grid.n_types(i));
    let mut verification = Vec::with_capacity(grid.n_types(i));
    for k in 0..grid.n_types(i) {
        let mut dd = Accumulator::new();
        let mut vv = Accumulator::new();
        for (profile, f) in grid.slice(i, k) {
            dd.add(f * mech.decision(profile));
            vv.add(f * mech.verification(i, profile));
        }
        decision.push(dd.value().clamp(0.0, 1.0));
        verification.push(vv.value().clamp(0.0, 1.0));
    }
    InterimProfile { agent: i, decision, verification }
}

/// Worst-off types of one agent: the in-favor type with the lowest interim
/// decision and the against type with the highest.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstOff {
    /// `+∞` when the agent has no in-favor types.
    pub inf_plus: f64,
    /// `-∞` when the agent has no against types.
    pub sup_minus: f64,
    pub argmin_plus: Vec<usize>,
    pub argmax_minus: Vec<usize>,
}

fn worst_off_from(grid: &DiscreteGrid, i: usize, decision: &[f64]) -> WorstOff {
    let plus = grid.plus_types(i);
    let minus = grid.minus_types(i);
    let inf_plus = plus.iter().map(|&k| decision[k]).fold(f64::INFINITY, f64::min);
    let sup_minus = minus.iter().map(|&k| decision[k]).fold(f64::NEG_INFINITY, f64::max);
    WorstOff {
        inf_plus,
        sup_minus,
        argmin_plus: plus.into_iter().filter(|&k| decision[k] <= inf_plus + ENTRY_TOL).collect(),
        argmax_minus: minus.into_iter().filter(|&k| decision[k] >= sup_minus - ENTRY_TOL).collect(),
    }
}

pub fn worst_off(mech: &Mechanism, i: usize) -> WorstOff {
    worst_off_from(mech.grid(), i, &interim(mech, i).decision)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcStatus {
    Satisfied,
    Violated,
}

impl fmt::Display for IcStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IcStatus::Satisfied => "satisfied",
            IcStatus::Violated => "violated",
        })
    }
}

/// Which deviating part a constraint protects against: in-favor types
/// pretending to be someone else, or against types doing so.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

/// Worst slack of one (agent, reported type, side) constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackRow {
    pub agent: usize,
    pub type_index: usize,
    pub type_value: f64,
    pub side: Side,
    pub slack: f64,
}

/// A violated constraint: the worst-off true type gains by reporting `report`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub agent: usize,
    pub true_type: usize,
    pub report: usize,
    pub side: Side,
    pub slack: f64,
    /// Opponent profile index at which an ex-post constraint fails.
    pub others: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcReport {
    pub status: IcStatus,
    pub min_slack: f64,
    pub agent_slack: Vec<f64>,
    pub rows: Vec<SlackRow>,
    pub witnesses: Vec<Witness>,
}

impl IcReport {
    fn from_rows(n_agents: usize, rows: Vec<SlackRow>, witnesses: Vec<Witness>) -> Self {
        let mut agent_slack = vec![f64::INFINITY; n_agents];
        for r in &rows {
            agent_slack[r.agent] = agent_slack[r.agent].min(r.slack);
        }
        let min_slack = agent_slack.iter().copied().fold(f64::INFINITY, f64::min);
        let status = if min_slack >= -SLACK_TOL { IcStatus::Satisfied } else { IcStatus::Violated };
        Self { status, min_slack, agent_slack, rows, witnesses }
    }

    pub fn satisfied(&self) -> bool {
        self.status == IcStatus::Satisfied
    }

    pub fn slack(&self, agent: usize, type_index: usize, side: Side) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.agent == agent && r.type_index == type_index && r.side == side)
            .map(|r| r.slack)
    }
}

/// Bayesian incentive compatibility with detection probability `p`.
///
/// For every report `k` of agent `i`: the worst-off in-favor type must get
/// at least `E[d (1 - p a1)]` from truth-telling, and the worst-off against
/// type at most `E[d (1 - p a1) + p v]`, where `v` is unconditional
/// verification at the reported type.
pub fn check_bic(mech: &Mechanism, p: f64) -> IcReport {
    let grid = mech.grid();
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    for i in 0..grid.n_agents() {
        let profile = interim(mech, i);
        let worst = worst_off_from(grid, i, &profile.decision);
        for k in 0..grid.n_types(i) {
            let mut undetected = Accumulator::new();
            let mut caught = Accumulator::new();
            for (t, f) in grid.slice(i, k) {
                let d = mech.decision(t);
                undetected.add(f * d * (1.0 - p * mech.a1(i)[t]));
                caught.add(f * p * mech.verification(i, t));
            }
            let gain_plus = undetected.value();
            let gain_minus = gain_plus + caught.value();
            let value = grid.type_value(i, k);
            if worst.inf_plus.is_finite() {
                let slack = worst.inf_plus - gain_plus;
                rows.push(SlackRow { agent: i, type_index: k, type_value: value, side: Side::Plus, slack });
                if slack < -SLACK_TOL {
                    witnesses.push(Witness {
                        agent: i,
                        true_type: worst.argmin_plus[0],
                        report: k,
                        side: Side::Plus,
                        slack,
                        others: None,
                    });
                }
            }
            if worst.sup_minus.is_finite() {
                let slack = gain_minus - worst.sup_minus;
                rows.push(SlackRow { agent: i, type_index: k, type_value: value, side: Side::Minus, slack });
                if slack < -SLACK_TOL {
                    witnesses.push(Witness {
                        agent: i,
                        true_type: worst.argmax_minus[0],
                        report: k,
                        side: Side::Minus,
                        slack,
                        others: None,
                    });
                }
            }
        }
    }
    IcReport::from_rows(grid.n_agents(), rows, witnesses)
}

/// Ex-post incentive compatibility under perfect verification: the
/// Bayesian constraints must hold for every opponent profile separately.
pub fn check_epic(mech: &Mechanism) -> IcReport {
    let grid = mech.grid();
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    for i in 0..grid.n_agents() {
        let plus = grid.plus_types(i);
        let minus = grid.minus_types(i);
        let n_types = grid.n_types(i);
        let mut worst_plus = vec![(f64::INFINITY, 0usize, 0usize); n_types];
        let mut worst_minus = vec![(f64::INFINITY, 0usize, 0usize); n_types];
        for r in 0..grid.n_others(i) {
            let lowest = plus
                .iter()
                .map(|&k| (mech.decision(grid.join(i, k, r)), k))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let highest = minus
                .iter()
                .map(|&k| (mech.decision(grid.join(i, k, r)), k))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            for k in 0..n_types {
                let t = grid.join(i, k, r);
                let undetected = mech.decision(t) * (1.0 - mech.a1(i)[t]);
                if let Some((low, arg)) = lowest {
                    let slack = low - undetected;
                    if slack < worst_plus[k].0 {
                        worst_plus[k] = (slack, arg, r);
                    }
                }
                if let Some((high, arg)) = highest {
                    let slack = undetected + mech.verification(i, t) - high;
                    if slack < worst_minus[k].0 {
                        worst_minus[k] = (slack, arg, r);
                    }
                }
            }
        }
        for k in 0..n_types {
            let value = grid.type_value(i, k);
            for (side, present, (slack, arg, r)) in [
                (Side::Plus, !plus.is_empty(), worst_plus[k]),
                (Side::Minus, !minus.is_empty(), worst_minus[k]),
            ] {
                if !present {
                    continue;
                }
                rows.push(SlackRow { agent: i, type_index: k, type_value: value, side, slack });
                if slack < -SLACK_TOL {
                    witnesses.push(Witness { agent: i, true_type: arg, report: k, side, slack, others: Some(r) });
                }
            }
        }
    }
    IcReport::from_rows(grid.n_agents(), rows, witnesses)
}

/// Audit trail of a reporting scenario under voting with evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    /// Decision the reported profile would produce without penalties.
    pub decision_at_reports: bool,
    /// Agents verified because they were decisive at the reports.
    pub verified: Vec<usize>,
    /// Verified agents whose report differed from their true type.
    pub caught: Vec<usize>,
    pub penalty: bool,
    /// Final outcome: `true` means the policy is implemented.
    pub outcome: bool,
}

/// Plays out a full report vector against the true profile. A caught liar
/// receives the severest penalty: the outcome it opposes. Two or more caught
/// liars leave the outcome unspecified and are reported as an error.
pub fn replay_reports(params: &VweParams, specs: &[AgentSpec], truth: &[f64], reports: &[f64]) -> Result<Replay> {
    if params.p != 1.0 {
        return Err(Error::InvalidParams("replay needs perfect verification (p = 1)".into()));
    }
    if truth.len() != specs.len() || reports.len() != specs.len() {
        return Err(Error::InvalidMechanism("profile length does not match the number of agents".into()));
    }
    for (i, (&t, spec)) in truth.iter().zip(specs).enumerate() {
        if !spec.supports(t) {
            return Err(Error::OutOfSupport { agent: i, value: t });
        }
    }
    let decision_at_reports = decide(params, specs, reports)?;
    let mut verified = Vec::new();
    for i in 0..specs.len() {
        if is_decisive(params, specs, reports, i)? {
            verified.push(i);
        }
    }
    let caught: Vec<usize> = verified.iter().copied().filter(|&i| reports[i] != truth[i]).collect();
    let outcome = match caught.as_slice() {
        [] => decision_at_reports,
        [liar] => !specs[*liar].in_favor(truth[*liar]),
        _ => return Err(Error::MultipleLiarsCaught),
    };
    Ok(Replay { decision_at_reports, penalty: !caught.is_empty(), verified, caught, outcome })
}

/// Agent `deviator` reports `report` while everybody else tells the truth.
pub fn replay_deviation(
    params: &VweParams,
    specs: &[AgentSpec],
    truth: &[f64],
    deviator: usize,
    report: f64,
) -> Result<Replay> {
    if deviator >= specs.len() {
        return Err(Error::InvalidParams(format!("no agent {deviator}")));
    }
    let mut reports = truth.to_vec();
    reports[deviator] = report;
    replay_reports(params, specs, truth, &reports)
}

//! Voting with evidence: weight functions, the decision rule, decisiveness
//! and the induced verification rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incentives::Mechanism;
use crate::model::{AgentSpec, DiscreteGrid};

/// Weight parameters of one agent. Caps `nu_plus` / `nu_minus` only bind
/// under imperfect verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentWeights {
    pub omega_plus: f64,
    pub omega_minus: f64,
    #[serde(default = "pos_inf")]
    pub nu_plus: f64,
    #[serde(default = "neg_inf")]
    pub nu_minus: f64,
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

impl AgentWeights {
    pub fn new(omega_plus: f64, omega_minus: f64) -> Self {
        Self { omega_plus, omega_minus, nu_plus: f64::INFINITY, nu_minus: f64::NEG_INFINITY }
    }

    pub fn with_caps(mut self, nu_plus: f64, nu_minus: f64) -> Self {
        self.nu_plus = nu_plus;
        self.nu_minus = nu_minus;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VweParams {
    pub agents: Vec<AgentWeights>,
    /// Probability that verifying a false claim reveals the lie.
    pub p: f64,
}

impl VweParams {
    pub fn new(agents: Vec<AgentWeights>, p: f64) -> Result<Self> {
        let params = Self { agents, p };
        params.validate()?;
        Ok(params)
    }

    /// Perfect verification with uncapped weights.
    pub fn perfect(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(hi, lo)| AgentWeights::new(hi, lo)).collect(), 1.0)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidParams(format!("detection probability {} not in (0, 1]", self.p)));
        }
        for (i, w) in self.agents.iter().enumerate() {
            if !(w.omega_plus.is_finite() && w.omega_minus.is_finite()) {
                return Err(Error::InvalidParams(format!("agent {i}: plateau weights must be finite")));
            }
            if w.omega_minus > w.omega_plus {
                return Err(Error::InvalidParams(format!(
                    "agent {i}: omega_minus {} exceeds omega_plus {}",
                    w.omega_minus, w.omega_plus
                )));
            }
            if w.nu_plus.is_nan() || w.nu_minus.is_nan() {
                return Err(Error::InvalidParams(format!("agent {i}: caps must not be NaN")));
            }
            if w.nu_plus < w.omega_plus || w.nu_minus > w.omega_minus {
                return Err(Error::InvalidParams(format!(
                    "agent {i}: caps must lie outside the plateau weights"
                )));
            }
            if self.p == 1.0 && (w.nu_plus != f64::INFINITY || w.nu_minus != f64::NEG_INFINITY) {
                return Err(Error::InvalidParams(format!(
                    "agent {i}: caps are only allowed with imperfect verification"
                )));
            }
        }
        Ok(())
    }

    fn check_agents(&self, n: usize) -> Result<()> {
        if self.agents.len() != n {
            return Err(Error::InvalidParams(format!(
                "weights for {} agents but {n} agents given",
                self.agents.len()
            )));
        }
        Ok(())
    }
}

/// Verification cost charged to an agent's claim.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CostRule {
    /// The agent's own constant cost.
    #[default]
    Constant,
    /// One cost per support point of a discrete agent.
    PerType(Vec<f64>),
}

impl CostRule {
    pub fn validate(&self, agent: &AgentSpec) -> Result<()> {
        let CostRule::PerType(costs) = self else {
            return Ok(());
        };
        let dist = agent
            .discrete_dist()
            .ok_or_else(|| Error::InvalidAgent("per-type costs need a discrete agent".into()))?;
        if costs.len() != dist.len() {
            return Err(Error::InvalidAgent(format!(
                "{} per-type costs for {} types",
                costs.len(),
                dist.len()
            )));
        }
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidAgent("per-type costs must be finite and nonnegative".into()));
        }
        let values = dist.values();
        let mut last_plus = f64::NEG_INFINITY;
        let mut last_minus = f64::NEG_INFINITY;
        for (k, (&t, &c)) in values.iter().zip(costs).enumerate() {
            if agent.in_favor(t) {
                if t - c < last_plus {
                    return Err(Error::InvalidAgent(format!(
                        "net type t - c(t) decreases at in-favor type index {k}"
                    )));
                }
                last_plus = t - c;
            } else {
                if t + c < last_minus {
                    return Err(Error::InvalidAgent(format!(
                        "net type t + c(t) decreases at against type index {k}"
                    )));
                }
                last_minus = t + c;
            }
        }
        Ok(())
    }

    pub fn cost_at(&self, agent: &AgentSpec, t: f64) -> Result<f64> {
        match self {
            CostRule::Constant => Ok(agent.cost()),
            CostRule::PerType(costs) => {
                let k = agent
                    .discrete_dist()
                    .and_then(|d| d.index_of(t))
                    .ok_or(Error::OutOfSupport { agent: usize::MAX, value: t })?;
                Ok(costs[k])
            }
        }
    }
}

/// Weight from plateau/cap parameters and an already-resolved cost.
pub fn weight_value(w: &AgentWeights, p: f64, in_favor: bool, cost: f64, t: f64) -> f64 {
    let shift = cost / p;
    if in_favor {
        if t <= w.omega_plus + shift {
            w.omega_plus
        } else if t >= w.nu_plus + shift {
            w.nu_plus
        } else {
            (t - shift).max(w.omega_plus).min(w.nu_plus)
        }
    } else if t >= w.omega_minus - shift {
        w.omega_minus
    } else if t <= w.nu_minus - shift {
        w.nu_minus
    } else {
        (t + shift).min(w.omega_minus).max(w.nu_minus)
    }
}

/// Weight of agent `i` at type `t`.
pub fn weight(params: &VweParams, i: usize, agent: &AgentSpec, cost_rule: &CostRule, t: f64) -> Result<f64> {
    let w = params
        .agents
        .get(i)
        .ok_or_else(|| Error::InvalidParams(format!("no weights for agent {i}")))?;
    if !agent.supports(t) {
        return Err(Error::OutOfSupport { agent: i, value: t });
    }
    let cost = cost_rule.cost_at(agent, t).map_err(|_| Error::OutOfSupport { agent: i, value: t })?;
    Ok(weight_value(w, params.p, agent.in_favor(t), cost, t))
}

fn profile_weights(
    params: &VweParams,
    specs: &[AgentSpec],
    costs: Option<&[CostRule]>,
    profile: &[f64],
) -> Result<Vec<f64>> {
    params.check_agents(specs.len())?;
    if profile.len() != specs.len() {
        return Err(Error::InvalidMechanism(format!(
            "profile has {} entries for {} agents",
            profile.len(),
            specs.len()
        )));
    }
    let constant = CostRule::Constant;
    (0..specs.len())
        .map(|i| {
            let rule = costs.map_or(&constant, |c| &c[i]);
            weight(params, i, &specs[i], rule, profile[i])
        })
        .collect()
}

/// Sum of weights in agent order, optionally with one term replaced.
fn weight_sum(weights: &[f64], replace: Option<(usize, f64)>) -> f64 {
    let mut sum = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        sum += match replace {
            Some((i, v)) if i == j => v,
            _ => w,
        };
    }
    sum
}

fn decisive_from_weights(params: &VweParams, weights: &[f64], i: usize, in_favor: bool) -> bool {
    let decision = weight_sum(weights, None) > 0.0;
    if decision != in_favor {
        return false;
    }
    let plateau = if in_favor { params.agents[i].omega_plus } else { params.agents[i].omega_minus };
    let counterfactual = weight_sum(weights, Some((i, plateau))) > 0.0;
    counterfactual != decision
}

/// Implements the policy iff the weights sum to a strictly positive number.
pub fn decide(params: &VweParams, specs: &[AgentSpec], profile: &[f64]) -> Result<bool> {
    Ok(weight_sum(&profile_weights(params, specs, None, profile)?, None) > 0.0)
}

pub fn decide_with_costs(
    params: &VweParams,
    specs: &[AgentSpec],
    costs: &[CostRule],
    profile: &[f64],
) -> Result<bool> {
    Ok(weight_sum(&profile_weights(params, specs, Some(costs), profile)?, None) > 0.0)
}

/// Agent `i` is decisive when its preferred outcome is implemented and
/// dropping its weight to the plateau value would reverse the decision.
pub fn is_decisive(params: &VweParams, specs: &[AgentSpec], profile: &[f64], i: usize) -> Result<bool> {
    let weights = profile_weights(params, specs, None, profile)?;
    if i >= specs.len() {
        return Err(Error::InvalidParams(format!("no agent {i}")));
    }
    Ok(decisive_from_weights(params, &weights, i, specs[i].in_favor(profile[i])))
}

/// Tabulates voting with evidence over a grid: decisive agents are verified.
pub fn vwe_mechanism(params: &VweParams, grid: &DiscreteGrid) -> Result<Mechanism> {
    let costs = vec![CostRule::Constant; grid.n_agents()];
    vwe_mechanism_with_costs(params, grid, &costs)
}

pub fn vwe_mechanism_with_costs(params: &VweParams, grid: &DiscreteGrid, costs: &[CostRule]) -> Result<Mechanism> {
    params.validate()?;
    if params.p < 1.0 {
        return Err(Error::InvalidParams(
            "the voting-with-evidence table needs perfect verification (p = 1)".into(),
        ));
    }
    params.check_agents(grid.n_agents())?;
    if costs.len() != grid.n_agents() {
        return Err(Error::InvalidParams("one cost rule per agent is required".into()));
    }
    for (rule, agent) in costs.iter().zip(grid.agents()) {
        rule.validate(agent)?;
    }
    let n = grid.n_agents();
    let table: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let agent = grid.agent(i);
            (0..grid.n_types(i))
                .map(|k| {
                    let t = grid.type_value(i, k);
                    let c = costs[i].cost_at(agent, t)?;
                    Ok(weight_value(&params.agents[i], params.p, agent.in_favor(t), c, t))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut d = vec![0.0; grid.len()];
    let mut a1 = vec![vec![0.0; grid.len()]; n];
    let mut a0 = vec![vec![0.0; grid.len()]; n];
    let mut weights = vec![0.0; n];
    for profile in 0..grid.len() {
        for (i, w) in weights.iter_mut().enumerate() {
            *w = table[i][grid.type_index(profile, i)];
        }
        let decision = weight_sum(&weights, None) > 0.0;
        d[profile] = if decision { 1.0 } else { 0.0 };
        for i in 0..n {
            let in_favor = grid.in_favor(i, grid.type_index(profile, i));
            if decisive_from_weights(params, &weights, i, in_favor) {
                if in_favor {
                    a1[i][profile] = 1.0;
                } else {
                    a0[i][profile] = 1.0;
                }
            }
        }
    }
    Mechanism::new(grid.clone(), d, a1, a0)
}

//! Agents, type distributions, sign partitions and finite type grids.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numeric::{bisect_boundary, compensated_sum, integrate_unit};

const PROB_SUM_TOL: f64 = 1e-12;
const GRID_SUM_TOL: f64 = 1e-9;
/// Hard limit on the number of profiles a grid may enumerate.
pub const MAX_GRID_PROFILES: usize = 1 << 24;

/// How an agent's types split into supporters and opponents of the new policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRule {
    /// Types at or above the threshold are in favor; lower types are against.
    Threshold(f64),
    AlwaysInFavor,
    AlwaysAgainst,
}

impl SignRule {
    pub fn in_favor(&self, t: f64) -> bool {
        match *self {
            SignRule::Threshold(theta) => t >= theta,
            SignRule::AlwaysInFavor => true,
            SignRule::AlwaysAgainst => false,
        }
    }
}

/// A finite type distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDistribution("no support points".into()));
        }
        if values.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("type values must be finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "type values must be strictly increasing".into(),
            ));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidDistribution("probabilities must be positive".into()));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities do not sum to 1 (sum = {total})"
            )));
        }
        Ok(Self { values, probs })
    }

    /// Equal-probability distribution on the given support.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len().max(1);
        Self::new(values, vec![1.0 / n as f64; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == t)
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.values.iter().zip(&self.probs).map(|(v, p)| v * p))
    }
}

type QuantileFn = dyn Fn(f64) -> f64 + Send + Sync;
type PartialFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A continuous distribution given by its quantile function.
#[derive(Clone)]
pub struct ContinuousDist {
    name: String,
    quantile: Arc<QuantileFn>,
    density: Option<Arc<QuantileFn>>,
    partial: Option<Arc<PartialFn>>,
}

impl fmt::Debug for ContinuousDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousDist").field("name", &self.name).finish()
    }
}

impl ContinuousDist {
    /// Wraps a quantile function, probing it for monotonicity on a
    /// 1000-point grid of (0, 1).
    pub fn from_quantile<Q>(name: impl Into<String>, quantile: Q) -> Result<Self>
    where
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1000 {
            let u = (k as f64 + 0.5) / 1000.0;
            let q = quantile(u);
            if q.is_nan() {
                return Err(Error::InvalidDistribution(format!("{name}: quantile is NaN at {u}")));
            }
            if q < prev {
                return Err(Error::InvalidDistribution(format!(
                    "{name}: quantile decreases near u = {u}"
                )));
            }
            prev = q;
        }
        Ok(Self { name, quantile: Arc::new(quantile), density: None, partial: None })
    }

    pub fn with_density<D>(mut self, density: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.density = Some(Arc::new(density));
        self
    }

    /// Closed form for `∫_a^b Q(u) du`, replacing quadrature.
    fn with_partial<P>(mut self, partial: P) -> Self
    where
        P: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.partial = Some(Arc::new(partial));
        self
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::InvalidDistribution(format!(
                "uniform bounds must satisfy low < high, got [{low}, {high}]"
            )));
        }
        let width = high - low;
        Ok(Self::from_quantile(format!("uniform({low}, {high})"), move |u| low + width * u)?
            .with_density(move |t| if (low..=high).contains(&t) { 1.0 / width } else { 0.0 })
            .with_partial(move |a, b| low * (b - a) + 0.5 * width * (b * b - a * a)))
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        let dist = Normal::new(mean, sd)
            .map_err(|e| Error::InvalidDistribution(format!("normal({mean}, {sd}): {e}")))?;
        // ∫ Q = μ(b − a) − σ(φ(z_b) − φ(z_a)), with φ(z) = 0 at u = 0 and 1
        let std_pdf = move |u: f64| {
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            let z = (dist.inverse_cdf(u) - mean) / sd;
            (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
        };
        Ok(Self::from_quantile(format!("normal({mean}, {sd})"), move |u| dist.inverse_cdf(u))?
            .with_density(move |t| statrs::distribution::Continuous::pdf(&dist, t))
            .with_partial(move |a, b| mean * (b - a) - sd * (std_pdf(b) - std_pdf(a))))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn quantile(&self, u: f64) -> f64 {
        (self.quantile)(u)
    }

    pub fn density(&self, t: f64) -> Option<f64> {
        self.density.as_ref().map(|d| d(t))
    }

    /// P(T < t), recovered from the quantile function by bisection.
    pub fn cdf_below(&self, t: f64) -> f64 {
        bisect_boundary(|u| u <= 0.0 || self.quantile(u) < t, 0.0, 1.0, 1e-15)
    }

    /// ∫_a^b Q(u) du for 0 ≤ a ≤ b ≤ 1.
    pub fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if let Some(partial) = &self.partial {
            return partial(a, b);
        }
        integrate_unit(|u| self.quantile(u), a, b)
    }
}

#[derive(Debug, Clone)]
pub enum Distribution {
    Discrete(DiscreteDist),
    Continuous(ContinuousDist),
}

/// One agent: type distribution, verification cost and sign partition.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    distribution: Distribution,
    cost: f64,
    sign_rule: SignRule,
}

fn check_cost(cost: f64) -> Result<()> {
    if !cost.is_finite() {
        return Err(Error::InvalidAgent("verification cost must be finite".into()));
    }
    if cost < 0.0 {
        return Err(Error::InvalidAgent(format!("negative verification cost {cost}")));
    }
    Ok(())
}

fn check_sign_rule(rule: SignRule) -> Result<()> {
    if let SignRule::Threshold(theta) = rule {
        if !theta.is_finite() {
            return Err(Error::InvalidAgent("sign threshold must be finite".into()));
        }
    }
    Ok(())
}

impl AgentSpec {
    pub fn discrete(dist: DiscreteDist, sign_rule: SignRule, cost: f64) -> Result<Self> {
        check_cost(cost)?;
        check_sign_rule(sign_rule)?;
        Ok(Self { distribution: Distribution::Discrete(dist), cost, sign_rule })
    }

    pub fn continuous(dist: ContinuousDist, sign_rule: SignRule, cost: f64) -> Result<Self> {
        check_cost(cost)?;
        check_sign_rule(sign_rule)?;
        Ok(Self { distribution: Distribution::Continuous(dist), cost, sign_rule })
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn discrete_dist(&self) -> Option<&DiscreteDist> {
        match &self.distribution {
            Distribution::Discrete(d) => Some(d),
            Distribution::Continuous(_) => None,
        }
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn sign_rule(&self) -> SignRule {
        self.sign_rule
    }

    pub fn in_favor(&self, t: f64) -> bool {
        self.sign_rule.in_favor(t)
    }

    pub fn with_cost(&self, cost: f64) -> Result<Self> {
        check_cost(cost)?;
        Ok(Self { cost, ..self.clone() })
    }

    /// Whether `t` is a possible type of this agent.
    pub fn supports(&self, t: f64) -> bool {
        match &self.distribution {
            Distribution::Discrete(d) => d.index_of(t).is_some(),
            Distribution::Continuous(_) => t.is_finite(),
        }
    }

    /// Probability mass of the in-favor and against parts.
    pub fn part_masses(&self) -> (f64, f64) {
        match &self.distribution {
            Distribution::Discrete(d) => {
                let plus = compensated_sum(
                    d.values().iter().zip(d.probs()).filter(|(v, _)| self.in_favor(**v)).map(|(_, p)| *p),
                );
                let minus = compensated_sum(
                    d.values().iter().zip(d.probs()).filter(|(v, _)| !self.in_favor(**v)).map(|(_, p)| *p),
                );
                (plus, minus)
            }
            Distribution::Continuous(c) => {
                let below = self.against_quantile_mass(c);
                (1.0 - below, below)
            }
        }
    }

    fn against_quantile_mass(&self, c: &ContinuousDist) -> f64 {
        match self.sign_rule {
            SignRule::AlwaysInFavor => 0.0,
            SignRule::AlwaysAgainst => 1.0,
            SignRule::Threshold(theta) => c.cdf_below(theta),
        }
    }
}

/// Builds a validated agent with a finite type distribution.
pub fn make_discrete_agent(
    values: Vec<f64>,
    probs: Vec<f64>,
    sign_rule: SignRule,
    cost: f64,
) -> Result<AgentSpec> {
    let dist = DiscreteDist::new(values, probs)?;
    AgentSpec::discrete(dist, sign_rule, cost)
}

/// Replaces a continuous agent by `2^n` equal-probability quantile bins on
/// each side of its sign partition. Each bin is represented by its
/// conditional mean and carries its unconditional probability mass.
pub fn discretize(agent: &AgentSpec, n: u32) -> Result<AgentSpec> {
    if n < 1 {
        return Err(Error::InvalidDistribution("discretization level must be at least 1".into()));
    }
    if n > 20 {
        return Err(Error::InvalidDistribution(format!("discretization level {n} is too fine")));
    }
    let dist = match agent.distribution() {
        Distribution::Continuous(c) => c,
        Distribution::Discrete(_) => {
            return Err(Error::InvalidDistribution("discretize needs a continuous distribution".into()))
        }
    };
    let split = agent.against_quantile_mass(dist);
    let bins = 1usize << n;
    let mut values = Vec::with_capacity(2 * bins);
    let mut probs = Vec::with_capacity(2 * bins);
    for (lo, hi) in [(0.0, split), (split, 1.0)] {
        let mass = hi - lo;
        if mass <= 0.0 {
            continue;
        }
        for k in 0..bins {
            let a = lo + mass * k as f64 / bins as f64;
            let b = if k + 1 == bins { hi } else { lo + mass * (k + 1) as f64 / bins as f64 };
            let width = b - a;
            if width <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "{}: empty quantile bin",
                    dist.name()
                )));
            }
            let mean = dist.partial_expectation(a, b) / width;
            if !mean.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "{}: quantile integral diverges on [{a}, {b}]",
                    dist.name()
                )));
            }
            values.push(mean);
            probs.push(width);
        }
    }
    // sign of each bin comes from its part, so pin bins on the threshold
    // to the side they were drawn from
    if let SignRule::Threshold(theta) = agent.sign_rule() {
        let n_minus = if split > 0.0 { bins } else { 0 };
        for (k, v) in values.iter_mut().enumerate() {
            if k < n_minus && *v >= theta {
                *v = theta.next_down();
            }
            if k >= n_minus && *v < theta {
                *v = theta;
            }
        }
    }
    let total = compensated_sum(probs.iter().copied());
    for p in &mut probs {
        *p /= total;
    }
    let dist = DiscreteDist::new(values, probs)?;
    AgentSpec::discrete(dist, agent.sign_rule(), agent.cost())
}

/// Public-good embedding: an agent valuing the good at `v_i` has type
/// `v_i - k / I` and is always in favor of provision.
pub fn public_good_embedding(
    valuations: &[f64],
    provision_cost: f64,
    n_agents: usize,
) -> Result<Vec<(f64, SignRule)>> {
    if n_agents == 0 {
        return Err(Error::InvalidAgent("public good needs at least one agent".into()));
    }
    if valuations.len() != n_agents {
        return Err(Error::InvalidAgent(format!(
            "{} valuations for {n_agents} agents",
            valuations.len()
        )));
    }
    let share = provision_cost / n_agents as f64;
    Ok(valuations.iter().map(|v| (v - share, SignRule::AlwaysInFavor)).collect())
}

/// Finite product type space with independent marginals.
///
/// Profiles are indexed in row-major order: agent 0 is the most significant
/// digit and the last agent varies fastest.
#[derive(Debug, Clone)]
pub struct DiscreteGrid {
    agents: Vec<AgentSpec>,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<f64>,
}

impl DiscreteGrid {
    pub fn new(agents: Vec<AgentSpec>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidAgent("a grid needs at least one agent".into()));
        }
        let mut sizes = Vec::with_capacity(agents.len());
        for (i, a) in agents.iter().enumerate() {
            match a.discrete_dist() {
                Some(d) => sizes.push(d.len()),
                None => {
                    return Err(Error::InvalidAgent(format!(
                        "agent {i} has a continuous distribution; discretize it first"
                    )))
                }
            }
        }
        let mut total: usize = 1;
        for &s in &sizes {
            total = total.checked_mul(s).filter(|&t| t <= MAX_GRID_PROFILES).ok_or(
                Error::GridTooLarge { profiles: usize::MAX, cap: MAX_GRID_PROFILES },
            )?;
        }
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let mut grid = Self { agents, sizes, strides, probs: Vec::new() };
        grid.probs = (0..total)
            .map(|p| (0..grid.n_agents()).map(|i| grid.type_prob(i, grid.type_index(p, i))).product())
            .collect();
        let sum = compensated_sum(grid.probs.iter().copied());
        if (sum - 1.0).abs() > GRID_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("joint probabilities sum to {sum}")));
        }
        Ok(grid)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &AgentSpec {
        &self.agents[i]
    }

    pub fn dist(&self, i: usize) -> &DiscreteDist {
        self.agents[i].discrete_dist().expect("grid agents are discrete")
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_types(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn type_value(&self, i: usize, k: usize) -> f64 {
        self.dist(i).values()[k]
    }

    pub fn type_prob(&self, i: usize, k: usize) -> f64 {
        self.dist(i).probs()[k]
    }

    pub fn in_favor(&self, i: usize, k: usize) -> bool {
        self.agents[i].in_favor(self.type_value(i, k))
    }

    /// Type indices of agent `i` that are in favor of the policy.
    pub fn plus_types(&self, i: usize) -> Vec<usize> {
        (0..self.sizes[i]).filter(|&k| self.in_favor(i, k)).collect()
    }

    pub fn minus_types(&self, i: usize) -> Vec<usize> {
        (0..self.sizes[i]).filter(|&k| !self.in_favor(i, k)).collect()
    }

    pub fn prob(&self, profile: usize) -> f64 {
        self.probs[profile]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn type_index(&self, profile: usize, i: usize) -> usize {
        (profile / self.strides[i]) % self.sizes[i]
    }

    pub fn profile_types(&self, profile: usize) -> Vec<usize> {
        (0..self.n_agents()).map(|i| self.type_index(profile, i)).collect()
    }

    pub fn profile_values(&self, profile: usize) -> Vec<f64> {
        (0..self.n_agents()).map(|i| self.type_value(i, self.type_index(profile, i))).collect()
    }

    pub fn index_of(&self, types: &[usize]) -> usize {
        types.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// Profile index for a vector of type values, if every value is on the grid.
    pub fn index_of_values(&self, values: &[f64]) -> Result<usize> {
        if values.len() != self.n_agents() {
            return Err(Error::InvalidMechanism(format!(
                "profile has {} entries for {} agents",
                values.len(),
                self.n_agents()
            )));
        }
        let mut idx = 0;
        for (i, &v) in values.iter().enumerate() {
            let k = self.dist(i).index_of(v).ok_or(Error::OutOfSupport { agent: i, value: v })?;
            idx += k * self.strides[i];
        }
        Ok(idx)
    }

    /// Same profile with agent `i` switched to type `k`.
    pub fn with_type(&self, profile: usize, i: usize, k: usize) -> usize {
        let current = self.type_index(profile, i);
        profile - current * self.strides[i] + k * self.strides[i]
    }

    /// Number of opponent profiles `t_{-i}`.
    pub fn n_others(&self, i: usize) -> usize {
        self.len() / self.sizes[i]
    }

    /// Profile index for agent `i` at type `k` and the `r`-th opponent profile.
    pub fn join(&self, i: usize, k: usize, r: usize) -> usize {
        let stride = self.strides[i];
        let high = r / stride;
        let low = r % stride;
        high * stride * self.sizes[i] + k * stride + low
    }

    /// Index of the opponent profile of `profile` with respect to agent `i`.
    pub fn others_index(&self, profile: usize, i: usize) -> usize {
        let stride = self.strides[i];
        let high = profile / (stride * self.sizes[i]);
        high * stride + profile % stride
    }

    /// Probability of the `r`-th opponent profile of agent `i`.
    pub fn others_prob(&self, i: usize, r: usize) -> f64 {
        let p = self.join(i, 0, r);
        (0..self.n_agents())
            .filter(|&j| j != i)
            .map(|j| self.type_prob(j, self.type_index(p, j)))
            .product()
    }

    /// Iterates `(profile, f_{-i}(t_{-i}))` over all profiles where agent `i`
    /// has type `k`.
    pub fn slice(&self, i: usize, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n_others(i)).map(move |r| (self.join(i, k, r), self.others_prob(i, r)))
    }
}

/// Interim decision and verification probabilities of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct InterimProfile {
    pub agent: usize,
    pub decision: Vec<f64>,
    pub verification: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn builds_two_point_agent() {
        let a = make_discrete_agent(vec![-1.0, 1.0], vec![0.5, 0.5], SignRule::Threshold(0.0), 0.1)
            .unwrap();
        assert!(!a.in_favor(-1.0));
        assert!(a.in_favor(1.0));
        assert_eq!(a.part_masses(), (0.5, 0.5));
    }

    #[test]
    fn rejects_bad_probabilities() {
        let err = make_discrete_agent(vec![-1.0, 1.0], vec![0.5, 0.6], SignRule::Threshold(0.0), 0.1)
            .unwrap_err();
        assert!(err.to_string().contains("probabilities do not sum to 1"), "{err}");
    }

    #[test]
    fn rejects_negative_cost() {
        let err = make_discrete_agent(vec![-1.0, 1.0], vec![0.5, 0.5], SignRule::Threshold(0.0), -0.1)
            .unwrap_err();
        assert!(err.to_string().contains("negative verification cost"), "{err}");
    }

    #[test]
    fn rejects_non_monotone_values() {
        assert!(make_discrete_agent(vec![1.0, -1.0], vec![0.5, 0.5], SignRule::AlwaysInFavor, 0.0)
            .is_err());
        assert!(make_discrete_agent(vec![1.0, 1.0], vec![0.5, 0.5], SignRule::AlwaysInFavor, 0.0)
            .is_err());
    }

    #[test]
    fn threshold_ties_go_to_in_favor() {
        let a = make_discrete_agent(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25], SignRule::Threshold(0.0), 0.0)
            .unwrap();
        assert!(a.in_favor(0.0));
    }

    #[test]
    fn discretize_uniform_all_in_favor() {
        let a = AgentSpec::continuous(ContinuousDist::uniform(0.0, 1.0).unwrap(), SignRule::AlwaysInFavor, 0.0)
            .unwrap();
        let d = discretize(&a, 1).unwrap();
        let dist = d.discrete_dist().unwrap();
        assert!(near(dist.values()[0], 0.25, 1e-12) && near(dist.values()[1], 0.75, 1e-12));
        assert!(near(dist.probs()[0], 0.5, 1e-12) && near(dist.probs()[1], 0.5, 1e-12));
    }

    #[test]
    fn discretize_symmetric_uniform_with_threshold() {
        let a = AgentSpec::continuous(ContinuousDist::uniform(-1.0, 1.0).unwrap(), SignRule::Threshold(0.0), 0.1)
            .unwrap();
        let d = discretize(&a, 1).unwrap();
        let dist = d.discrete_dist().unwrap();
        for (v, e) in dist.values().iter().zip([-0.75, -0.25, 0.25, 0.75]) {
            assert!(near(*v, e, 1e-12), "{v} vs {e}");
        }
        assert!(dist.probs().iter().all(|p| near(*p, 0.25, 1e-12)));
        assert_eq!(d.cost(), 0.1);
    }

    #[test]
    fn discretize_rejects_level_zero() {
        let a = AgentSpec::continuous(ContinuousDist::uniform(0.0, 1.0).unwrap(), SignRule::AlwaysInFavor, 0.0)
            .unwrap();
        assert!(discretize(&a, 0).is_err());
    }

    #[test]
    fn quantile_probe_rejects_decreasing_functions() {
        assert!(ContinuousDist::from_quantile("bad", |u| -u).is_err());
    }

    #[test]
    fn public_good_types() {
        let t = public_good_embedding(&[2.0, 2.0], 3.0, 2).unwrap();
        assert_eq!(t.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0.5, 0.5]);
        let t = public_good_embedding(&[1.0], 0.0, 1).unwrap();
        assert_eq!(t[0], (1.0, SignRule::AlwaysInFavor));
        let t = public_good_embedding(&[0.2, 0.4, 0.6], 1.2, 3).unwrap();
        for ((v, s), e) in t.iter().zip([-0.2, 0.0, 0.2]) {
            assert!(near(*v, e, 1e-15));
            assert_eq!(*s, SignRule::AlwaysInFavor);
        }
        assert!(public_good_embedding(&[], 1.0, 0).is_err());
    }

    #[test]
    fn grid_indexing_round_trips() {
        let a = make_discrete_agent(vec![0.0, 1.0, 2.0], vec![0.2, 0.3, 0.5], SignRule::AlwaysInFavor, 0.0).unwrap();
        let b = make_discrete_agent(vec![-1.0, 1.0], vec![0.4, 0.6], SignRule::Threshold(0.0), 0.0).unwrap();
        let g = DiscreteGrid::new(vec![a, b]).unwrap();
        assert_eq!(g.len(), 6);
        for p in 0..g.len() {
            assert_eq!(g.index_of(&g.profile_types(p)), p);
            let i = 1;
            let r = g.others_index(p, i);
            assert_eq!(g.join(i, g.type_index(p, i), r), p);
        }
        assert!((g.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let slice: Vec<_> = g.slice(0, 2).collect();
        assert_eq!(slice.len(), 2);
        assert!((slice.iter().map(|s| s.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_continuous_agents() {
        let a = AgentSpec::continuous(ContinuousDist::uniform(0.0, 1.0).unwrap(), SignRule::AlwaysInFavor, 0.0)
            .unwrap();
        assert!(DiscreteGrid::new(vec![a]).is_err());
    }
}

use crate::error::{Error, Result};
use crate::model::{AgentSpec, SignRule};
use crate::numeric::{bisect_root, seeded_max};

/// Cost of providing the public good with probability `d`.
pub trait CostFunctional {
    fn cost(&self, d: f64) -> f64;
    fn marginal(&self, d: f64) -> f64;
}

/// `C(d) = scale · (−d − ln(1 − d))`, with `C'(d) = scale · d / (1 − d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBarrierCost {
    pub scale: f64,
}

impl Default for LogBarrierCost {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl CostFunctional for LogBarrierCost {
    fn cost(&self, d: f64) -> f64 {
        self.scale * (-d - (-d).ln_1p())
    }

    fn marginal(&self, d: f64) -> f64 {
        self.scale * d / (1.0 - d)
    }
}

/// Probes a cost functional: zero cost and marginal at 0, nondecreasing
/// marginal, and a blow-up near full provision.
pub fn validate_cost_functional(cost: &dyn CostFunctional) -> Result<()> {
    let bad = |msg: &str| Err(Error::InvalidParams(format!("cost functional: {msg}")));
    if cost.cost(0.0).abs() > 1e-12 {
        return bad("C(0) must be 0");
    }
    if cost.marginal(0.0).abs() > 1e-12 {
        return bad("C'(0) must be 0");
    }
    let mut last = f64::NEG_INFINITY;
    for k in 0..=1000 {
        let d = k as f64 / 1000.0 * (1.0 - 1e-6);
        let m = cost.marginal(d);
        if !m.is_finite() || m < last - 1e-12 {
            return bad("C' must be finite and nondecreasing on [0, 1)");
        }
        last = m;
    }
    let mut prev = cost.cost(0.0);
    for k in 1..=6 {
        let v = cost.cost(1.0 - 10f64.powi(-k));
        if !(v > prev) {
            return bad("C must increase toward 1");
        }
        prev = v;
    }
    if prev < 10.0 {
        return bad("C must grow without bound as d approaches 1");
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublicGoodSolution {
    pub types: Vec<f64>,
    pub probs: Vec<f64>,
    /// Provision probability per type.
    pub schedule: Vec<f64>,
    /// Lowest provision probability; types below the interior region are
    /// bunched here.
    pub min_decision: f64,
    /// Verification probability `1 − m / d` per type.
    pub verification: Vec<f64>,
    /// Provision without verification costs: `C'(d) = t` (or 0).
    pub first_best: Vec<f64>,
    /// `t − c m / d² − C'(d)` at interior types, 0 at bunched types.
    pub foc_residuals: Vec<f64>,
    pub interior: Vec<bool>,
    pub value: f64,
}

const D_MAX: f64 = 1.0 - 1e-12;
const INNER_SEEDS: usize = 64;
const OUTER_SEEDS: usize = 64;
const INTERIOR_GAP: f64 = 1e-9;

fn first_best(cost: &dyn CostFunctional, t: f64) -> f64 {
    if t <= cost.marginal(0.0) {
        return 0.0;
    }
    bisect_root(|d| t - cost.marginal(d), 0.0, D_MAX, 1e-15).unwrap_or(D_MAX)
}

/// Best provision probability for type `t` given the floor `m`.
fn inner(cost: &dyn CostFunctional, c: f64, t: f64, m: f64) -> f64 {
    let phi = |d: f64| t * d - c * (1.0 - m / d) - cost.cost(d);
    let slope = |d: f64| t - c * m / (d * d) - cost.marginal(d);
    let d = seeded_max(phi, m, D_MAX, INNER_SEEDS, 1e-13);
    if d <= m + INTERIOR_GAP {
        return m;
    }
    // polish on the first-order condition inside a sign-changing bracket
    let mut step = 1e-6_f64.max(1e-3 * (d - m));
    for _ in 0..60 {
        let lo = (d - step).max(m);
        let hi = (d + step).min(D_MAX);
        if slope(lo) >= 0.0 && slope(hi) <= 0.0 {
            let root = bisect_root(slope, lo, hi, 1e-16).unwrap_or(d);
            return if phi(root) >= phi(d) - 1e-15 { root } else { d };
        }
        step *= 2.0;
    }
    d
}

/// One agent, always in favor, provision cost `C`: chooses a provision
/// schedule and its floor `m`, verifying with probability `1 − m/d`.
///
/// For fixed `m`, each type maximizes `t d − c (1 − m/d) − C(d)` over
/// `d ∈ [m, 1)`; the floor is then chosen to maximize the expected value.
pub fn solve_public_good(agent: &AgentSpec, cost: &dyn CostFunctional, c: f64) -> Result<PublicGoodSolution> {
    validate_cost_functional(cost)?;
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParams(format!("verification cost {c} must be nonnegative")));
    }
    if agent.sign_rule() != SignRule::AlwaysInFavor {
        return Err(Error::InvalidAgent("the public-good agent must always be in favor".into()));
    }
    let dist = agent
        .discrete_dist()
        .ok_or_else(|| Error::InvalidAgent("the public-good agent needs a discrete distribution".into()))?;
    let types = dist.values().to_vec();
    let probs = dist.probs().to_vec();
    let first: Vec<f64> = types.iter().map(|&t| first_best(cost, t)).collect();

    let expected = |m: f64| -> f64 {
        types
            .iter()
            .zip(&probs)
            .map(|(&t, &f)| {
                let d = inner(cost, c, t, m);
                f * (t * d - c * (1.0 - m / d) - cost.cost(d))
            })
            .sum()
    };
    let (schedule, m) = if c == 0.0 {
        let m = first.iter().copied().fold(f64::INFINITY, f64::min);
        (first.clone(), m)
    } else {
        let m = seeded_max(expected, 1e-9, D_MAX, OUTER_SEEDS, 1e-12);
        (types.iter().map(|&t| inner(cost, c, t, m)).collect::<Vec<f64>>(), m)
    };
    let m = if c == 0.0 { m } else { schedule.iter().copied().fold(f64::INFINITY, f64::min).max(m) };
    let interior: Vec<bool> = schedule.iter().map(|&d| d > m + INTERIOR_GAP).collect();
    let foc_residuals = types
        .iter()
        .zip(&schedule)
        .zip(&interior)
        .map(|((&t, &d), &inside)| if inside { t - c * m / (d * d) - cost.marginal(d) } else { 0.0 })
        .collect();
    let verification = schedule.iter().map(|&d| if d > 0.0 { (1.0 - m / d).max(0.0) } else { 0.0 }).collect();
    let value = types
        .iter()
        .zip(&probs)
        .zip(&schedule)
        .map(|((&t, &f), &d)| {
            let audit = if d > 0.0 { c * (1.0 - m / d) } else { 0.0 };
            f * (t * d - audit - cost.cost(d))
        })
        .sum();
    Ok(PublicGoodSolution {
        types,
        probs,
        schedule,
        min_decision: m,
        verification,
        first_best: first,
        foc_residuals,
        interior,
        value,
    })
}

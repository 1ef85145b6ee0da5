//! Experiment config: a TOML file, validated in full before anything runs.
//! Every error names the key it came from, e.g. `agents[0].probs`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vwe_core::equivalence::MAX_REARRANGE_AGENTS;
use vwe_core::model::{discretize, AgentSpec, ContinuousDist, DiscreteDist, DiscreteGrid, SignRule};
use vwe_core::{AgentWeights, Mechanism, VweParams};

use crate::error::CliError;

const MAX_BINS: u32 = 12;
const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Evaluate,
    Check,
    Solve,
    EpicTransform,
    Sweep,
    PublicGood,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Evaluate => "evaluate",
            Task::Check => "check",
            Task::Solve => "solve",
            Task::EpicTransform => "epic-transform",
            Task::Sweep => "sweep",
            Task::PublicGood => "public-good",
        }
    }

    fn uses_mechanism(self) -> bool {
        matches!(self, Task::Evaluate | Task::Check | Task::EpicTransform)
    }

    fn samples(self) -> bool {
        matches!(self, Task::Evaluate | Task::Solve | Task::EpicTransform)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task: Task,
    #[serde(default = "one")]
    p: f64,
    seed: Option<u64>,
    samples: Option<usize>,
    bins: Option<u32>,
    output: Option<PathBuf>,
    constraints: Option<Constraints>,
    agents: Vec<RawAgent>,
    mechanism: Option<RawMechanism>,
    sweep: Option<RawSweep>,
    public_good: Option<RawPublicGood>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    values: Option<Vec<f64>>,
    probs: Option<Vec<f64>>,
    distribution: Option<RawDistribution>,
    sign: SignRule,
    #[serde(default)]
    cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawDistribution {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
}

/// Plateau weights as written in configs; caps are optional.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub omega_plus: f64,
    pub omega_minus: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_minus: Option<f64>,
}

impl WeightConfig {
    pub fn from_weights(w: &AgentWeights) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Self { omega_plus: w.omega_plus, omega_minus: w.omega_minus, nu_plus: finite(w.nu_plus), nu_minus: finite(w.nu_minus) }
    }

    fn weights(&self) -> AgentWeights {
        AgentWeights::new(self.omega_plus, self.omega_minus)
            .with_caps(self.nu_plus.unwrap_or(f64::INFINITY), self.nu_minus.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawMechanism {
    Vwe {
        weights: Vec<WeightConfig>,
    },
    Table {
        decisions: Vec<f64>,
        verification: Option<VerificationMode>,
        a1: Option<Vec<Vec<f64>>>,
        a0: Option<Vec<Vec<f64>>>,
    },
    Solve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerificationMode {
    None,
    Binding,
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraints {
    Bic,
    Epic,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    Cost,
    P,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Cost => "cost",
            SweepVariable::P => "p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepWeights {
    TwoAgent,
    Fitted,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: SweepVariable,
    agent: Option<usize>,
    from: f64,
    to: f64,
    step: f64,
    weights: Option<SweepWeights>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPublicGood {
    cost_scale: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

pub enum MechanismSpec {
    Vwe(VweParams),
    Table { mech: Mechanism, verification: VerificationMode },
    Solve,
}

pub struct Sweep {
    pub variable: SweepVariable,
    /// Agent whose cost moves; all agents when `None`.
    pub agent: Option<usize>,
    pub points: Vec<f64>,
    pub weights: SweepWeights,
}

/// A validated experiment, ready to run.
pub struct Experiment {
    pub task: Task,
    pub p: f64,
    pub seed: Option<u64>,
    pub samples: usize,
    pub output: PathBuf,
    /// Agents as configured; continuous ones keep their distribution.
    pub specs: Vec<AgentSpec>,
    /// Grid of the finite (or discretized) agents.
    pub grid: DiscreteGrid,
    pub mechanism: Option<MechanismSpec>,
    pub constraints: Constraints,
    pub sweep: Option<Sweep>,
    pub cost_scale: f64,
}

fn not_used(key: &str, task: Task) -> CliError {
    CliError::config(key, format!("not used by task {}", task.name()))
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input { path: path.to_path_buf(), message: e.to_string() })?;
    let raw = parse(&text)?;
    let default_out = path.with_extension("csv");
    build(raw, overrides, default_out)
}

fn parse(text: &str) -> Result<RawConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| {
        let line = e.span().map(|r| text[..r.start.min(text.len())].matches('\n').count() + 1);
        let key = line.map_or("<file>".to_string(), |l| format!("<file> line {l}"));
        CliError::config(key, e.message())
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { "<file>".to_string() } else { key };
        CliError::config(key, e.inner().message())
    })
}

fn build_agent(i: usize, raw: &RawAgent) -> Result<AgentSpec, CliError> {
    let key = |field: &str| format!("agents[{i}].{field}");
    if let SignRule::Threshold(theta) = raw.sign {
        if !theta.is_finite() {
            return Err(CliError::config(key("sign"), "threshold must be finite"));
        }
    }
    if !(raw.cost.is_finite() && raw.cost >= 0.0) {
        return Err(CliError::config(key("cost"), format!("must be finite and nonnegative, got {}", raw.cost)));
    }
    match (&raw.values, &raw.distribution) {
        (Some(values), None) => {
            DiscreteDist::uniform(values.clone()).map_err(|e| CliError::config(key("values"), e))?;
            let probs = match &raw.probs {
                Some(probs) => probs.clone(),
                None => vec![1.0 / values.len() as f64; values.len()],
            };
            let dist = DiscreteDist::new(values.clone(), probs).map_err(|e| CliError::config(key("probs"), e))?;
            AgentSpec::discrete(dist, raw.sign, raw.cost).map_err(|e| CliError::config(format!("agents[{i}]"), e))
        }
        (None, Some(dist)) => {
            if raw.probs.is_some() {
                return Err(CliError::config(key("probs"), "only allowed with explicit values"));
            }
            let dist = match *dist {
                RawDistribution::Uniform { low, high } => ContinuousDist::uniform(low, high),
                RawDistribution::Normal { mean, sd } => ContinuousDist::normal(mean, sd),
            }
            .map_err(|e| CliError::config(key("distribution"), e))?;
            AgentSpec::continuous(dist, raw.sign, raw.cost).map_err(|e| CliError::config(format!("agents[{i}]"), e))
        }
        (Some(_), Some(_)) => Err(CliError::config(format!("agents[{i}]"), "give either values or distribution, not both")),
        (None, None) => Err(CliError::config(format!("agents[{i}]"), "needs values or a distribution")),
    }
}

fn check_table(key: &str, table: &[Vec<f64>], agents: usize, profiles: usize) -> Result<(), CliError> {
    if table.len() != agents {
        return Err(CliError::config(key, format!("{} rows for {agents} agents", table.len())));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != profiles {
            return Err(CliError::config(format!("{key}[{i}]"), format!("{} entries for {profiles} profiles", row.len())));
        }
        if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(CliError::config(format!("{key}[{i}]"), format!("probability {x} outside [0, 1]")));
        }
    }
    Ok(())
}

fn build_mechanism(raw: RawMechanism, grid: &DiscreteGrid, p: f64) -> Result<MechanismSpec, CliError> {
    match raw {
        RawMechanism::Vwe { weights } => {
            if weights.len() != grid.n_agents() {
                return Err(CliError::config(
                    "mechanism.weights",
                    format!("{} entries for {} agents", weights.len(), grid.n_agents()),
                ));
            }
            let params = VweParams::new(weights.iter().map(WeightConfig::weights).collect(), p)
                .map_err(|e| CliError::config("mechanism.weights", e))?;
            Ok(MechanismSpec::Vwe(params))
        }
        RawMechanism::Table { decisions, verification, a1, a0 } => {
            if decisions.len() != grid.len() {
                return Err(CliError::config(
                    "mechanism.decisions",
                    format!("{} entries for {} profiles", decisions.len(), grid.len()),
                ));
            }
            let explicit = a1.is_some() || a0.is_some();
            let mode = verification.unwrap_or(VerificationMode::None);
            if explicit && mode != VerificationMode::None {
                return Err(CliError::config("mechanism.verification", "conflicts with explicit a1/a0 tables"));
            }
            if mode == VerificationMode::Pointwise && p != 1.0 {
                return Err(CliError::config("mechanism.verification", "pointwise verification assumes p = 1"));
            }
            let zeros = || vec![vec![0.0; grid.len()]; grid.n_agents()];
            let a1 = a1.unwrap_or_else(zeros);
            let a0 = a0.unwrap_or_else(zeros);
            check_table("mechanism.a1", &a1, grid.n_agents(), grid.len())?;
            check_table("mechanism.a0", &a0, grid.n_agents(), grid.len())?;
            let mech = Mechanism::new(grid.clone(), decisions, a1, a0)
                .map_err(|e| CliError::config("mechanism.decisions", e))?;
            Ok(MechanismSpec::Table { mech, verification: mode })
        }
        RawMechanism::Solve => Ok(MechanismSpec::Solve),
    }
}

fn build_sweep(raw: RawSweep, specs: &[AgentSpec], p: f64) -> Result<Sweep, CliError> {
    if !(raw.step.is_finite() && raw.step > 0.0) {
        return Err(CliError::config("sweep.step", "must be positive"));
    }
    if !(raw.from.is_finite() && raw.to.is_finite()) {
        return Err(CliError::config("sweep.from", "range must be finite"));
    }
    if raw.to < raw.from {
        return Err(CliError::config("sweep.to", format!("{} is below sweep.from {}", raw.to, raw.from)));
    }
    let span = (raw.to - raw.from) / raw.step;
    if span > MAX_SWEEP_POINTS as f64 {
        return Err(CliError::config("sweep.step", format!("more than {MAX_SWEEP_POINTS} points")));
    }
    // tolerate a range end that is a multiple of the step up to round-off
    let count = (span + 1e-9).floor() as usize + 1;
    let points: Vec<f64> = (0..count).map(|k| raw.from + k as f64 * raw.step).collect();
    match raw.variable {
        SweepVariable::Cost => {
            if raw.from < 0.0 {
                return Err(CliError::config("sweep.from", "costs must be nonnegative"));
            }
        }
        SweepVariable::P => {
            if raw.from <= 0.0 || raw.to > 1.0 {
                return Err(CliError::config("sweep.from", "detection probabilities must lie in (0, 1]"));
            }
            if raw.agent.is_some() {
                return Err(CliError::config("sweep.agent", "only used when sweeping cost"));
            }
        }
    }
    if let Some(a) = raw.agent {
        if a >= specs.len() {
            return Err(CliError::config("sweep.agent", format!("no agent {a}")));
        }
    }
    let two_agent_ok = specs.len() == 2 && raw.variable == SweepVariable::Cost && p == 1.0;
    let weights = match raw.weights {
        Some(SweepWeights::TwoAgent) if !two_agent_ok => {
            return Err(CliError::config(
                "sweep.weights",
                "two-agent weights need exactly two agents, a cost sweep and p = 1",
            ))
        }
        Some(w) => w,
        None if two_agent_ok => SweepWeights::TwoAgent,
        None => SweepWeights::Fitted,
    };
    Ok(Sweep { variable: raw.variable, agent: raw.agent, points, weights })
}

fn build(raw: RawConfig, overrides: &Overrides, default_out: PathBuf) -> Result<Experiment, CliError> {
    let task = raw.task;
    if !(raw.p > 0.0 && raw.p <= 1.0) {
        return Err(CliError::config("p", format!("detection probability {} not in (0, 1]", raw.p)));
    }
    if raw.agents.is_empty() {
        return Err(CliError::config("agents", "at least one agent is required"));
    }
    let specs = raw.agents.iter().enumerate().map(|(i, a)| build_agent(i, a)).collect::<Result<Vec<_>, _>>()?;
    let continuous = raw.agents.iter().any(|a| a.distribution.is_some());
    let bins = match raw.bins {
        Some(_) if !continuous => return Err(CliError::config("bins", "only used with continuous agents")),
        Some(b) if !(1..=MAX_BINS).contains(&b) => {
            return Err(CliError::config("bins", format!("must be between 1 and {MAX_BINS}")))
        }
        Some(b) => b,
        None => 3,
    };
    let seed = overrides.seed.or(raw.seed);
    let samples = overrides.samples.or(raw.samples).unwrap_or(0);
    if continuous && seed.is_none() {
        return Err(CliError::config("seed", "required when an agent has a continuous distribution"));
    }
    if samples > 0 {
        if !task.samples() {
            return Err(not_used("samples", task));
        }
        if samples < 2 {
            return Err(CliError::config("samples", "Monte Carlo needs at least two samples"));
        }
        if seed.is_none() {
            return Err(CliError::config("seed", "required for Monte Carlo sampling"));
        }
    }
    let finite = specs
        .iter()
        .enumerate()
        .map(|(i, s)| match s.discrete_dist() {
            Some(_) => Ok(s.clone()),
            None => discretize(s, bins).map_err(|e| CliError::config(format!("agents[{i}].distribution"), e)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let grid = DiscreteGrid::new(finite).map_err(|e| CliError::config("agents", e))?;

    let mechanism = match (raw.mechanism, task.uses_mechanism()) {
        (Some(m), true) => Some(build_mechanism(m, &grid, raw.p)?),
        (None, true) => return Err(CliError::config("mechanism", format!("required by task {}", task.name()))),
        (Some(_), false) => return Err(not_used("mechanism", task)),
        (None, false) => None,
    };
    let constraints = match raw.constraints {
        Some(_) if task != Task::Check => return Err(not_used("constraints", task)),
        Some(c) => c,
        None => Constraints::Bic,
    };
    let perfect_only = |key: &str, what: &str| {
        if raw.p == 1.0 {
            Ok(())
        } else {
            Err(CliError::config(key, format!("{what} assume perfect verification (p = 1)")))
        }
    };
    if constraints != Constraints::Bic {
        perfect_only("constraints", "ex-post checks")?;
    }
    if task == Task::EpicTransform {
        perfect_only("p", "ex-post transforms")?;
        if grid.n_agents() > MAX_REARRANGE_AGENTS {
            return Err(CliError::config(
                "agents",
                format!("the transform supports at most {MAX_REARRANGE_AGENTS} agents"),
            ));
        }
    }
    let sweep = match (raw.sweep, task) {
        (Some(s), Task::Sweep) => Some(build_sweep(s, &specs, raw.p)?),
        (None, Task::Sweep) => return Err(CliError::config("sweep", "required by task sweep")),
        (Some(_), _) => return Err(not_used("sweep", task)),
        (None, _) => None,
    };
    let cost_scale = match (raw.public_good, task) {
        (Some(pg), Task::PublicGood) => pg.cost_scale.unwrap_or(1.0),
        (None, Task::PublicGood) => 1.0,
        (Some(_), _) => return Err(not_used("public_good", task)),
        (None, _) => 1.0,
    };
    if task == Task::PublicGood {
        if grid.n_agents() != 1 {
            return Err(CliError::config("agents", "the public-good task takes exactly one agent"));
        }
        if specs[0].sign_rule() != SignRule::AlwaysInFavor {
            return Err(CliError::config("agents[0].sign", "the public-good agent must be always-in-favor"));
        }
        if !(cost_scale.is_finite() && cost_scale > 0.0) {
            return Err(CliError::config("public_good.cost_scale", "must be positive"));
        }
        perfect_only("p", "public-good schedules")?;
    }
    let output = overrides.out.clone().or(raw.output).unwrap_or(default_out);
    Ok(Experiment {
        task,
        p: raw.p,
        seed,
        samples,
        output,
        specs,
        grid,
        mechanism,
        constraints,
        sweep,
        cost_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str) -> Result<Experiment, CliError> {
        build(parse(text)?, &Overrides::default(), PathBuf::from("out.csv"))
    }

    fn key_of(err: CliError) -> String {
        match err {
            CliError::Config { key, .. } => key,
            other => panic!("not a config error: {other}"),
        }
    }

    const AGENT: &str = "[[agents]]\nvalues = [-1.0, 1.0]\nsign = { threshold = 0.0 }\n";

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let err = load_str(&format!("task = \"solve\"\n{AGENT}colour = 1\n")).err().expect("config error");
        assert_eq!(key_of(err), "agents[0].colour");
        let err = load_str(&format!("task = \"solve\"\nbogus = 2\n{AGENT}")).err().expect("config error");
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn wrong_types_name_the_key() {
        let err = load_str("task = \"solve\"\n[[agents]]\nvalues = [1.0]\nprobs = \"x\"\nsign = \"always-in-favor\"\n")
            .err()
            .expect("config error");
        assert_eq!(key_of(err), "agents[0].probs");
    }

    #[test]
    fn sweep_points_include_the_end() {
        let exp = load_str(&format!(
            "task = \"sweep\"\n{AGENT}{AGENT}[sweep]\nvariable = \"cost\"\nfrom = 0.0\nto = 0.5\nstep = 0.05\n"
        ))
        .unwrap();
        let sweep = exp.sweep.unwrap();
        assert_eq!(sweep.points.len(), 11);
        assert_eq!(sweep.weights, SweepWeights::TwoAgent);
    }

    #[test]
    fn mechanism_is_required_where_used() {
        let err = load_str(&format!("task = \"check\"\n{AGENT}")).err().expect("config error");
        assert_eq!(key_of(err), "mechanism");
        let err = load_str(&format!("task = \"solve\"\n{AGENT}[mechanism]\nkind = \"solve\"\n")).err().expect("config error");
        assert_eq!(key_of(err), "mechanism");
    }
}

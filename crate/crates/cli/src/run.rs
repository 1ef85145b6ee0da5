//! Task dispatch: each task produces one CSV table and a summary.

use vwe_core::model::DiscreteGrid;
use vwe_core::optimize::{monte_carlo_value, LogBarrierCost};
use vwe_core::{
    bic_to_epic, build_verification, check_bic, check_epic, epic_verification, fit_weights, interim,
    principal_value, solve_public_good, solve_relaxed_lp, solve_two_agent_weights, vwe_mechanism, DecisionTensor,
    IcReport, Mechanism,
};

use crate::config::{Constraints, Experiment, MechanismSpec, SweepVariable, SweepWeights, Task, VerificationMode, WeightConfig};
use crate::error::CliError;
use crate::output::{num, type_label, Table};

pub struct Outcome {
    pub table: Table,
    /// Everything after the task name on the summary line.
    pub summary: String,
    /// Fitted weights in config syntax, written next to the CSV.
    pub weights_toml: Option<String>,
}

pub fn run(exp: &Experiment) -> Result<Outcome, CliError> {
    match exp.task {
        Task::Evaluate => evaluate(exp),
        Task::Check => check(exp),
        Task::Solve => solve(exp),
        Task::EpicTransform => epic_transform(exp),
        Task::Sweep => sweep(exp),
        Task::PublicGood => public_good(exp),
    }
}

fn mechanism(exp: &Experiment) -> Result<Mechanism, CliError> {
    let grid = &exp.grid;
    let mech = match exp.mechanism.as_ref().expect("validated") {
        MechanismSpec::Vwe(params) => vwe_mechanism(params, grid)?,
        MechanismSpec::Table { mech, verification } => match verification {
            VerificationMode::None => mech.clone(),
            VerificationMode::Binding => build_verification(mech.decisions(), grid, exp.p)?,
            VerificationMode::Pointwise => {
                let tensor = DecisionTensor::new(grid.clone(), mech.decisions().to_vec())?;
                let ver = epic_verification(&tensor)?;
                Mechanism::new(grid.clone(), mech.decisions().to_vec(), ver.a1, ver.a0)?
            }
        },
        MechanismSpec::Solve => {
            let sol = solve_relaxed_lp(grid, exp.p)?;
            build_verification(&sol.d, grid, exp.p)?
        }
    };
    Ok(mech)
}

fn value_summary(exp: &Experiment, mech: &Mechanism) -> Result<String, CliError> {
    let mut s = format!("value {}", num(principal_value(mech)));
    if exp.samples > 0 {
        let est = monte_carlo_value(mech, exp.samples, exp.seed.expect("validated"))?;
        s += &format!(
            " (monte carlo {} ± {} over {} samples)",
            num(est.mean),
            num(est.std_error),
            est.samples
        );
    }
    Ok(s)
}

fn status_line(kind: &str, report: &IcReport) -> String {
    format!("{kind}: {} (min slack {})", report.status, num(report.min_slack))
}

fn evaluate(exp: &Experiment) -> Result<Outcome, CliError> {
    let mech = mechanism(exp)?;
    let grid = mech.grid();
    let mut table = Table::new(["agent", "type_index", "type_label", "type", "side", "decision", "verification"]);
    for i in 0..grid.n_agents() {
        let prof = interim(&mech, i);
        let n = grid.n_types(i);
        for k in 0..n {
            table.push(vec![
                i.to_string(),
                k.to_string(),
                type_label(k, n),
                num(grid.type_value(i, k)),
                if grid.in_favor(i, k) { "plus" } else { "minus" }.into(),
                num(prof.decision[k]),
                num(prof.verification[k]),
            ]);
        }
    }
    Ok(Outcome { table, summary: value_summary(exp, &mech)?, weights_toml: None })
}

fn check(exp: &Experiment) -> Result<Outcome, CliError> {
    let mech = mechanism(exp)?;
    let grid = mech.grid();
    let mut reports = Vec::new();
    if exp.constraints != Constraints::Epic {
        reports.push(("BIC", "bic", check_bic(&mech, exp.p)));
    }
    if exp.constraints != Constraints::Bic {
        reports.push(("EPIC", "epic", check_epic(&mech)));
    }
    let mut table = Table::new(["constraint", "agent", "type_index", "type_label", "type", "side", "slack"]);
    for (_, tag, report) in &reports {
        for row in &report.rows {
            table.push(vec![
                tag.to_string(),
                row.agent.to_string(),
                row.type_index.to_string(),
                type_label(row.type_index, grid.n_types(row.agent)),
                num(row.type_value),
                row.side.to_string(),
                num(row.slack),
            ]);
        }
    }
    let summary: Vec<String> = reports.iter().map(|(kind, _, r)| status_line(kind, r)).collect();
    Ok(Outcome { table, summary: summary.join("; "), weights_toml: None })
}

/// One row per profile: the types, the decision and each agent's
/// unconditional verification probability.
fn profile_table(mech: &Mechanism) -> Table {
    let grid = mech.grid();
    let n = grid.n_agents();
    let mut header: Vec<String> = (0..n).map(|i| format!("type_{i}")).collect();
    header.push("decision".into());
    header.extend((0..n).map(|i| format!("verify_{i}")));
    let mut table = Table::new(header);
    for t in 0..grid.len() {
        let mut row: Vec<String> = grid.profile_values(t).into_iter().map(num).collect();
        row.push(num(mech.decision(t)));
        row.extend((0..n).map(|i| num(mech.verification(i, t))));
        table.push(row);
    }
    table
}

#[derive(serde::Serialize)]
struct FittedMechanism {
    kind: &'static str,
    weights: Vec<WeightConfig>,
}

#[derive(serde::Serialize)]
struct FittedFile {
    mechanism: FittedMechanism,
}

fn solve(exp: &Experiment) -> Result<Outcome, CliError> {
    let grid = &exp.grid;
    let sol = solve_relaxed_lp(grid, exp.p)?;
    let mech = build_verification(&sol.d, grid, exp.p)?;
    let fitted = fit_weights(&sol, grid, exp.p)?;
    let file = FittedFile {
        mechanism: FittedMechanism {
            kind: "vwe",
            weights: fitted.params.agents.iter().map(WeightConfig::from_weights).collect(),
        },
    };
    let body = toml::to_string(&file).map_err(|e| CliError::Output {
        path: exp.output.clone(),
        message: format!("serializing fitted weights: {e}"),
    })?;
    let weights_toml = format!(
        "# voting-with-evidence weights fitted to the optimal decision table\n# fit residual {}\n{body}",
        num(fitted.residual)
    );
    let summary = format!(
        "{}, relaxed value {}, fit residual {}",
        value_summary(exp, &mech)?,
        num(sol.value),
        num(fitted.residual)
    );
    Ok(Outcome { table: profile_table(&mech), summary, weights_toml: Some(weights_toml) })
}

fn epic_transform(exp: &Experiment) -> Result<Outcome, CliError> {
    let input = mechanism(exp)?;
    let out = bic_to_epic(&input)?;
    let summary = format!("{}; {}", value_summary(exp, &out)?, status_line("EPIC", &check_epic(&out)));
    Ok(Outcome { table: profile_table(&out), summary, weights_toml: None })
}

fn sweep(exp: &Experiment) -> Result<Outcome, CliError> {
    let sweep = exp.sweep.as_ref().expect("validated");
    let var = sweep.variable;
    let mut table = Table::new([var.name(), "agent", "omega_plus", "omega_minus", "value"]);
    let n = exp.specs.len();
    for &x in &sweep.points {
        let moves = |i: usize| var == SweepVariable::Cost && sweep.agent.is_none_or(|a| a == i);
        let mut specs = exp.specs.clone();
        let mut finite = exp.grid.agents().to_vec();
        for i in (0..n).filter(|&i| moves(i)) {
            specs[i] = specs[i].with_cost(x)?;
            finite[i] = finite[i].with_cost(x)?;
        }
        let p = if var == SweepVariable::P { x } else { exp.p };
        let grid = DiscreteGrid::new(finite)?;
        let sol = solve_relaxed_lp(&grid, p)?;
        let weights: Vec<(Option<f64>, Option<f64>)> = match sweep.weights {
            SweepWeights::TwoAgent => specs
                .iter()
                .map(|s| solve_two_agent_weights(s).map(|w| (w.omega_plus, w.omega_minus)))
                .collect::<Result<_, _>>()?,
            SweepWeights::Fitted => fit_weights(&sol, &grid, p)?
                .params
                .agents
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let has = |plus: bool| (0..grid.n_types(i)).any(|k| grid.in_favor(i, k) == plus);
                    (has(true).then_some(w.omega_plus), has(false).then_some(w.omega_minus))
                })
                .collect(),
        };
        let opt = |w: Option<f64>| w.map(num).unwrap_or_default();
        for (i, (hi, lo)) in weights.into_iter().enumerate() {
            table.push(vec![num(x), i.to_string(), opt(hi), opt(lo), num(sol.value)]);
        }
    }
    let summary = format!(
        "{} points over {} from {} to {}",
        sweep.points.len(),
        var.name(),
        num(sweep.points[0]),
        num(*sweep.points.last().unwrap())
    );
    Ok(Outcome { table, summary, weights_toml: None })
}

fn public_good(exp: &Experiment) -> Result<Outcome, CliError> {
    let agent = exp.grid.agent(0);
    let cost = LogBarrierCost { scale: exp.cost_scale };
    let sol = solve_public_good(agent, &cost, agent.cost())?;
    let mut table =
        Table::new(["type", "prob", "provision", "first_best", "verification", "interior", "foc_residual"]);
    for k in 0..sol.types.len() {
        table.push(vec![
            num(sol.types[k]),
            num(sol.probs[k]),
            num(sol.schedule[k]),
            num(sol.first_best[k]),
            num(sol.verification[k]),
            u8::from(sol.interior[k]).to_string(),
            num(sol.foc_residuals[k]),
        ]);
    }
    let summary = format!("value {}, provision floor {}", num(sol.value), num(sol.min_decision));
    Ok(Outcome { table, summary, weights_toml: None })
}

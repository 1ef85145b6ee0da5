//! Principal payoffs, the relaxed problem and its linear-programming
//! solution, optimal weights and verification rules, and the one-agent
//! public-good schedule.

mod public_good;
mod relaxed;
mod value;
mod weights;

pub use public_good::{
    solve_public_good, validate_cost_functional, CostFunctional, LogBarrierCost, PublicGoodSolution,
};
pub use relaxed::{build_verification, solve_relaxed_lp, RelaxedSolution, MAX_LP_PROFILES};
pub use value::{interim_decisions, monte_carlo_value, principal_value, relaxed_value, MonteCarloEstimate};
pub use weights::{fit_weights, solve_two_agent_weights, FittedWeights, TwoAgentWeights};

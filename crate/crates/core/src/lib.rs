//! Mechanisms for a binary collective decision with costly verification of
//! private types: voting with evidence, incentive audits, optimal mechanism
//! search by linear programming and the Bayesian-to-ex-post transform.

pub mod equivalence;
pub mod error;
pub mod incentives;
pub mod lp;
pub mod model;
pub mod numeric;
pub mod optimize;
pub mod vwe;

pub use equivalence::{bic_to_epic, epic_verification, monotone_rearrange, DecisionTensor};
pub use error::{Error, Result};
pub use incentives::{
    check_bic, check_epic, interim, replay_deviation, replay_reports, worst_off, IcReport,
    IcStatus, Mechanism, Replay, Side,
};
pub use model::{
    discretize, make_discrete_agent, public_good_embedding, AgentSpec, ContinuousDist,
    DiscreteDist, DiscreteGrid, Distribution, InterimProfile, SignRule,
};
pub use optimize::{
    build_verification, fit_weights, principal_value, relaxed_value, solve_public_good,
    solve_relaxed_lp, solve_two_agent_weights, RelaxedSolution,
};
pub use vwe::{decide, is_decisive, vwe_mechanism, weight, AgentWeights, CostRule, VweParams};

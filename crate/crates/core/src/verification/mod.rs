//! Independent oracles and convergence-bound audits.
//!
//! The oracles here deliberately avoid the dense-solve path in
//! [`crate::bellman`]: occupancy is checked against a truncated power
//! series, policy values against fixed-point iteration, `J*` against value
//! iteration and exhaustive enumeration, the gradient against central
//! finite differences, and the simplex projection against lattice search.

mod bounds;
mod oracles;

pub use bounds::{
    audit_frank_wolfe_steps, check_policy_iteration_rate, check_theorem_1a, check_theorem_1b,
    policy_iteration_report, theorem_1a_report, theorem_1b_report, BoundKind, BoundPoint,
    BoundReport, FrankWolfeStepAudit, AUDIT_SLACK,
};
pub use oracles::{
    brute_force_project, enumerate_deterministic_policies, fd_gradient_check,
    fixed_point_evaluation, random_policy, series_horizon, truncated_series_occupancy,
    value_iteration,
};

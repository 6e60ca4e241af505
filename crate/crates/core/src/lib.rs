//! Exact-gradient policy optimization on finite tabular MDPs.
//!
//! The crate provides the dynamic-programming primitives (policy evaluation,
//! Bellman operators, Q-functions, discounted occupancy measures and the
//! policy gradient), five policy-space update rules (policy iteration,
//! Frank-Wolfe, projected gradient descent, mirror descent and natural policy
//! gradient) with constant stepsizes or exact line search, and audit tooling
//! that checks iterate traces against geometric convergence bounds.
//!
//! ```
//! use tabular_pg::{bellman, Policy, TabularMdp};
//!
//! // One state, two self-looping actions with costs 0 and 1.
//! let mdp = TabularMdp::new(
//!     1, 2,
//!     vec![0.0, 1.0],
//!     vec![1.0, 1.0],
//!     0.5,
//!     vec![1.0],
//! ).unwrap();
//! let pi = Policy::uniform(1, 2);
//! let j = bellman::evaluate_policy(&mdp, &pi).unwrap();
//! assert!((j.values()[0] - 1.0).abs() < 1e-12);
//! ```

pub mod algorithms;
pub mod bellman;
mod error;
pub mod harness;
pub mod mdp;
pub mod simplex;
pub mod verification;

pub use algorithms::{AlgorithmKind, IterateRecord, IterateTrace, StepsizeRule};
pub use error::{Error, Result};
pub use mdp::{
    GradientMatrix, OccupancyMeasure, Policy, QFunction, TabularMdp, Tolerances, ValueFunction,
};

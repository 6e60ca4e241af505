//! Policy-space update rules, stepsize selection and the outer loop.

mod line_search;
mod runner;
mod steps;

use std::fmt;

use crate::error::{Error, Result};

pub use line_search::{line_search, LineSearchOutcome};
pub use runner::{run, run_with_optimum, IterateRecord, IterateTrace, StopReason};
pub use steps::{
    frank_wolfe_step, mirror_descent_step, npg_step, pgd_step, policy_iteration_update,
};

/// The five update rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    PolicyIteration,
    FrankWolfe,
    /// Projected gradient descent. With `weight_by_occupancy` the per-state
    /// step uses the true gradient row `eta(s) Q(s, .)`; without it the
    /// step uses `Q(s, .)` alone.
    ProjectedGradient {
        weight_by_occupancy: bool,
    },
    MirrorDescent,
    NaturalPolicyGradient,
}

impl AlgorithmKind {
    /// Short identifier used in file names and reports.
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmKind::PolicyIteration => "policy_iteration",
            AlgorithmKind::FrankWolfe => "frank_wolfe",
            AlgorithmKind::ProjectedGradient {
                weight_by_occupancy: true,
            } => "pgd",
            AlgorithmKind::ProjectedGradient {
                weight_by_occupancy: false,
            } => "pgd_unweighted",
            AlgorithmKind::MirrorDescent => "mirror_descent",
            AlgorithmKind::NaturalPolicyGradient => "npg",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label {
            "policy_iteration" => AlgorithmKind::PolicyIteration,
            "frank_wolfe" => AlgorithmKind::FrankWolfe,
            "pgd" => AlgorithmKind::ProjectedGradient {
                weight_by_occupancy: true,
            },
            "pgd_unweighted" => AlgorithmKind::ProjectedGradient {
                weight_by_occupancy: false,
            },
            "mirror_descent" => AlgorithmKind::MirrorDescent,
            "npg" => AlgorithmKind::NaturalPolicyGradient,
            _ => return None,
        })
    }

    /// Frank-Wolfe's stepsize curve is a bounded segment; every other
    /// first-order rule reaches the greedy policy only as `alpha -> inf`.
    pub(crate) fn has_bounded_stepsize(&self) -> bool {
        matches!(self, AlgorithmKind::FrankWolfe)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How each iteration picks its stepsize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeRule {
    Constant {
        alpha: f64,
    },
    /// Grid search over the compactified stepsize curve, including its
    /// closure point, followed by golden-section refinement.
    ExactLineSearch {
        grid_points: usize,
        refinement_rounds: usize,
    },
}

impl StepsizeRule {
    pub const DEFAULT_GRID_POINTS: usize = 33;
    pub const DEFAULT_REFINEMENT_ROUNDS: usize = 20;

    pub fn line_search() -> Self {
        StepsizeRule::ExactLineSearch {
            grid_points: Self::DEFAULT_GRID_POINTS,
            refinement_rounds: Self::DEFAULT_REFINEMENT_ROUNDS,
        }
    }

    pub fn label(&self) -> String {
        match self {
            StepsizeRule::Constant { alpha } => format!("constant-{alpha}"),
            StepsizeRule::ExactLineSearch { .. } => "linesearch".to_string(),
        }
    }

    /// Rejects combinations that have no meaning for `kind`.
    pub fn validate_for(&self, kind: AlgorithmKind) -> Result<()> {
        match (*self, kind) {
            (_, AlgorithmKind::PolicyIteration) => Ok(()),
            (StepsizeRule::Constant { alpha }, AlgorithmKind::FrankWolfe) => {
                if alpha > 0.0 && alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "frank-wolfe stepsize {alpha} must lie in (0, 1]"
                    )))
                }
            }
            (StepsizeRule::Constant { alpha }, _) => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "stepsize {alpha} must be positive and finite"
                    )))
                }
            }
            (StepsizeRule::ExactLineSearch { grid_points, .. }, _) => {
                if grid_points >= 2 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "line search needs at least 2 grid points, got {grid_points}"
                    )))
                }
            }
        }
    }
}

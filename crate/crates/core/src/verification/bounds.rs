//! Rate-bound audits for iterate traces.

use serde::{Deserialize, Serialize};

use crate::algorithms::IterateTrace;
use crate::bellman::{apply_optimal_bellman, apply_policy_bellman};
use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, ValueFunction};

/// Additive slack absorbing linear-solver rounding in every audit.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Exact line search: `(1 - rho_min (1 - gamma))^t gap_0 / rho_min`.
    #[serde(rename = "theorem_1a")]
    Theorem1a,
    /// Constant-stepsize Frank-Wolfe: `(1 - alpha (1 - gamma))^t gap_0`.
    #[serde(rename = "theorem_1b")]
    Theorem1b,
    /// Policy iteration: `gamma^t gap_0`.
    PolicyIterationGamma,
}

impl BoundKind {
    pub fn label(&self) -> &'static str {
        match self {
            BoundKind::Theorem1a => "theorem_1a",
            BoundKind::Theorem1b => "theorem_1b",
            BoundKind::PolicyIterationGamma => "policy_iteration_gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub observed_gap: f64,
    pub bound_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_kind: BoundKind,
    pub points: Vec<BoundPoint>,
    /// `observed_gap <= bound_value + AUDIT_SLACK` at every iteration.
    pub satisfied: bool,
    /// `min_t (bound_value - observed_gap)`.
    pub worst_slack: f64,
}

impl BoundReport {
    /// Audits `gaps[t] <= rate^t * prefactor`.
    pub fn from_gaps(bound_kind: BoundKind, gaps: &[f64], rate: f64, prefactor: f64) -> Self {
        let points: Vec<BoundPoint> = gaps
            .iter()
            .enumerate()
            .map(|(t, &observed_gap)| BoundPoint {
                observed_gap,
                bound_value: rate.powf(t as f64) * prefactor,
            })
            .collect();
        let satisfied = points
            .iter()
            .all(|p| p.observed_gap <= p.bound_value + AUDIT_SLACK);
        let worst_slack = points
            .iter()
            .map(|p| p.bound_value - p.observed_gap)
            .fold(f64::INFINITY, f64::min);
        Self {
            bound_kind,
            points,
            satisfied,
            worst_slack,
        }
    }

    /// Iterations audited, excluding `t = 0`.
    pub fn iterations(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

pub fn theorem_1a_report(gaps: &[f64], rho_min: f64, gamma: f64, initial_gap: f64) -> BoundReport {
    BoundReport::from_gaps(
        BoundKind::Theorem1a,
        gaps,
        1.0 - rho_min * (1.0 - gamma),
        initial_gap / rho_min,
    )
}

pub fn theorem_1b_report(gaps: &[f64], alpha: f64, gamma: f64, initial_gap: f64) -> BoundReport {
    BoundReport::from_gaps(
        BoundKind::Theorem1b,
        gaps,
        1.0 - alpha * (1.0 - gamma),
        initial_gap,
    )
}

pub fn policy_iteration_report(gaps: &[f64], gamma: f64, initial_gap: f64) -> BoundReport {
    BoundReport::from_gaps(BoundKind::PolicyIterationGamma, gaps, gamma, initial_gap)
}

/// Exact-line-search bound on a trace.
pub fn check_theorem_1a(
    trace: &IterateTrace,
    rho_min: f64,
    gamma: f64,
    initial_gap: f64,
) -> BoundReport {
    theorem_1a_report(&trace.gaps(), rho_min, gamma, initial_gap)
}

/// Constant-stepsize Frank-Wolfe bound on a trace.
pub fn check_theorem_1b(
    trace: &IterateTrace,
    alpha: f64,
    gamma: f64,
    initial_gap: f64,
) -> BoundReport {
    theorem_1b_report(&trace.gaps(), alpha, gamma, initial_gap)
}

pub fn check_policy_iteration_rate(
    trace: &IterateTrace,
    gamma: f64,
    initial_gap: f64,
) -> BoundReport {
    policy_iteration_report(&trace.gaps(), gamma, initial_gap)
}

/// Worst per-step violations of the two identities behind the
/// constant-stepsize Frank-Wolfe analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrankWolfeStepAudit {
    /// `max_t max_s (J_{t+1}(s) - J_t(s))`, clamped below at zero.
    pub max_improvement_violation: f64,
    /// `max_t ||T_{pi^{t+1}} J_t - ((1 - alpha) J_t + alpha T J_t)||_inf`.
    pub max_soft_bellman_error: f64,
}

/// Recomputes, for each step of a constant-stepsize Frank-Wolfe trace,
/// elementwise improvement and the soft-Bellman identity.
pub fn audit_frank_wolfe_steps(
    mdp: &TabularMdp,
    trace: &IterateTrace,
    alpha: f64,
) -> Result<FrankWolfeStepAudit> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "frank-wolfe stepsize {alpha} must lie in (0, 1]"
        )));
    }
    let mut audit = FrankWolfeStepAudit {
        max_improvement_violation: 0.0,
        max_soft_bellman_error: 0.0,
    };
    for pair in trace.records.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        let increase = next
            .values
            .values()
            .iter()
            .zip(now.values.values())
            .fold(0.0f64, |m, (a, b)| m.max(a - b));
        audit.max_improvement_violation = audit.max_improvement_violation.max(increase);

        let lhs = apply_policy_bellman(mdp, &next.policy, &now.values)?;
        let tj = apply_optimal_bellman(mdp, &now.values)?;
        let rhs = ValueFunction::new(
            now.values
                .values()
                .iter()
                .zip(tj.values())
                .map(|(j, t)| (1.0 - alpha) * j + alpha * t)
                .collect(),
        );
        audit.max_soft_bellman_error = audit.max_soft_bellman_error.max(lhs.sup_distance(&rhs));
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_1a_at_t0_and_single_state() {
        let r = theorem_1a_report(&[0.7], 0.1, 0.9, 0.7);
        assert!((r.points[0].bound_value - 7.0).abs() < 1e-15);
        assert!(r.satisfied);
        // rho_min = 1 collapses the rate to gamma.
        let r = theorem_1a_report(&[2.0, 1.0, 0.5], 1.0, 0.5, 2.0);
        let bounds: Vec<f64> = r.points.iter().map(|p| p.bound_value).collect();
        assert_eq!(bounds, vec![2.0, 1.0, 0.5]);
        assert!(r.satisfied);
        assert_eq!(r.worst_slack, 0.0);
    }

    #[test]
    fn theorem_1b_with_unit_step_is_gamma_rate() {
        let gaps = [1.0, 0.8, 0.3];
        let a = theorem_1b_report(&gaps, 1.0, 0.8, 1.0);
        let b = policy_iteration_report(&gaps, 0.8, 1.0);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x.bound_value - y.bound_value).abs() < 1e-15);
        }
        assert_eq!(a.points[0].bound_value, a.points[0].observed_gap);
    }

    #[test]
    fn violation_is_reported_with_negative_slack() {
        let r = policy_iteration_report(&[1.0, 0.95], 0.9, 1.0);
        assert!(!r.satisfied);
        assert!((r.worst_slack + 0.05).abs() < 1e-12);
        // Within slack counts as satisfied.
        let r = policy_iteration_report(&[1.0, 0.9 + 5e-10], 0.9, 1.0);
        assert!(r.satisfied);
        assert_eq!(r.iterations(), 1);
    }

    #[test]
    fn report_serializes_kind_labels() {
        let r = theorem_1a_report(&[1.0], 0.5, 0.9, 1.0);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"theorem_1a\""));
        let r = policy_iteration_report(&[1.0], 0.9, 1.0);
        assert!(serde_json::to_string(&r)
            .unwrap()
            .contains("policy_iteration_gamma"));
    }
}

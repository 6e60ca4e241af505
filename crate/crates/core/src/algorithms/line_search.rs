//! Exact line search over the closed stepsize curve of a first-order rule.
//!
//! The curve is parameterized on `[0, 1]`. For Frank-Wolfe the parameter is
//! the stepsize itself. For the other rules `beta = alpha / (1 + alpha)`
//! compactifies `alpha in [0, inf)`, and `beta = 1` is the closure point:
//! the policy-iteration update. Every grid point, including both ends, is
//! evaluated exactly, so the selected policy is never worse than either the
//! current policy or its greedy update.

use crate::bellman::{greedy_policy, loss, PolicyEvaluation};
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};

use super::steps::curve_point;
use super::AlgorithmKind;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub policy: Policy,
    /// Selected stepsize; `f64::INFINITY` marks the closure point.
    pub alpha: f64,
    pub loss: f64,
}

/// Returns the curve point of minimal loss and its stepsize.
pub fn line_search(
    mdp: &TabularMdp,
    pi: &Policy,
    kind: AlgorithmKind,
    grid_points: usize,
    refinement_rounds: usize,
) -> Result<(Policy, f64)> {
    let eval = PolicyEvaluation::new(mdp, pi)?;
    let outcome = search_curve(mdp, pi, &eval, kind, grid_points, refinement_rounds)?;
    Ok((outcome.policy, outcome.alpha))
}

pub(crate) fn search_curve(
    mdp: &TabularMdp,
    pi: &Policy,
    eval: &PolicyEvaluation,
    kind: AlgorithmKind,
    grid_points: usize,
    refinement_rounds: usize,
) -> Result<LineSearchOutcome> {
    if kind == AlgorithmKind::PolicyIteration {
        return Err(Error::InvalidArgument(
            "policy iteration has no stepsize to search".into(),
        ));
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "line search needs at least 2 grid points, got {grid_points}"
        )));
    }

    let greedy = greedy_policy(&eval.q);
    let bounded = kind.has_bounded_stepsize();
    let to_alpha = |beta: f64| {
        if bounded {
            beta
        } else if beta >= 1.0 {
            f64::INFINITY
        } else {
            beta / (1.0 - beta)
        }
    };
    let evaluate = |beta: f64| -> Result<(f64, Policy)> {
        let candidate = curve_point(kind, pi, eval, &greedy, to_alpha(beta))?;
        Ok((loss(mdp, &candidate)?, candidate))
    };

    let spacing = 1.0 / (grid_points - 1) as f64;
    let grid_beta = |j: usize| {
        if j + 1 == grid_points {
            1.0
        } else {
            j as f64 * spacing
        }
    };

    // Strict improvement only, so earlier (smaller) stepsizes win ties.
    let mut best_beta = 0.0;
    let mut best_index = 0;
    let mut best_loss = f64::INFINITY;
    let mut best_policy = pi.clone();
    for j in 0..grid_points {
        let beta = grid_beta(j);
        let (value, candidate) = evaluate(beta)?;
        if value < best_loss {
            best_loss = value;
            best_beta = beta;
            best_index = j;
            best_policy = candidate;
        }
    }

    if refinement_rounds > 0 {
        let mut lo = grid_beta(best_index.saturating_sub(1));
        let mut hi = grid_beta((best_index + 1).min(grid_points - 1));
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let (mut f1, p1) = evaluate(x1)?;
        let (mut f2, p2) = evaluate(x2)?;
        for (x, f, p) in [(x1, f1, p1), (x2, f2, p2)] {
            if f < best_loss {
                best_loss = f;
                best_beta = x;
                best_policy = p;
            }
        }
        for _ in 0..refinement_rounds {
            let (x, (f, p)) = if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                let r = evaluate(x1)?;
                f1 = r.0;
                (x1, r)
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                let r = evaluate(x2)?;
                f2 = r.0;
                (x2, r)
            };
            if f < best_loss {
                best_loss = f;
                best_beta = x;
                best_policy = p;
            }
        }
    }

    Ok(LineSearchOutcome {
        policy: best_policy,
        alpha: to_alpha(best_beta),
        loss: best_loss,
    })
}

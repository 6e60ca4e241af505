use crate::bellman::{greedy_policy, PolicyEvaluation};
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};
use crate::simplex::project_simplex;

use super::AlgorithmKind;

/// Deterministic policy on `argmin_i Q_pi(s, i)` at every state, ties to
/// the lowest action index.
pub fn policy_iteration_update(mdp: &TabularMdp, pi: &Policy) -> Result<Policy> {
    let eval = PolicyEvaluation::new(mdp, pi)?;
    Ok(greedy_policy(&eval.q))
}

/// `(1 - alpha) pi + alpha pi_plus` for `alpha` in `(0, 1]`.
pub fn frank_wolfe_step(mdp: &TabularMdp, pi: &Policy, alpha: f64) -> Result<Policy> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "frank-wolfe stepsize {alpha} must lie in (0, 1]"
        )));
    }
    let eval = PolicyEvaluation::new(mdp, pi)?;
    Ok(mix(pi, &greedy_policy(&eval.q), alpha))
}

/// Per state, `Proj(pi(s) - alpha w_s Q_pi(s, .))` with `w_s = eta_pi(s)`
/// when `weight_by_occupancy` is set and `w_s = 1` otherwise.
pub fn pgd_step(
    mdp: &TabularMdp,
    pi: &Policy,
    alpha: f64,
    weight_by_occupancy: bool,
) -> Result<Policy> {
    check_positive(alpha)?;
    let eval = PolicyEvaluation::new(mdp, pi)?;
    projected(pi, &eval, alpha, weight_by_occupancy)
}

/// Exponentiated-gradient step on the true gradient `eta(s) Q(s, i)`.
pub fn mirror_descent_step(mdp: &TabularMdp, pi: &Policy, alpha: f64) -> Result<Policy> {
    check_positive(alpha)?;
    let eval = PolicyEvaluation::new(mdp, pi)?;
    exponentiated(pi, &eval, alpha, true)
}

/// Natural policy gradient: the exponentiated step with the occupancy
/// factor cancelled by the occupancy-weighted KL penalty.
pub fn npg_step(mdp: &TabularMdp, pi: &Policy, alpha: f64) -> Result<Policy> {
    check_positive(alpha)?;
    let eval = PolicyEvaluation::new(mdp, pi)?;
    exponentiated(pi, &eval, alpha, false)
}

fn check_positive(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "stepsize {alpha} must be positive and finite"
        )))
    }
}

/// Point on the stepsize curve of `kind` at `pi`. `alpha = inf` is the
/// closure point (the greedy policy); `alpha = 0` returns `pi`.
pub(crate) fn curve_point(
    kind: AlgorithmKind,
    pi: &Policy,
    eval: &PolicyEvaluation,
    greedy: &Policy,
    alpha: f64,
) -> Result<Policy> {
    if alpha == f64::INFINITY {
        return Ok(greedy.clone());
    }
    match kind {
        AlgorithmKind::PolicyIteration => Ok(greedy.clone()),
        AlgorithmKind::FrankWolfe => Ok(mix(pi, greedy, alpha)),
        AlgorithmKind::ProjectedGradient {
            weight_by_occupancy,
        } => projected(pi, eval, alpha, weight_by_occupancy),
        AlgorithmKind::MirrorDescent => exponentiated(pi, eval, alpha, true),
        AlgorithmKind::NaturalPolicyGradient => exponentiated(pi, eval, alpha, false),
    }
}

fn mix(pi: &Policy, target: &Policy, alpha: f64) -> Policy {
    let probs = pi
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (1.0 - alpha) * p + alpha * t)
        .collect();
    Policy::from_raw(pi.n_states(), pi.n_actions(), probs)
}

fn projected(
    pi: &Policy,
    eval: &PolicyEvaluation,
    alpha: f64,
    weight_by_occupancy: bool,
) -> Result<Policy> {
    let (n, k) = (pi.n_states(), pi.n_actions());
    let mut probs = Vec::with_capacity(n * k);
    for s in 0..n {
        let w = if weight_by_occupancy {
            eval.occupancy.weights()[s]
        } else {
            1.0
        };
        let scale = alpha * w;
        let moved: Vec<f64> = pi
            .row(s)
            .iter()
            .zip(eval.q.row(s))
            .map(|(p, q)| p - scale * q)
            .collect();
        probs.extend(project_simplex(&moved)?);
    }
    Ok(Policy::from_raw(n, k, probs))
}

fn exponentiated(
    pi: &Policy,
    eval: &PolicyEvaluation,
    alpha: f64,
    weight_by_occupancy: bool,
) -> Result<Policy> {
    let (n, k) = (pi.n_states(), pi.n_actions());
    let mut probs = Vec::with_capacity(n * k);
    for s in 0..n {
        let row = pi.row(s);
        let q = eval.q.row(s);
        let scale = if weight_by_occupancy {
            alpha * eval.occupancy.weights()[s]
        } else {
            alpha
        };
        // Shift by the smallest Q on the support so the largest exponent
        // is zero; normalization cancels the shift.
        let q_min = row
            .iter()
            .zip(q)
            .filter(|(p, _)| **p > 0.0)
            .map(|(_, q)| *q)
            .fold(f64::INFINITY, f64::min);
        if q_min == f64::INFINITY {
            return Err(Error::InvalidArgument(format!(
                "policy row {s} has no positive entry"
            )));
        }
        let weights: Vec<f64> = row
            .iter()
            .zip(q)
            .map(|(&p, &qi)| {
                if p > 0.0 {
                    p * (-scale * (qi - q_min)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        probs.extend(weights.iter().map(|w| w / total));
    }
    Ok(Policy::from_raw(n, k, probs))
}

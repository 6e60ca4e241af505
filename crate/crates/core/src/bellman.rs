//! Exact dynamic-programming primitives: policy evaluation by dense linear
//! solve, the policy and optimal Bellman operators, Q-functions, discounted
//! occupancy measures, the scalar loss and its gradient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mdp::{GradientMatrix, OccupancyMeasure, Policy, QFunction, TabularMdp, ValueFunction};

/// `g_pi(s) = sum_i g(s, i) pi(s, i)`.
pub fn policy_cost_vector(mdp: &TabularMdp, pi: &Policy) -> Result<Vec<f64>> {
    mdp.check_policy(pi)?;
    Ok((0..mdp.n_states())
        .map(|s| dot(mdp.cost_row(s), pi.row(s)))
        .collect())
}

/// `P_pi(s, s') = sum_i P(s' | s, i) pi(s, i)`.
pub fn policy_transition_matrix(mdp: &TabularMdp, pi: &Policy) -> Result<DMatrix<f64>> {
    mdp.check_policy(pi)?;
    let n = mdp.n_states();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for (i, &w) in pi.row(s).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (t, &pt) in mdp.transition_row(s, i).iter().enumerate() {
                p[(s, t)] += w * pt;
            }
        }
    }
    Ok(p)
}

/// `I - gamma P_pi`, the matrix shared by policy evaluation and the
/// occupancy-measure solve.
fn resolvent_matrix(mdp: &TabularMdp, pi: &Policy) -> Result<DMatrix<f64>> {
    let mut a = policy_transition_matrix(mdp, pi)?;
    a *= -mdp.gamma();
    for s in 0..mdp.n_states() {
        a[(s, s)] += 1.0;
    }
    Ok(a)
}

/// Solves `(I - gamma P_pi) J = g_pi` by LU with partial pivoting.
pub fn evaluate_policy(mdp: &TabularMdp, pi: &Policy) -> Result<ValueFunction> {
    let g = policy_cost_vector(mdp, pi)?;
    let a = resolvent_matrix(mdp, pi)?;
    let j = a
        .lu()
        .solve(&DVector::from_column_slice(&g))
        .ok_or_else(|| Error::Solver("policy evaluation system is singular".into()))?;
    let j = ValueFunction::new(j.as_slice().to_vec());

    let tj = apply_policy_bellman(mdp, pi, &j)?;
    let residual = tj.sup_distance(&j);
    let scale = 1.0 + j.sup_norm();
    if !residual.is_finite() || residual > mdp.tolerances().residual * scale {
        return Err(Error::Solver(format!(
            "policy evaluation residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(j)
}

/// `(T_pi J)(s) = g_pi(s) + gamma (P_pi J)(s)`.
pub fn apply_policy_bellman(
    mdp: &TabularMdp,
    pi: &Policy,
    j: &ValueFunction,
) -> Result<ValueFunction> {
    mdp.check_policy(pi)?;
    mdp.check_state_vector("value function", j.len())?;
    let gamma = mdp.gamma();
    let values = (0..mdp.n_states())
        .map(|s| {
            let mut cost = 0.0;
            let mut next = 0.0;
            for (i, &w) in pi.row(s).iter().enumerate() {
                cost += w * mdp.cost(s, i);
                next += w * dot(mdp.transition_row(s, i), j.values());
            }
            cost + gamma * next
        })
        .collect();
    Ok(ValueFunction::new(values))
}

/// One-step lookahead `g(s, i) + gamma sum_s' P(s' | s, i) J(s')` for every
/// deterministic action. With `J = J_pi` this is `Q_pi`.
pub fn lookahead(mdp: &TabularMdp, j: &ValueFunction) -> Result<QFunction> {
    mdp.check_state_vector("value function", j.len())?;
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let gamma = mdp.gamma();
    let mut values = Vec::with_capacity(n * k);
    for s in 0..n {
        for i in 0..k {
            values.push(mdp.cost(s, i) + gamma * dot(mdp.transition_row(s, i), j.values()));
        }
    }
    QFunction::new(n, k, values)
}

/// `(TJ)(s) = min_i [g(s, i) + gamma sum_s' P(s' | s, i) J(s')]`.
///
/// The minimum over the simplex of a linear function is attained at a
/// vertex, so only deterministic actions are scanned.
pub fn apply_optimal_bellman(mdp: &TabularMdp, j: &ValueFunction) -> Result<ValueFunction> {
    let q = lookahead(mdp, j)?;
    Ok(ValueFunction::new(
        (0..mdp.n_states())
            .map(|s| q.row(s).iter().copied().fold(f64::INFINITY, f64::min))
            .collect(),
    ))
}

pub fn q_function(mdp: &TabularMdp, pi: &Policy) -> Result<QFunction> {
    let j = evaluate_policy(mdp, pi)?;
    lookahead(mdp, &j)
}

/// `eta_pi = (1 - gamma) rho (I - gamma P_pi)^{-1}`, computed from the
/// transposed system.
pub fn occupancy_measure(mdp: &TabularMdp, pi: &Policy) -> Result<OccupancyMeasure> {
    let a = resolvent_matrix(mdp, pi)?;
    let gamma = mdp.gamma();
    let rhs = DVector::from_iterator(mdp.n_states(), mdp.rho().iter().map(|r| (1.0 - gamma) * r));
    let at = a.transpose();
    let eta = at
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("occupancy system is singular".into()))?;

    let residual = (&at * &eta - &rhs).amax();
    let scale = 1.0 + eta.amax();
    if !residual.is_finite() || residual > mdp.tolerances().residual * scale {
        return Err(Error::Solver(format!(
            "occupancy residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(OccupancyMeasure::new(eta.as_slice().to_vec()))
}

/// `loss(pi) = (1 - gamma) <rho, J_pi>`.
pub fn loss(mdp: &TabularMdp, pi: &Policy) -> Result<f64> {
    let j = evaluate_policy(mdp, pi)?;
    Ok(loss_from_values(mdp, &j))
}

pub(crate) fn loss_from_values(mdp: &TabularMdp, j: &ValueFunction) -> f64 {
    (1.0 - mdp.gamma()) * dot(mdp.rho(), j.values())
}

/// Everything a first-order step needs at the current policy.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub values: ValueFunction,
    pub q: QFunction,
    pub occupancy: OccupancyMeasure,
}

impl PolicyEvaluation {
    pub fn new(mdp: &TabularMdp, pi: &Policy) -> Result<Self> {
        let values = evaluate_policy(mdp, pi)?;
        let q = lookahead(mdp, &values)?;
        let occupancy = occupancy_measure(mdp, pi)?;
        Ok(Self {
            values,
            q,
            occupancy,
        })
    }

    pub fn gradient(&self) -> GradientMatrix {
        let k = self.q.n_actions();
        let values = self
            .q
            .values()
            .chunks(k)
            .zip(self.occupancy.weights())
            .flat_map(|(row, &eta)| row.iter().map(move |q| eta * q))
            .collect();
        GradientMatrix::from_raw(k, values)
    }
}

/// `grad loss(pi)[s][i] = eta_pi(s) Q_pi(s, i)`.
pub fn policy_gradient(mdp: &TabularMdp, pi: &Policy) -> Result<GradientMatrix> {
    Ok(PolicyEvaluation::new(mdp, pi)?.gradient())
}

/// The occupancy-weighted one-period objective
/// `sum_s eta(s) sum_i Q(s, i) pibar(s, i)`.
pub fn bellman_objective(
    mdp: &TabularMdp,
    eta: &OccupancyMeasure,
    q: &QFunction,
    pibar: &Policy,
) -> Result<f64> {
    mdp.check_policy(pibar)?;
    mdp.check_state_vector("occupancy measure", eta.len())?;
    if q.n_actions() != mdp.n_actions() || q.n_states() != mdp.n_states() {
        return Err(Error::DimensionMismatch {
            what: "q-function entries",
            expected: mdp.n_states() * mdp.n_actions(),
            got: q.values().len(),
        });
    }
    Ok((0..mdp.n_states())
        .map(|s| eta.weights()[s] * dot(q.row(s), pibar.row(s)))
        .sum())
}

/// Deterministic policy greedy with respect to `q`, ties to the lowest
/// action index.
pub fn greedy_policy(q: &QFunction) -> Policy {
    let actions: Vec<usize> = (0..q.n_states()).map(|s| q.greedy_action(s)).collect();
    let k = q.n_actions();
    let mut probs = vec![0.0; actions.len() * k];
    for (s, a) in actions.into_iter().enumerate() {
        probs[s * k + a] = 1.0;
    }
    Policy::from_raw(q.n_states(), k, probs)
}

/// Runs policy iteration from the uniform policy until the greedy policy
/// repeats. Returns `J*` and an optimal deterministic policy.
pub fn compute_optimal(mdp: &TabularMdp) -> Result<(ValueFunction, Policy)> {
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let guard = u32::try_from(n)
        .ok()
        .and_then(|n| k.checked_pow(n))
        .map_or(usize::MAX, |c| c.saturating_add(1));

    let start = Policy::uniform(n, k);
    let mut pi = greedy_policy(&q_function(mdp, &start)?);
    let mut iterations = 0usize;
    loop {
        let j = evaluate_policy(mdp, &pi)?;
        let next = greedy_policy(&lookahead(mdp, &j)?);
        if next == pi {
            return Ok((j, pi));
        }
        iterations += 1;
        if iterations > guard {
            return Err(Error::NonTermination(iterations));
        }
        pi = next;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

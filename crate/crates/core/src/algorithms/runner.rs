use crate::bellman::{
    apply_optimal_bellman, compute_optimal, greedy_policy, loss_from_values, PolicyEvaluation,
};
use crate::error::Result;
use crate::mdp::{Policy, TabularMdp, ValueFunction};

use super::line_search::search_curve;
use super::steps::curve_point;
use super::{AlgorithmKind, StepsizeRule};

/// Tolerance for the elementwise-improvement flag.
const IMPROVEMENT_TOL: f64 = 1e-10;

/// State of one iterate `pi^t`.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub iter: usize,
    pub loss: f64,
    /// `||J_{pi^t} - J*||_inf`.
    pub sup_gap: f64,
    /// Stepsize of the step that produced `pi^t`; zero at `t = 0`,
    /// infinite when the closure point was selected.
    pub stepsize: f64,
    /// `||T J_{pi^t} - J_{pi^t}||_inf`.
    pub bellman_residual: f64,
    /// `J_{pi^t} <= J_{pi^{t-1}}` elementwise (within 1e-10); true at `t = 0`.
    pub elementwise_improvement: bool,
    pub policy: Policy,
    pub values: ValueFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `sup_gap <= gap_tolerance`.
    GapTolerance,
    /// The update returned the current policy, so every later iterate would
    /// be identical.
    Stationary,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub algorithm: AlgorithmKind,
    pub rule: StepsizeRule,
    pub optimal_loss: f64,
    pub stop_reason: StopReason,
    pub records: Vec<IterateRecord>,
}

impl IterateTrace {
    pub fn initial_gap(&self) -> f64 {
        self.records[0].sup_gap
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sup_gap).collect()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn policies(&self) -> impl Iterator<Item = &Policy> {
        self.records.iter().map(|r| &r.policy)
    }

    /// Number of steps taken (records minus the initial iterate).
    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }
}

/// Iterates `kind` from `pi0` until the gap to `J*` is at most
/// `gap_tolerance`, the iterate stops moving, or `max_iters` steps.
pub fn run(
    mdp: &TabularMdp,
    kind: AlgorithmKind,
    rule: StepsizeRule,
    pi0: &Policy,
    max_iters: usize,
    gap_tolerance: f64,
) -> Result<IterateTrace> {
    rule.validate_for(kind)?;
    mdp.check_policy(pi0)?;
    let (jstar, _) = compute_optimal(mdp)?;
    run_with_optimum(mdp, kind, rule, pi0, max_iters, gap_tolerance, &jstar)
}

/// As [`run`], with `J*` supplied by the caller so that several runs on one
/// instance share a single solve.
pub fn run_with_optimum(
    mdp: &TabularMdp,
    kind: AlgorithmKind,
    rule: StepsizeRule,
    pi0: &Policy,
    max_iters: usize,
    gap_tolerance: f64,
    jstar: &ValueFunction,
) -> Result<IterateTrace> {
    rule.validate_for(kind)?;
    mdp.check_policy(pi0)?;
    mdp.check_state_vector("optimal value function", jstar.len())?;

    let mut pi = pi0.clone();
    let mut eval = PolicyEvaluation::new(mdp, &pi)?;
    let mut records = vec![record(mdp, 0, &pi, &eval, jstar, 0.0, true)?];
    let mut stop_reason = StopReason::MaxIterations;

    for t in 1..=max_iters {
        if records[t - 1].sup_gap <= gap_tolerance {
            stop_reason = StopReason::GapTolerance;
            break;
        }
        let (next, stepsize) = step(mdp, kind, rule, &pi, &eval)?;
        if next == pi {
            stop_reason = StopReason::Stationary;
            break;
        }
        let next_eval = PolicyEvaluation::new(mdp, &next)?;
        let improved = next_eval.values.dominated_by(&eval.values, IMPROVEMENT_TOL);
        records.push(record(
            mdp, t, &next, &next_eval, jstar, stepsize, improved,
        )?);
        pi = next;
        eval = next_eval;
    }
    if stop_reason == StopReason::MaxIterations
        && records.last().is_some_and(|r| r.sup_gap <= gap_tolerance)
    {
        stop_reason = StopReason::GapTolerance;
    }

    Ok(IterateTrace {
        algorithm: kind,
        rule,
        optimal_loss: loss_from_values(mdp, jstar),
        stop_reason,
        records,
    })
}

fn step(
    mdp: &TabularMdp,
    kind: AlgorithmKind,
    rule: StepsizeRule,
    pi: &Policy,
    eval: &PolicyEvaluation,
) -> Result<(Policy, f64)> {
    if kind == AlgorithmKind::PolicyIteration {
        return Ok((greedy_policy(&eval.q), f64::INFINITY));
    }
    match rule {
        StepsizeRule::Constant { alpha } => {
            let greedy = greedy_policy(&eval.q);
            Ok((curve_point(kind, pi, eval, &greedy, alpha)?, alpha))
        }
        StepsizeRule::ExactLineSearch {
            grid_points,
            refinement_rounds,
        } => {
            let outcome = search_curve(mdp, pi, eval, kind, grid_points, refinement_rounds)?;
            Ok((outcome.policy, outcome.alpha))
        }
    }
}

fn record(
    mdp: &TabularMdp,
    iter: usize,
    pi: &Policy,
    eval: &PolicyEvaluation,
    jstar: &ValueFunction,
    stepsize: f64,
    elementwise_improvement: bool,
) -> Result<IterateRecord> {
    let tj = apply_optimal_bellman(mdp, &eval.values)?;
    Ok(IterateRecord {
        iter,
        loss: loss_from_values(mdp, &eval.values),
        sup_gap: eval.values.sup_distance(jstar),
        stepsize,
        bellman_residual: tj.sup_distance(&eval.values),
        elementwise_improvement,
        policy: pi.clone(),
        values: eval.values.clone(),
    })
}

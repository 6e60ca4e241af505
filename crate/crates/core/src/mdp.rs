//! Data model: the tabular MDP, stochastic policies and the per-state /
//! per-state-action arrays produced by policy evaluation.
//!
//! All arrays are stored flat in row-major order. `cost` is `n x k`,
//! `transitions` is `n x k x n` and policies are `n x k`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric tolerances used by validation and post-condition checks.
///
/// The defaults are the values the rest of the crate is tested against;
/// they can be overridden per MDP with [`TabularMdp::with_tolerances`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Row-sum tolerance for transition rows and `rho`.
    pub stochastic: f64,
    /// Row-sum tolerance for policies.
    pub policy_row: f64,
    /// Relative residual tolerance for linear solves and fixed-point checks.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stochastic: 1e-12,
            policy_row: 1e-10,
            residual: 1e-10,
        }
    }
}

/// A finite discounted MDP `(S, A, g, P, gamma, rho)` with `n` states and
/// `k` deterministic actions per state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    cost: Vec<f64>,
    transitions: Vec<f64>,
    gamma: f64,
    rho: Vec<f64>,
    tolerances: Tolerances,
}

impl TabularMdp {
    /// Builds and validates an MDP from flat row-major arrays.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        cost: Vec<f64>,
        transitions: Vec<f64>,
        gamma: f64,
        rho: Vec<f64>,
    ) -> Result<Self> {
        Self::with_tolerances(
            n_states,
            n_actions,
            cost,
            transitions,
            gamma,
            rho,
            Tolerances::default(),
        )
    }

    pub fn with_tolerances(
        n_states: usize,
        n_actions: usize,
        cost: Vec<f64>,
        transitions: Vec<f64>,
        gamma: f64,
        rho: Vec<f64>,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let mdp = Self {
            n_states,
            n_actions,
            cost,
            transitions,
            gamma,
            rho,
            tolerances,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        let (n, k) = (self.n_states, self.n_actions);
        if n == 0 {
            return Err(Error::InvalidMdp("n_states must be positive".into()));
        }
        if k == 0 {
            return Err(Error::InvalidMdp("n_actions must be positive".into()));
        }
        if self.cost.len() != n * k {
            return Err(Error::DimensionMismatch {
                what: "cost",
                expected: n * k,
                got: self.cost.len(),
            });
        }
        if self.transitions.len() != n * k * n {
            return Err(Error::DimensionMismatch {
                what: "transitions",
                expected: n * k * n,
                got: self.transitions.len(),
            });
        }
        if self.rho.len() != n {
            return Err(Error::DimensionMismatch {
                what: "rho",
                expected: n,
                got: self.rho.len(),
            });
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidMdp(format!(
                "gamma = {} must lie in the open interval (0, 1)",
                self.gamma
            )));
        }
        for s in 0..n {
            for i in 0..k {
                let c = self.cost[s * k + i];
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidMdp(format!(
                        "cost[{s}][{i}] = {c} must be finite and nonnegative"
                    )));
                }
                let row = self.transition_row(s, i);
                if let Some((t, p)) = row
                    .iter()
                    .enumerate()
                    .find(|(_, p)| !p.is_finite() || **p < 0.0)
                {
                    return Err(Error::InvalidMdp(format!(
                        "transitions[{s}][{i}][{t}] = {p} must be finite and nonnegative"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > self.tolerances.stochastic {
                    return Err(Error::InvalidMdp(format!(
                        "transitions[{s}][{i}] sums to {sum}, not 1"
                    )));
                }
            }
        }
        if let Some((s, r)) = self
            .rho
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || **r <= 0.0)
        {
            return Err(Error::InvalidMdp(format!(
                "rho[{s}] = {r} must be strictly positive"
            )));
        }
        let rho_sum: f64 = self.rho.iter().sum();
        if (rho_sum - 1.0).abs() > self.tolerances.stochastic {
            return Err(Error::InvalidMdp(format!("rho sums to {rho_sum}, not 1")));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn rho_min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// `g(s, e_i)`.
    pub fn cost(&self, s: usize, i: usize) -> f64 {
        self.cost[s * self.n_actions + i]
    }

    /// Costs of all actions at state `s`.
    pub fn cost_row(&self, s: usize) -> &[f64] {
        let k = self.n_actions;
        &self.cost[s * k..(s + 1) * k]
    }

    pub fn max_cost(&self) -> f64 {
        self.cost.iter().copied().fold(0.0, f64::max)
    }

    /// `P(. | s, e_i)` as a length-`n` slice.
    pub fn transition_row(&self, s: usize, i: usize) -> &[f64] {
        let n = self.n_states;
        let start = (s * self.n_actions + i) * n;
        &self.transitions[start..start + n]
    }

    /// Errors unless `pi` has this MDP's `n x k` shape.
    pub fn check_policy(&self, pi: &Policy) -> Result<()> {
        if pi.n_states() != self.n_states {
            return Err(Error::DimensionMismatch {
                what: "policy states",
                expected: self.n_states,
                got: pi.n_states(),
            });
        }
        if pi.n_actions() != self.n_actions {
            return Err(Error::DimensionMismatch {
                what: "policy actions",
                expected: self.n_actions,
                got: pi.n_actions(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_state_vector(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.n_states {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.n_states,
                got: len,
            });
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MdpFile = serde_json::from_str(text)?;
        file.into_mdp()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        // Serializing plain numeric vectors cannot fail.
        serde_json::to_string_pretty(&MdpFile::from(self)).expect("mdp serializes")
    }

    pub fn write_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json_string();
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// On-disk MDP layout: nested arrays, one JSON document.
#[derive(Debug, Serialize, Deserialize)]
struct MdpFile {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rho: Vec<f64>,
    cost: Vec<Vec<f64>>,
    transitions: Vec<Vec<Vec<f64>>>,
}

impl MdpFile {
    fn into_mdp(self) -> Result<TabularMdp> {
        let (n, k) = (self.n_states, self.n_actions);
        if self.cost.len() != n {
            return Err(Error::InvalidMdp(format!(
                "cost has {} rows, expected {n}",
                self.cost.len()
            )));
        }
        if let Some((s, row)) = self.cost.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::InvalidMdp(format!(
                "cost[{s}] has {} entries, expected {k}",
                row.len()
            )));
        }
        if self.transitions.len() != n {
            return Err(Error::InvalidMdp(format!(
                "transitions has {} rows, expected {n}",
                self.transitions.len()
            )));
        }
        for (s, per_state) in self.transitions.iter().enumerate() {
            if per_state.len() != k {
                return Err(Error::InvalidMdp(format!(
                    "transitions[{s}] has {} entries, expected {k}",
                    per_state.len()
                )));
            }
            if let Some((i, row)) = per_state.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(Error::InvalidMdp(format!(
                    "transitions[{s}][{i}] has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let cost = self.cost.into_iter().flatten().collect();
        let transitions = self.transitions.into_iter().flatten().flatten().collect();
        TabularMdp::new(n, k, cost, transitions, self.gamma, self.rho)
    }
}

impl From<&TabularMdp> for MdpFile {
    fn from(mdp: &TabularMdp) -> Self {
        let (n, k) = (mdp.n_states, mdp.n_actions);
        Self {
            n_states: n,
            n_actions: k,
            gamma: mdp.gamma,
            rho: mdp.rho.clone(),
            cost: (0..n).map(|s| mdp.cost_row(s).to_vec()).collect(),
            transitions: (0..n)
                .map(|s| (0..k).map(|i| mdp.transition_row(s, i).to_vec()).collect())
                .collect(),
        }
    }
}

/// A stationary stochastic policy: an `n x k` row-stochastic matrix,
/// i.e. a point of the product of simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    /// Validates nonnegativity and row sums (within 1e-10).
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(n_states, n_actions, probs, Tolerances::default().policy_row)
    }

    pub fn with_tolerance(
        n_states: usize,
        n_actions: usize,
        probs: Vec<f64>,
        row_tolerance: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidPolicy("empty policy".into()));
        }
        if probs.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch {
                what: "policy entries",
                expected: n_states * n_actions,
                got: probs.len(),
            });
        }
        let pi = Self {
            n_states,
            n_actions,
            probs,
        };
        for s in 0..n_states {
            let row = pi.row(s);
            if let Some((i, p)) = row
                .iter()
                .enumerate()
                .find(|(_, p)| !p.is_finite() || **p < 0.0)
            {
                return Err(Error::InvalidPolicy(format!(
                    "pi[{s}][{i}] = {p} must be finite and nonnegative"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > row_tolerance {
                return Err(Error::InvalidPolicy(format!(
                    "row {s} sums to {sum}, not 1"
                )));
            }
        }
        Ok(pi)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if let Some((s, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::InvalidPolicy(format!(
                "row {s} has {} entries, expected {k}",
                r.len()
            )));
        }
        Self::new(n, k, rows.concat())
    }

    /// `pi(s, i) = 1/k` everywhere.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Point mass on `actions[s]` at every state.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        if let Some((s, a)) = actions.iter().enumerate().find(|(_, a)| **a >= n_actions) {
            return Err(Error::InvalidArgument(format!(
                "action {a} at state {s} out of range for {n_actions} actions"
            )));
        }
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * n_actions + a] = 1.0;
        }
        Self::new(actions.len(), n_actions, probs)
    }

    /// Constructs without validation; callers guarantee row-stochasticity.
    pub(crate) fn from_raw(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), n_states * n_actions);
        Self {
            n_states,
            n_actions,
            probs,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, i: usize) -> f64 {
        self.probs[s * self.n_actions + i]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let k = self.n_actions;
        &self.probs[s * k..(s + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Returns `Some(actions)` if every row is a point mass.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        (0..self.n_states)
            .map(|s| {
                let row = self.row(s);
                let a = row.iter().position(|&p| p == 1.0)?;
                row.iter()
                    .enumerate()
                    .all(|(i, &p)| i == a || p == 0.0)
                    .then_some(a)
            })
            .collect()
    }
}

/// Per-state cost-to-go `J(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(Vec<f64>);

impl ValueFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n_states: usize) -> Self {
        Self(vec![0.0; n_states])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `||self - other||_inf`.
    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        sup_distance(&self.0, &other.0)
    }

    /// Elementwise `self <= other + tol`.
    pub fn dominated_by(&self, other: &ValueFunction, tol: f64) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + tol)
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// State-action cost-to-go `Q(s, e_i)`, `n x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    n_actions: usize,
    values: Vec<f64>,
}

impl QFunction {
    pub fn new(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch {
                what: "q-function entries",
                expected: n_states * n_actions,
                got: values.len(),
            });
        }
        Ok(Self { n_actions, values })
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, i: usize) -> f64 {
        self.values[s * self.n_actions + i]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let k = self.n_actions;
        &self.values[s * k..(s + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lowest index attaining `min_i Q(s, i)`.
    pub fn greedy_action(&self, s: usize) -> usize {
        argmin_first(self.row(s))
    }
}

/// Index of the first minimal entry. NaNs never win.
pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Discounted state-occupancy distribution `eta_pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure(Vec<f64>);

impl OccupancyMeasure {
    pub fn new(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `d loss / d pi(s, i) = eta(s) Q(s, i)`, `n x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    n_actions: usize,
    values: Vec<f64>,
}

impl GradientMatrix {
    pub(crate) fn from_raw(n_actions: usize, values: Vec<f64>) -> Self {
        Self { n_actions, values }
    }

    pub fn get(&self, s: usize, i: usize) -> f64 {
        self.values[s * self.n_actions + i]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let k = self.n_actions;
        &self.values[s * k..(s + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Frobenius inner product with a direction of the same shape.
    pub fn dot(&self, direction: &[f64]) -> f64 {
        self.values.iter().zip(direction).map(|(g, d)| g * d).sum()
    }
}

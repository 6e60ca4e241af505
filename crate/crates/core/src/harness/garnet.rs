//! Garnet random-MDP generator.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64`. Draw order, per state `s` then action `i`: a partial
//! Fisher-Yates shuffle of `0..n` picks `b` distinct successors (`b` calls
//! to `random_range`), then `b` uniforms give Dirichlet(1, ..., 1) weights
//! via normalized `-ln(1 - u)`, then one uniform gives the cost. `rho` is
//! drawn last when it is random.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// Floor applied to random initial distributions before renormalizing.
pub const RHO_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoSpec {
    Uniform,
    RandomDirichlet,
}

impl fmt::Display for RhoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RhoSpec::Uniform => "uniform",
            RhoSpec::RandomDirichlet => "random-dirichlet",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarnetSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching_factor: usize,
    pub gamma: f64,
    #[serde(default = "default_cost_range")]
    pub cost_range: [f64; 2],
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    pub seed: u64,
}

fn default_cost_range() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_rho() -> RhoSpec {
    RhoSpec::Uniform
}

impl GarnetSpec {
    /// Costs uniform on `[0, 1]`, uniform `rho`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        branching_factor: usize,
        gamma: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_states,
            n_actions,
            branching_factor,
            gamma,
            cost_range: default_cost_range(),
            rho: default_rho(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::config("n_states", "must be positive"));
        }
        if self.n_actions == 0 {
            return Err(Error::config("n_actions", "must be positive"));
        }
        if self.branching_factor == 0 || self.branching_factor > self.n_states {
            return Err(Error::config(
                "branching_factor",
                format!(
                    "{} must lie in [1, n_states = {}]",
                    self.branching_factor, self.n_states
                ),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(
                "gamma",
                format!("{} must lie in (0, 1)", self.gamma),
            ));
        }
        let [lo, hi] = self.cost_range;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo) {
            return Err(Error::config(
                "cost_range",
                format!("[{lo}, {hi}] must satisfy 0 <= lo <= hi < inf"),
            ));
        }
        Ok(())
    }
}

impl FromStr for GarnetSpec {
    type Err = Error;

    /// Parses `n=10,k=5,b=3,gamma=0.9,seed=42[,cost=0:1][,rho=uniform]`.
    /// Long field names (`n_states`, `branching_factor`, ...) also work.
    fn from_str(text: &str) -> Result<Self> {
        let mut n = None;
        let mut k = None;
        let mut b = None;
        let mut gamma = None;
        let mut seed = None;
        let mut cost_range = default_cost_range();
        let mut rho = default_rho();

        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::config(part, "expected key=value"))?;
            let parse_usize = |field: &str| {
                value
                    .parse::<usize>()
                    .map_err(|e| Error::config(field, e.to_string()))
            };
            match key.trim() {
                "n" | "n_states" => n = Some(parse_usize("n_states")?),
                "k" | "n_actions" => k = Some(parse_usize("n_actions")?),
                "b" | "branching_factor" => b = Some(parse_usize("branching_factor")?),
                "gamma" => {
                    gamma = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| Error::config("gamma", e.to_string()))?,
                    )
                }
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|e| Error::config("seed", e.to_string()))?,
                    )
                }
                "cost" | "cost_range" => {
                    let (lo, hi) = value
                        .split_once(':')
                        .ok_or_else(|| Error::config("cost_range", "expected lo:hi"))?;
                    let parse = |v: &str| {
                        v.parse::<f64>()
                            .map_err(|e| Error::config("cost_range", e.to_string()))
                    };
                    cost_range = [parse(lo)?, parse(hi)?];
                }
                "rho" => {
                    rho = match value {
                        "uniform" => RhoSpec::Uniform,
                        "random-dirichlet" => RhoSpec::RandomDirichlet,
                        other => {
                            return Err(Error::config("rho", format!("unknown variant `{other}`")))
                        }
                    }
                }
                other => return Err(Error::config(other, "unknown garnet parameter")),
            }
        }
        let spec = GarnetSpec {
            n_states: n.ok_or_else(|| Error::config("n_states", "missing"))?,
            n_actions: k.ok_or_else(|| Error::config("n_actions", "missing"))?,
            branching_factor: b.ok_or_else(|| Error::config("branching_factor", "missing"))?,
            gamma: gamma.ok_or_else(|| Error::config("gamma", "missing"))?,
            cost_range,
            rho,
            seed: seed.ok_or_else(|| Error::config("seed", "missing"))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Draws a Garnet instance. Identical specs give identical instances.
pub fn generate_garnet(spec: &GarnetSpec) -> Result<TabularMdp> {
    spec.validate()?;
    let (n, k, b) = (spec.n_states, spec.n_actions, spec.branching_factor);
    let [lo, hi] = spec.cost_range;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);

    let mut cost = Vec::with_capacity(n * k);
    let mut transitions = vec![0.0; n * k * n];
    let mut states: Vec<usize> = (0..n).collect();
    for s in 0..n {
        for i in 0..k {
            for m in 0..b {
                let j = rng.random_range(m..n);
                states.swap(m, j);
            }
            let weights = dirichlet_ones(&mut rng, b);
            let row = &mut transitions[(s * k + i) * n..(s * k + i + 1) * n];
            for (&t, w) in states[..b].iter().zip(weights) {
                row[t] = w;
            }
            cost.push(lo + (hi - lo) * rng.random::<f64>());
        }
    }

    let rho = match spec.rho {
        RhoSpec::Uniform => vec![1.0 / n as f64; n],
        RhoSpec::RandomDirichlet => {
            let clipped: Vec<f64> = dirichlet_ones(&mut rng, n)
                .into_iter()
                .map(|r| r.max(RHO_FLOOR))
                .collect();
            let total: f64 = clipped.iter().sum();
            clipped.into_iter().map(|r| r / total).collect()
        }
    };

    TabularMdp::new(n, k, cost, transitions, spec.gamma, rho)
}

fn dirichlet_ones(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.into_iter().map(|d| d / total).collect()
    } else {
        // Every draw was exactly zero; fall back to the Dirichlet mean.
        vec![1.0 / len as f64; len]
    }
}

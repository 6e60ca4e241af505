//! Experiment configuration, read from a JSON document:
//!
//! ```json
//! {
//!   "mdp": { "garnet": { "n_states": 10, "n_actions": 5, "branching_factor": 3,
//!                        "gamma": 0.9, "seed": 42 } },
//!   "algorithms": [
//!     { "algorithm": "policy_iteration" },
//!     { "algorithm": "frank_wolfe", "stepsize": { "constant": 0.5 } },
//!     { "algorithm": "npg", "stepsize": { "line_search": {} } }
//!   ],
//!   "max_iters": 200,
//!   "gap_tolerance": 0.0,
//!   "output_dir": "out"
//! }
//! ```
//!
//! `mdp` may instead be `{ "file": "instance.json" }`. Paths are used as
//! given, relative to the working directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algorithms::{AlgorithmKind, StepsizeRule};
use crate::error::{Error, Result};
use crate::harness::garnet::{generate_garnet, GarnetSpec};
use crate::mdp::TabularMdp;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdpSource {
    File(PathBuf),
    Garnet(GarnetSpec),
}

impl MdpSource {
    pub fn load(&self) -> Result<TabularMdp> {
        match self {
            MdpSource::File(path) => TabularMdp::from_json_file(path),
            MdpSource::Garnet(spec) => generate_garnet(spec),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum StepsizeEntry {
    Constant(f64),
    LineSearch {
        #[serde(default = "default_grid_points")]
        grid_points: usize,
        #[serde(default = "default_refinement_rounds")]
        refinement_rounds: usize,
    },
}

fn default_grid_points() -> usize {
    StepsizeRule::DEFAULT_GRID_POINTS
}

fn default_refinement_rounds() -> usize {
    StepsizeRule::DEFAULT_REFINEMENT_ROUNDS
}

impl From<StepsizeEntry> for StepsizeRule {
    fn from(entry: StepsizeEntry) -> Self {
        match entry {
            StepsizeEntry::Constant(alpha) => StepsizeRule::Constant { alpha },
            StepsizeEntry::LineSearch {
                grid_points,
                refinement_rounds,
            } => StepsizeRule::ExactLineSearch {
                grid_points,
                refinement_rounds,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmEntry {
    algorithm: String,
    stepsize: Option<StepsizeEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    mdp: MdpSource,
    algorithms: Vec<AlgorithmEntry>,
    max_iters: usize,
    #[serde(default)]
    gap_tolerance: f64,
    output_dir: PathBuf,
}

/// One (algorithm, stepsize) cell of an experiment. Policy iteration has no
/// stepsize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    pub rule: Option<StepsizeRule>,
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind, rule: StepsizeRule) -> Self {
        Self {
            kind,
            rule: Some(rule),
        }
    }

    pub fn policy_iteration() -> Self {
        Self {
            kind: AlgorithmKind::PolicyIteration,
            rule: None,
        }
    }

    /// Stepsize label used in file names and reports.
    pub fn rule_label(&self) -> String {
        self.rule
            .map_or_else(|| "greedy".to_string(), |r| r.label())
    }

    /// `<algo>_<rule>`, the stem of the trace file.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.kind.label(), self.rule_label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mdp_source: MdpSource,
    pub algorithms: Vec<AlgorithmConfig>,
    pub max_iters: usize,
    pub gap_tolerance: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: ConfigFile = serde_json::from_str(text)?;
        let mut algorithms = Vec::with_capacity(raw.algorithms.len());
        for (idx, entry) in raw.algorithms.into_iter().enumerate() {
            let kind = AlgorithmKind::from_label(&entry.algorithm).ok_or_else(|| {
                Error::config(
                    format!("algorithms[{idx}].algorithm"),
                    format!("unknown algorithm `{}`", entry.algorithm),
                )
            })?;
            let rule = entry.stepsize.map(StepsizeRule::from);
            algorithms.push(AlgorithmConfig { kind, rule });
        }
        let config = Self {
            mdp_source: raw.mdp,
            algorithms,
            max_iters: raw.max_iters,
            gap_tolerance: raw.gap_tolerance,
            output_dir: raw.output_dir,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let MdpSource::Garnet(spec) = &self.mdp_source {
            spec.validate()?;
        }
        if self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithms",
                "at least one entry is required",
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters", "must be positive"));
        }
        if self.gap_tolerance.is_nan() || self.gap_tolerance < 0.0 {
            return Err(Error::config("gap_tolerance", "must be nonnegative"));
        }
        let mut stems = HashSet::new();
        for (idx, cell) in self.algorithms.iter().enumerate() {
            let field = format!("algorithms[{idx}].stepsize");
            match (cell.kind, cell.rule) {
                (AlgorithmKind::PolicyIteration, Some(_)) => {
                    return Err(Error::config(field, "policy iteration takes no stepsize"))
                }
                (AlgorithmKind::PolicyIteration, None) => {}
                (_, None) => return Err(Error::config(field, "missing")),
                (kind, Some(rule)) => rule
                    .validate_for(kind)
                    .map_err(|e| Error::config(field, e.to_string()))?,
            }
            if !stems.insert(cell.file_stem()) {
                return Err(Error::config(
                    format!("algorithms[{idx}]"),
                    format!("duplicate entry `{}`", cell.file_stem()),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "mdp": { "garnet": { "n_states": 10, "n_actions": 5, "branching_factor": 3,
                             "gamma": 0.9, "seed": 42 } },
        "algorithms": [
            { "algorithm": "policy_iteration" },
            { "algorithm": "frank_wolfe", "stepsize": { "constant": 0.5 } },
            { "algorithm": "pgd_unweighted", "stepsize": { "line_search": { "grid_points": 9 } } },
            { "algorithm": "npg", "stepsize": { "line_search": {} } }
        ],
        "max_iters": 200,
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_example() {
        let config = ExperimentConfig::from_json_str(EXAMPLE).unwrap();
        assert_eq!(config.algorithms.len(), 4);
        assert_eq!(config.algorithms[0], AlgorithmConfig::policy_iteration());
        assert_eq!(config.algorithms[1].file_stem(), "frank_wolfe_constant-0.5");
        assert_eq!(
            config.algorithms[2].rule,
            Some(StepsizeRule::ExactLineSearch {
                grid_points: 9,
                refinement_rounds: 20
            })
        );
        assert_eq!(config.algorithms[3].rule, Some(StepsizeRule::line_search()));
        assert_eq!(config.gap_tolerance, 0.0);
        assert_eq!(config.algorithms[0].file_stem(), "policy_iteration_greedy");
    }

    fn with_algorithms(entries: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json_str(&format!(
            r#"{{"mdp": {{"file": "x.json"}}, "algorithms": [{entries}],
                "max_iters": 5, "output_dir": "o"}}"#
        ))
    }

    #[test]
    fn rejects_invalid_cells() {
        let cases = [
            (
                r#"{"algorithm": "sgd", "stepsize": {"constant": 0.1}}"#,
                "algorithms[0].algorithm",
            ),
            (
                r#"{"algorithm": "frank_wolfe", "stepsize": {"constant": 1.5}}"#,
                "algorithms[0].stepsize",
            ),
            (
                r#"{"algorithm": "mirror_descent"}"#,
                "algorithms[0].stepsize",
            ),
            (
                r#"{"algorithm": "policy_iteration", "stepsize": {"constant": 1.0}}"#,
                "algorithms[0].stepsize",
            ),
            (
                r#"{"algorithm": "npg", "stepsize": {"line_search": {}}},
                   {"algorithm": "npg", "stepsize": {"line_search": {"grid_points": 5}}}"#,
                "algorithms[1]",
            ),
        ];
        for (entries, field) in cases {
            let msg = with_algorithms(entries).unwrap_err().to_string();
            assert!(msg.contains(field), "{msg}");
        }
        assert!(with_algorithms("").is_err());
    }

    #[test]
    fn rejects_bad_garnet_spec() {
        let text = EXAMPLE.replace("\"branching_factor\": 3", "\"branching_factor\": 11");
        let msg = ExperimentConfig::from_json_str(&text)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("branching_factor"), "{msg}");
    }
}

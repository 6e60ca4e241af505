//! Suite execution, trace CSV files and the bound-audit report.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{run_with_optimum, AlgorithmKind, IterateTrace, StepsizeRule};
use crate::bellman::compute_optimal;
use crate::error::{Error, Result};
use crate::harness::config::{AlgorithmConfig, ExperimentConfig};
use crate::mdp::{Policy, TabularMdp};
use crate::verification::{
    policy_iteration_report, theorem_1a_report, theorem_1b_report, BoundKind, BoundReport,
};

pub const TRACE_HEADER: &str =
    "iter,loss,sup_gap,stepsize,bellman_residual,elementwise_improvement";
pub const REPORT_FILE: &str = "report.json";
pub const MDP_FILE: &str = "mdp.json";

/// One `report.json` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub algorithm: String,
    pub stepsize_rule: String,
    pub bound_kind: BoundKind,
    pub satisfied: bool,
    pub worst_slack: f64,
    pub rho_min: f64,
    pub gamma: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub entries: Vec<ReportEntry>,
    pub traces: Vec<PathBuf>,
    pub report: PathBuf,
}

impl ExperimentSummary {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    /// 0 iff every applicable audit passed.
    pub fn exit_code(&self) -> i32 {
        if self.all_satisfied() {
            0
        } else {
            1
        }
    }
}

/// The bound that applies to a configuration, if any. Constant-stepsize
/// PGD, mirror descent and NPG carry no audited guarantee.
pub fn applicable_bound(cell: &AlgorithmConfig) -> Option<BoundKind> {
    match (cell.kind, cell.rule) {
        (AlgorithmKind::PolicyIteration, _) => Some(BoundKind::PolicyIterationGamma),
        (AlgorithmKind::FrankWolfe, Some(StepsizeRule::Constant { .. })) => {
            Some(BoundKind::Theorem1b)
        }
        (_, Some(StepsizeRule::ExactLineSearch { .. })) => Some(BoundKind::Theorem1a),
        _ => None,
    }
}

/// Audits a trace against the bound that applies to `cell`.
pub fn audit_trace(
    mdp: &TabularMdp,
    cell: &AlgorithmConfig,
    trace: &IterateTrace,
) -> Option<BoundReport> {
    let gaps = trace.gaps();
    let gap0 = trace.initial_gap();
    let gamma = mdp.gamma();
    match applicable_bound(cell)? {
        BoundKind::PolicyIterationGamma => Some(policy_iteration_report(&gaps, gamma, gap0)),
        BoundKind::Theorem1b => match cell.rule {
            Some(StepsizeRule::Constant { alpha }) => {
                Some(theorem_1b_report(&gaps, alpha, gamma, gap0))
            }
            _ => None,
        },
        BoundKind::Theorem1a => Some(theorem_1a_report(&gaps, mdp.rho_min(), gamma, gap0)),
    }
}

/// Runs every configured cell from the uniform policy, writes
/// `<algo>_<rule>.csv` per cell, `mdp.json` and `report.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let mdp = config.mdp_source.load()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    mdp.write_json_file(dir.join(MDP_FILE))?;

    let (jstar, _) = compute_optimal(&mdp)?;
    let pi0 = Policy::uniform(mdp.n_states(), mdp.n_actions());
    let mut entries = Vec::new();
    let mut traces = Vec::new();

    for cell in &config.algorithms {
        // Policy iteration ignores the rule; any valid one will do.
        let rule = cell.rule.unwrap_or(StepsizeRule::Constant { alpha: 1.0 });
        let trace = run_with_optimum(
            &mdp,
            cell.kind,
            rule,
            &pi0,
            config.max_iters,
            config.gap_tolerance,
            &jstar,
        )?;
        let path = dir.join(format!("{}.csv", cell.file_stem()));
        write_trace_csv(&path, &trace)?;
        traces.push(path);

        if let Some(report) = audit_trace(&mdp, cell, &trace) {
            entries.push(ReportEntry {
                algorithm: cell.kind.label().to_string(),
                stepsize_rule: cell.rule_label(),
                bound_kind: report.bound_kind,
                satisfied: report.satisfied,
                worst_slack: report.worst_slack,
                rho_min: mdp.rho_min(),
                gamma: mdp.gamma(),
                iterations: report.iterations(),
            });
        }
    }

    let report = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(&entries)?;
    text.push('\n');
    std::fs::write(&report, text).map_err(|e| Error::io(&report, e))?;

    Ok(ExperimentSummary {
        entries,
        traces,
        report,
    })
}

/// 17 significant digits; `inf` for the closure-point stepsize.
fn format_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_trace_csv(path: &Path, trace: &IterateTrace) -> Result<()> {
    let mut out = String::with_capacity(96 * trace.records.len() + TRACE_HEADER.len());
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iter,
            format_float(r.loss),
            format_float(r.sup_gap),
            format_float(r.stepsize),
            format_float(r.bellman_residual),
            r.elementwise_improvement
        ));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// One parsed row of a trace CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub loss: f64,
    pub sup_gap: f64,
    pub stepsize: f64,
    pub bellman_residual: f64,
    pub elementwise_improvement: bool,
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != TRACE_HEADER {
        return Err(Error::InvalidArgument(format!(
            "{} does not have the trace header `{TRACE_HEADER}`",
            path.display()
        )));
    }
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<TraceRow>, _>>()?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} contains no iterations",
            path.display()
        )));
    }
    Ok(rows)
}

/// Bound selected on the command line for re-auditing a trace file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuditBound {
    Theorem1a,
    /// `alpha = None` infers the constant stepsize from the trace.
    Theorem1b {
        alpha: Option<f64>,
    },
    PolicyIteration,
}

/// Re-audits a trace CSV against `mdp`. The initial gap is taken from the
/// `t = 0` row.
pub fn audit_trace_file(trace: &Path, mdp: &TabularMdp, bound: AuditBound) -> Result<BoundReport> {
    let rows = read_trace_csv(trace)?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.sup_gap).collect();
    let gap0 = gaps[0];
    let gamma = mdp.gamma();
    Ok(match bound {
        AuditBound::Theorem1a => theorem_1a_report(&gaps, mdp.rho_min(), gamma, gap0),
        AuditBound::PolicyIteration => policy_iteration_report(&gaps, gamma, gap0),
        AuditBound::Theorem1b { alpha } => {
            let alpha = match alpha {
                Some(a) => a,
                None => infer_constant_stepsize(&rows)?,
            };
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "frank-wolfe stepsize {alpha} must lie in (0, 1]"
                )));
            }
            theorem_1b_report(&gaps, alpha, gamma, gap0)
        }
    })
}

fn infer_constant_stepsize(rows: &[TraceRow]) -> Result<f64> {
    let mut steps = rows[1..].iter().map(|r| r.stepsize);
    let first = steps.next().ok_or_else(|| {
        Error::InvalidArgument("cannot infer a stepsize from a trace with no steps".into())
    })?;
    if steps.all(|a| a == first) {
        Ok(first)
    } else {
        Err(Error::InvalidArgument(
            "trace stepsizes are not constant; pass alpha explicitly".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::MdpSource;
    use crate::harness::garnet::GarnetSpec;

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        for x in [0.1, 1.0 / 3.0, 123456.789, 2.5e-300] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn bounds_per_configuration() {
        let fw = AlgorithmConfig::new(
            AlgorithmKind::FrankWolfe,
            StepsizeRule::Constant { alpha: 0.5 },
        );
        assert_eq!(applicable_bound(&fw), Some(BoundKind::Theorem1b));
        let md = AlgorithmConfig::new(
            AlgorithmKind::MirrorDescent,
            StepsizeRule::Constant { alpha: 5.0 },
        );
        assert_eq!(applicable_bound(&md), None);
        let ls = AlgorithmConfig::new(AlgorithmKind::MirrorDescent, StepsizeRule::line_search());
        assert_eq!(applicable_bound(&ls), Some(BoundKind::Theorem1a));
        assert_eq!(
            applicable_bound(&AlgorithmConfig::policy_iteration()),
            Some(BoundKind::PolicyIterationGamma)
        );
    }

    #[test]
    fn trace_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            mdp_source: MdpSource::Garnet(GarnetSpec::new(4, 3, 2, 0.9, 5)),
            algorithms: vec![AlgorithmConfig::new(
                AlgorithmKind::FrankWolfe,
                StepsizeRule::Constant { alpha: 0.5 },
            )],
            max_iters: 30,
            gap_tolerance: 0.0,
            output_dir: dir.path().to_path_buf(),
        };
        let summary = run_experiment(&config).unwrap();
        let rows = read_trace_csv(&summary.traces[0]).unwrap();
        assert_eq!(rows[0].iter, 0);
        assert_eq!(rows[1].stepsize, 0.5);
        let mdp = TabularMdp::from_json_file(dir.path().join(MDP_FILE)).unwrap();
        let report = audit_trace_file(
            &summary.traces[0],
            &mdp,
            AuditBound::Theorem1b { alpha: None },
        )
        .unwrap();
        assert!(report.satisfied);
        assert_eq!(report.worst_slack, summary.entries[0].worst_slack);
    }

    #[test]
    fn rejects_foreign_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
        std::fs::write(&path, format!("{TRACE_HEADER}\n")).unwrap();
        assert!(read_trace_csv(&path).is_err());
    }
}

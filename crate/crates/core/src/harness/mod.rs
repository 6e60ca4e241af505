//! Instance generation, experiment configuration and the file formats used
//! by the command-line driver.

pub mod config;
pub mod experiment;
pub mod garnet;

pub use config::{AlgorithmConfig, ExperimentConfig, MdpSource};
pub use experiment::{
    applicable_bound, audit_trace, audit_trace_file, read_trace_csv, run_experiment,
    write_trace_csv, AuditBound, ExperimentSummary, ReportEntry, TraceRow, TRACE_HEADER,
};
pub use garnet::{generate_garnet, GarnetSpec, RhoSpec};

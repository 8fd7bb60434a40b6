//! Benchmark harness for the `aidsched` loop schedulers: synthetic
//! workloads, experiment runners, sweeps and reports.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod report;
pub mod schedule_spec;
pub mod sweep;
pub mod workload;

pub use error::{BenchError, Result};
pub use experiment::{Experiment, Mode, ScheduleResult, Stats};
pub use report::{Format, Report};
pub use schedule_spec::{ScheduleDefaults, ScheduleSpec};
pub use workload::{Shape, WorkloadFile, WorkloadSpec};

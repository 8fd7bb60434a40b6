//! Asymmetry-aware parallel loop scheduling.
//!
//! The crate provides:
//!
//! * a lock-free iteration pool ([`iter_pool`]),
//! * the arithmetic of asymmetric iteration distribution ([`sched_math`]),
//! * the static, dynamic and guided baselines plus the AID-static,
//!   AID-hybrid and AID-dynamic schedules as per-thread state machines
//!   ([`schedulers`]),
//! * a threaded parallel-for runtime with core binding and emulated core
//!   asymmetry ([`runtime`]),
//! * a deterministic discrete-event simulator driving the same state
//!   machines ([`simulator`]).
//!
//! Scheduling math is generic over the floating-point type (`f64` by
//! default); the aliases below name the common instantiations.

pub mod error;
pub mod iter_pool;
pub mod runtime;
pub mod scalar;
pub mod sched_math;
pub mod schedulers;
pub mod simulator;
pub mod topology;

pub use error::{Error, Result};
pub use iter_pool::{IterationSpace, SharedPool};
pub use runtime::{Emulation, EnvOverrides, ExecutionMode, LoopReport};
pub use scalar::Scalar;
pub use sched_math::{AllotmentPlan, SamplingAccumulator, SpeedupEstimate};
pub use schedulers::{Phase, ScheduleKind, ThreadLoopState};
pub use simulator::{CostModel, ScaledCost, SimOptions, SimResult};
pub use topology::{Binding, CoreTopology, CoreType};

pub type ScheduleConfig<T = f64> = schedulers::ScheduleConfig<T>;
pub type ScheduleConfig32 = schedulers::ScheduleConfig<f32>;

pub type SharedLoopState<T = f64> = schedulers::SharedLoopState<T>;
pub type SharedLoopState32 = schedulers::SharedLoopState<f32>;

pub type Speedup = SpeedupEstimate<f64>;
pub type Speedup32 = SpeedupEstimate<f32>;

pub type Allotment = AllotmentPlan<f64>;
pub type Allotment32 = AllotmentPlan<f32>;

pub type RuntimeConfig<T = f64> = runtime::RuntimeConfig<T>;
pub type RuntimeConfig32 = runtime::RuntimeConfig<f32>;

pub type Runtime<T = f64> = runtime::Runtime<T>;
pub type Runtime32 = runtime::Runtime<f32>;

//! Loop scheduling policies: the static, dynamic and guided baselines and
//! the asymmetry-aware AID-static, AID-hybrid and AID-dynamic schedules.
//!
//! The same state machines drive the threaded runtime and the simulator.

mod config;
mod machine;
mod transitions;

pub use config::{
    ScheduleConfig, ScheduleKind, DEFAULT_CHUNK, DEFAULT_HYBRID_FRACTION, DEFAULT_MAJOR_CHUNK,
};
pub use machine::{guided_chunk, static_partition, SharedLoopState, ThreadLoopState};
pub use transitions::{check_transitions, is_allowed, Phase, Transition, TransitionViolation};

//! Thread phases of the AID state machines and the edges they may take.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::ScheduleKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    /// Before the thread's first call ("loop begins").
    Start,
    /// Baseline schedules have no state machine.
    Baseline,
    Sampling,
    SamplingWait,
    /// Holding (executing) an AID assignment.
    Aid,
    DynamicTail,
    Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Start => "START",
            Phase::Baseline => "BASELINE",
            Phase::Sampling => "SAMPLING",
            Phase::SamplingWait => "SAMPLING_WAIT",
            Phase::Aid => "AID",
            Phase::DynamicTail => "DYNAMIC_TAIL",
            Phase::Done => "DONE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub thread: usize,
    pub from: Phase,
    pub to: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransitionViolation {
    /// An edge that is not part of the schedule's state diagram.
    IllegalEdge(Transition),
    /// More than one thread took the last-completer edge out of sampling.
    MultipleSamplingCompleters(usize),
}

impl fmt::Display for TransitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionViolation::IllegalEdge(t) => {
                write!(f, "thread {}: illegal edge {} -> {}", t.thread, t.from, t.to)
            }
            TransitionViolation::MultipleSamplingCompleters(n) => {
                write!(f, "{n} threads completed the sampling phase last")
            }
        }
    }
}

/// Whether `from -> to` is an edge of `kind`'s diagram, including the
/// dynamic-tail extension and exhaustion edges into `DONE`.
pub fn is_allowed(kind: ScheduleKind, from: Phase, to: Phase) -> bool {
    use Phase::*;
    if !kind.is_aid() {
        return matches!((from, to), (Start, Baseline) | (Baseline, Baseline) | (Baseline, Done) | (Start, Done));
    }
    let common = matches!(
        (from, to),
        (Start, Sampling)
            | (Sampling, SamplingWait)
            | (Sampling, Aid)
            | (SamplingWait, SamplingWait)
            | (SamplingWait, Aid)
            | (DynamicTail, DynamicTail)
            | (Sampling | SamplingWait | Aid | DynamicTail, Done)
    );
    if common {
        return true;
    }
    match kind {
        ScheduleKind::AidStatic | ScheduleKind::AidHybrid => matches!((from, to), (Aid, DynamicTail)),
        ScheduleKind::AidDynamic => matches!(
            (from, to),
            (Aid, SamplingWait) | (Aid, Aid) | (Sampling | SamplingWait | Aid, DynamicTail)
        ),
        _ => unreachable!(),
    }
}

/// Replays a transition log and reports the first violation.
pub fn check_transitions(kind: ScheduleKind, log: &[Transition]) -> Result<(), TransitionViolation> {
    let mut last_completers = 0;
    for t in log {
        if !is_allowed(kind, t.from, t.to) {
            return Err(TransitionViolation::IllegalEdge(*t));
        }
        if t.from == Phase::Sampling && t.to == Phase::Aid {
            last_completers += 1;
        }
    }
    if last_completers > 1 {
        return Err(TransitionViolation::MultipleSamplingCompleters(last_completers));
    }
    Ok(())
}

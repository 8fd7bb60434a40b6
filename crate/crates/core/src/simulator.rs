//! Deterministic discrete-event simulation of a loop under a schedule.
//!
//! Threads alternate between calling the scheduler (charged a fixed
//! per-call overhead) and executing the returned range (charged the cost
//! model's per-iteration durations for the thread's core type). Time is an
//! integer nanosecond virtual clock; simultaneous events are processed in
//! ascending thread id order, so every run is bit-reproducible.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::iter_pool::IterationSpace;
use crate::scalar::Scalar;
use crate::schedulers::{ScheduleConfig, SharedLoopState, Transition};
use crate::topology::{Binding, CoreTopology};

/// Durations charged by the simulator.
pub trait CostModel {
    /// Duration (ns) of normalized iteration `index` on core type `core_type`.
    fn cost(&self, index: u64, core_type: usize) -> u64;

    /// Duration (ns) charged for every scheduler call.
    fn overhead(&self) -> u64;

    /// Nominal per-type speed ratios, when the model has them.
    fn speed_ratios(&self) -> Option<Vec<f64>> {
        None
    }

    fn range_cost(&self, range: std::ops::Range<u64>, core_type: usize) -> u64 {
        range.map(|i| self.cost(i, core_type)).sum()
    }
}

type CostFn = Arc<dyn Fn(u64) -> u64 + Send + Sync>;

/// Reference cost per iteration (on the slowest core type) divided by a
/// per-type speed ratio.
#[derive(Clone)]
pub struct ScaledCost {
    reference: CostFn,
    speeds: Vec<f64>,
    overhead_ns: u64,
}

impl std::fmt::Debug for ScaledCost {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScaledCost")
            .field("speeds", &self.speeds)
            .field("overhead_ns", &self.overhead_ns)
            .finish_non_exhaustive()
    }
}

impl ScaledCost {
    pub fn new(reference: impl Fn(u64) -> u64 + Send + Sync + 'static, speeds: Vec<f64>) -> Self {
        assert!(!speeds.is_empty());
        assert!(speeds.iter().all(|s| *s > 0.0), "speed ratios must be positive");
        Self {
            reference: Arc::new(reference),
            speeds,
            overhead_ns: 0,
        }
    }

    /// Every iteration costs `ns` on the slowest type.
    pub fn uniform(ns: u64, speeds: Vec<f64>) -> Self {
        Self::new(move |_| ns, speeds)
    }

    /// Uses the topology's nominal speeds.
    pub fn for_topology(reference: impl Fn(u64) -> u64 + Send + Sync + 'static, topo: &CoreTopology) -> Self {
        Self::new(reference, topo.speeds())
    }

    pub fn with_overhead(mut self, ns: u64) -> Self {
        self.overhead_ns = ns;
        self
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn reference_cost(&self, index: u64) -> u64 {
        (self.reference)(index)
    }
}

impl CostModel for ScaledCost {
    #[inline]
    fn cost(&self, index: u64, core_type: usize) -> u64 {
        let base = (self.reference)(index);
        let speed = self.speeds[core_type];
        if speed == 1.0 {
            base
        } else {
            (base as f64 / speed).round() as u64
        }
    }

    fn overhead(&self) -> u64 {
        self.overhead_ns
    }

    fn speed_ratios(&self) -> Option<Vec<f64>> {
        Some(self.speeds.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub thread: usize,
    pub start: u64,
    pub end: u64,
    /// Virtual time of the scheduler call that produced the range.
    pub time_ns: u64,
    /// Unassigned iterations just before the call.
    pub remaining_before: u64,
}

impl TraceEntry {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    pub record_trace: bool,
    pub record_transitions: bool,
}

impl SimOptions {
    pub fn full() -> Self {
        Self {
            record_trace: true,
            record_transitions: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub makespan_ns: u64,
    pub finish_ns: Vec<u64>,
    pub busy_ns: Vec<u64>,
    /// Scheduler calls per thread, including the final empty one.
    pub calls: Vec<u64>,
    pub iterations: Vec<u64>,
    pub thread_types: Vec<usize>,
    pub trace: Vec<TraceEntry>,
    pub transitions: Vec<Transition>,
    /// Speedup factors estimated online by the AID schedules, if any were
    /// published.
    pub estimated_sf: Option<Vec<f64>>,
    /// Speeds of the cost model, for comparison with `estimated_sf`.
    pub model_speeds: Option<Vec<f64>>,
}

impl SimResult {
    pub fn total_iterations(&self) -> u64 {
        self.iterations.iter().sum()
    }

    pub fn wait_ns(&self) -> Vec<u64> {
        self.finish_ns.iter().map(|f| self.makespan_ns - f).collect()
    }

    /// Makespan over mean busy time; 1 is perfect balance.
    pub fn imbalance(&self) -> f64 {
        let mean = self.busy_ns.iter().sum::<u64>() as f64 / self.busy_ns.len() as f64;
        if mean == 0.0 {
            1.0
        } else {
            (self.makespan_ns as f64 / mean).max(1.0)
        }
    }
}

/// Runs one loop under `cfg` on the modeled machine.
pub fn simulate<T: Scalar>(
    space: &IterationSpace,
    cfg: ScheduleConfig<T>,
    topo: &CoreTopology,
    binding: Binding,
    model: &dyn CostModel,
    opts: SimOptions,
) -> Result<SimResult> {
    let thread_types = topo.thread_types(binding);
    let n = thread_types.len();
    let shared = SharedLoopState::new(cfg, topo, thread_types.clone(), space.len())?
        .with_transition_log(opts.record_transitions);
    let mut states: Vec<_> = (0..n).map(|t| shared.thread_state(t)).collect();
    let overhead = model.overhead();

    let mut finish = vec![0u64; n];
    let mut busy = vec![0u64; n];
    let mut trace = Vec::new();
    let mut events: BinaryHeap<Reverse<(u64, usize)>> = (0..n).map(|t| Reverse((0, t))).collect();

    while let Some(Reverse((now, tid))) = events.pop() {
        let remaining_before = shared.pool().remaining();
        let assigned = shared.next_assignment(&mut states[tid], now);
        busy[tid] += overhead;
        match assigned {
            Some(range) => {
                let dur = model.range_cost(range.clone(), thread_types[tid]);
                busy[tid] += dur;
                if opts.record_trace {
                    trace.push(TraceEntry {
                        thread: tid,
                        start: range.start,
                        end: range.end,
                        time_ns: now,
                        remaining_before,
                    });
                }
                events.push(Reverse((now + overhead + dur, tid)));
            }
            None => finish[tid] = now + overhead,
        }
    }

    let estimated_sf = shared
        .estimated_sf()
        .map(|sf| sf.factors().iter().map(|f| f.as_f64()).collect());
    let mut transitions = Vec::new();
    let mut calls = Vec::with_capacity(n);
    let mut iterations = Vec::with_capacity(n);
    for st in states {
        calls.push(st.calls);
        iterations.push(st.iterations);
        transitions.extend(st.transitions);
    }
    Ok(SimResult {
        makespan_ns: finish.iter().copied().max().unwrap_or(0),
        finish_ns: finish,
        busy_ns: busy,
        calls,
        iterations,
        thread_types,
        trace,
        transitions,
        estimated_sf,
        model_speeds: model.speed_ratios(),
    })
}

/// Single-thread completion time of the loop on each core type, as a ratio
/// against the slowest type (entry 0 is 1). NaN for an empty loop.
pub fn offline_sf(space: &IterationSpace, model: &dyn CostModel, type_count: usize) -> Vec<f64> {
    let times: Vec<u64> = (0..type_count)
        .map(|j| model.range_cost(0..space.len(), j))
        .collect();
    times
        .iter()
        .map(|&t| {
            if t == 0 {
                f64::NAN
            } else {
                times[0] as f64 / t as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedulers::ScheduleKind;

    #[test]
    fn static_closed_form() {
        let topo = CoreTopology::big_little(2, 2, 2.0).unwrap();
        let space = IterationSpace::with_len(1000).unwrap();
        let model = ScaledCost::uniform(1000, topo.speeds());
        let res = simulate(
            &space,
            ScheduleConfig::<f64>::new(ScheduleKind::Static),
            &topo,
            Binding::BigFirst,
            &model,
            SimOptions::default(),
        )
        .unwrap();
        assert_eq!(res.makespan_ns, 250 * 1000);
        assert_eq!(res.total_iterations(), 1000);
    }

    #[test]
    fn offline_sf_examples() {
        let space = IterationSpace::with_len(500).unwrap();
        let uniform = ScaledCost::uniform(1000, vec![1.0, 2.0]);
        assert_eq!(offline_sf(&space, &uniform, 2), vec![1.0, 2.0]);
        let linear = ScaledCost::new(|i| 2 * (i + 1), vec![1.0, 2.0]);
        assert_eq!(offline_sf(&space, &linear, 2), vec![1.0, 2.0]);
    }

    /// Big-core speedup that depends on the index: 1x for the first half,
    /// 3x for the second.
    struct Mixed;

    impl CostModel for Mixed {
        fn cost(&self, index: u64, core_type: usize) -> u64 {
            match (core_type, index < 50) {
                (0, _) => 300,
                (_, true) => 300,
                (_, false) => 100,
            }
        }
        fn overhead(&self) -> u64 {
            0
        }
    }

    #[test]
    fn offline_sf_mixed_is_weighted() {
        let space = IterationSpace::with_len(100).unwrap();
        let slow: u64 = (0..100).map(|_| 300).sum();
        let fast: u64 = (0..100).map(|i| if i < 50 { 300 } else { 100 }).sum();
        let sf = offline_sf(&space, &Mixed, 2);
        assert_eq!(sf[1], slow as f64 / fast as f64);
        assert_eq!(sf[1], 1.5);
    }

    #[test]
    fn deterministic() {
        let topo = CoreTopology::big_little(3, 2, 2.5).unwrap();
        let space = IterationSpace::with_len(5000).unwrap();
        let model = ScaledCost::new(|i| 500 + (i * 7919) % 1000, topo.speeds()).with_overhead(30);
        let run = || {
            simulate(
                &space,
                ScheduleConfig::<f64>::new(ScheduleKind::AidDynamic),
                &topo,
                Binding::BigFirst,
                &model,
                SimOptions::full(),
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.finish_ns, b.finish_ns);
        assert_eq!(a.transitions, b.transitions);
    }
}

//! Threaded parallel-for runtime.
//!
//! A [`Runtime`] owns a persistent pool of worker threads, optionally pinned
//! to cores, and executes one loop at a time under a schedule from
//! [`crate::schedulers`]. Each worker reads a monotonic clock once per
//! scheduler call; the timestamps feed the AID sampling phases.

mod affinity;
mod emulation;
mod env;
mod pool;

use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Mutex, TryLockError};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iter_pool::IterationSpace;
use crate::scalar::Scalar;
use crate::schedulers::{Phase, ScheduleConfig, SharedLoopState, ThreadLoopState, Transition};
use crate::simulator::{simulate, CostModel, SimOptions, SimResult};
use crate::topology::{Binding, CoreTopology};

pub use affinity::{bind_threads, pin_current_thread};
pub use emulation::{burn_ns, calibration, pad, spin_for, Emulation};
pub use env::{
    EnvOverrides, ENV_AFFINITY, ENV_CHUNK, ENV_HYBRID_PCT, ENV_MAJOR_CHUNK, ENV_SCHEDULE,
    ENV_TOPOLOGY, ENV_VARS,
};

use pool::WorkerPool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// One OS thread per worker.
    #[default]
    Threaded,
    /// All workers are stepped round-robin in id order on the calling
    /// thread; assignment traces are deterministic.
    Serialized,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeConfig<T: Scalar = f64> {
    pub schedule: ScheduleConfig<T>,
    pub topology: CoreTopology,
    pub binding: Binding,
    pub emulation: Option<Emulation>,
    pub mode: ExecutionMode,
    pub record_trace: bool,
    pub record_transitions: bool,
}

impl<T: Scalar> RuntimeConfig<T> {
    /// Big-first binding, no emulation, threaded.
    pub fn new(schedule: ScheduleConfig<T>, topology: CoreTopology) -> Self {
        Self {
            schedule,
            topology,
            binding: Binding::BigFirst,
            emulation: None,
            mode: ExecutionMode::Threaded,
            record_trace: false,
            record_transitions: false,
        }
    }

    pub fn with_binding(mut self, binding: Binding) -> Self {
        self.binding = binding;
        self
    }

    pub fn with_emulation(mut self, emulation: Option<Emulation>) -> Self {
        self.emulation = emulation;
        self
    }

    pub fn with_mode(mut self, mode: ExecutionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_recording(mut self, trace: bool, transitions: bool) -> Self {
        self.record_trace = trace;
        self.record_transitions = transitions;
        self
    }

    pub fn worker_count(&self) -> usize {
        self.topology.total_threads()
    }

    /// Core type of each worker thread.
    pub fn thread_types(&self) -> Vec<usize> {
        self.topology.thread_types(self.binding)
    }

    /// Applies environment overrides on top of this configuration.
    pub fn apply_env(&mut self, env: &EnvOverrides) -> Result<()> {
        env.apply_schedule(&mut self.schedule)?;
        if let Some(b) = env.binding {
            self.binding = b;
        }
        if let Some(topo) = env.load_topology()? {
            self.topology = topo;
        }
        Ok(())
    }

    /// This configuration with `AIDSCHED_*` environment variables applied.
    pub fn with_env(mut self) -> Result<Self> {
        self.apply_env(&EnvOverrides::from_env()?)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if let Some(emu) = &self.emulation {
            if emu.multipliers().len() != self.topology.type_count() {
                return Err(Error::InvalidRuntime(format!(
                    "emulation has {} multipliers for {} core types",
                    emu.multipliers().len(),
                    self.topology.type_count()
                )));
            }
        }
        if self.schedule.kind.is_aid()
            && self.topology.is_asymmetric()
            && self.binding == Binding::Unbound
            && self.emulation.is_none()
        {
            return Err(Error::InvalidRuntime(format!(
                "{} needs threads bound to core types (binding BS/SB) or emulation",
                self.schedule.kind
            )));
        }
        self.pin_map()?;
        Ok(())
    }

    /// Core id each worker is pinned to. With emulation and a topology
    /// without core ids, the binding only orders thread ids by core type and
    /// nothing is pinned.
    pub fn pin_map(&self) -> Result<Vec<Option<usize>>> {
        if self.emulation.is_some() && !self.topology.has_core_ids() {
            return Ok(vec![None; self.worker_count()]);
        }
        bind_threads(&self.topology, self.binding)
    }
}

/// A half-open range of normalized indices executed by one thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AssignedRange {
    pub thread: usize,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopReport {
    pub iterations: Vec<u64>,
    pub busy_ns: Vec<u64>,
    pub wait_ns: Vec<u64>,
    pub finish_ns: Vec<u64>,
    pub calls: Vec<u64>,
    pub thread_types: Vec<usize>,
    pub wall_ns: u64,
    pub estimated_sf: Option<Vec<f64>>,
    pub transitions: Vec<Transition>,
    /// Empty unless trace recording is enabled. Ordered by start index.
    pub trace: Vec<AssignedRange>,
    /// Latest thread finish over mean busy time; at least 1.
    pub imbalance: f64,
}

impl LoopReport {
    pub fn total_iterations(&self) -> u64 {
        self.iterations.iter().sum()
    }
}

#[derive(Debug, Default)]
struct ThreadOutcome {
    iterations: u64,
    busy_ns: u64,
    finish_ns: u64,
    calls: u64,
    transitions: Vec<Transition>,
    trace: Vec<AssignedRange>,
}

type Invoke<'a> = dyn Fn(i64, f64) -> std::result::Result<(), String> + Sync + 'a;

struct LoopContext<'a, T: Scalar> {
    space: &'a IterationSpace,
    shared: &'a SharedLoopState<T>,
    invoke: &'a Invoke<'a>,
    multipliers: Vec<f64>,
    pad: bool,
    record_trace: bool,
    origin: Instant,
    abort: AtomicBool,
    failure: Mutex<Option<(i64, String)>>,
}

impl<T: Scalar> LoopContext<'_, T> {
    fn now(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }

    fn fail(&self, index: i64, message: String) {
        let mut slot = self.failure.lock().unwrap();
        if slot.is_none() {
            *slot = Some((index, message));
        }
        self.abort.store(true, Ordering::Release);
    }

    /// Executes one range; returns false if the loop must stop.
    fn run_range(&self, st: &ThreadLoopState, range: std::ops::Range<u64>, executed: &mut u64) -> bool {
        let mult = self.multipliers[st.core_type];
        let started = Instant::now();
        for i in range {
            if self.abort.load(Ordering::Relaxed) {
                return false;
            }
            let index = self.space.index(i);
            match catch_unwind(AssertUnwindSafe(|| (self.invoke)(index, mult))) {
                Ok(Ok(())) => *executed += 1,
                Ok(Err(msg)) => {
                    self.fail(index, msg);
                    return false;
                }
                Err(payload) => {
                    self.fail(index, panic_message(payload.as_ref()));
                    return false;
                }
            }
        }
        if self.pad {
            pad(started.elapsed(), mult);
        }
        true
    }

    /// Drives one worker until the schedule hands it nothing more.
    fn worker(&self, tid: usize) -> ThreadOutcome {
        let mut st = self.shared.thread_state(tid);
        let mut out = ThreadOutcome::default();
        let mut now = self.now();
        while !self.abort.load(Ordering::Acquire) {
            let Some(range) = self.shared.next_assignment(&mut st, now) else {
                break;
            };
            let call_start = now;
            if self.record_trace {
                out.trace.push(AssignedRange { thread: tid, start: range.start, end: range.end });
            }
            let keep_going = self.run_range(&st, range, &mut out.iterations);
            now = self.now();
            out.busy_ns += now - call_start;
            if !keep_going {
                break;
            }
        }
        out.finish_ns = self.now();
        out.calls = st.calls;
        out.transitions = st.transitions;
        out
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

/// Parallel-for runtime with a persistent worker pool.
pub struct Runtime<T: Scalar = f64> {
    cfg: RuntimeConfig<T>,
    thread_types: Vec<usize>,
    workers: Option<WorkerPool>,
    busy: Mutex<()>,
}

impl<T: Scalar> std::fmt::Debug for Runtime<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Runtime")
            .field("cfg", &self.cfg)
            .field("workers", &self.workers.as_ref().map(|w| w.len()))
            .finish()
    }
}

impl<T: Scalar> Runtime<T> {
    /// Validates `cfg` and, in threaded mode, spawns and pins the workers.
    pub fn new(cfg: RuntimeConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let thread_types = cfg.thread_types();
        let workers = match cfg.mode {
            ExecutionMode::Serialized => None,
            ExecutionMode::Threaded => {
                let map = cfg.pin_map()?;
                Some(WorkerPool::new(cfg.worker_count(), move |tid| match map[tid] {
                    Some(core) => pin_current_thread(tid, core),
                    None => Ok(()),
                })?)
            }
        };
        Ok(Self {
            cfg,
            thread_types,
            workers,
            busy: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &RuntimeConfig<T> {
        &self.cfg
    }

    /// Runs `body` once for every index of `space`.
    pub fn parallel_for<F>(&self, space: &IterationSpace, body: F) -> Result<LoopReport>
    where
        F: Fn(i64) + Sync,
    {
        self.execute(space, &|i, _| {
            body(i);
            Ok(())
        }, true)
    }

    /// Like [`Runtime::parallel_for`], but stops at the first error. No new
    /// body invocation starts after a failure; the error carries the index.
    pub fn try_parallel_for<F, E>(&self, space: &IterationSpace, body: F) -> Result<LoopReport>
    where
        F: Fn(i64) -> std::result::Result<(), E> + Sync,
        E: Display,
    {
        self.execute(space, &|i, _| body(i).map_err(|e| e.to_string()), true)
    }

    /// The body receives the emulation multiplier of the calling thread's
    /// core type and is responsible for scaling its own work; no padding is
    /// applied.
    pub fn parallel_for_scaled<F>(&self, space: &IterationSpace, body: F) -> Result<LoopReport>
    where
        F: Fn(i64, f64) + Sync,
    {
        self.execute(space, &|i, m| {
            body(i, m);
            Ok(())
        }, false)
    }

    /// Single-thread completion time of the loop on one worker of
    /// `core_type`, including emulation padding.
    pub fn time_on_type<F>(&self, space: &IterationSpace, core_type: usize, body: F) -> Result<Duration>
    where
        F: Fn(i64) + Sync,
    {
        let tid = self
            .thread_types
            .iter()
            .position(|&t| t == core_type)
            .ok_or_else(|| Error::InvalidRuntime(format!("no worker on core type {core_type}")))?;
        let mult = self.multipliers()[core_type];
        let elapsed = Mutex::new(Duration::ZERO);
        let run = || {
            let t = Instant::now();
            for i in space.indices() {
                body(i);
            }
            pad(t.elapsed(), mult);
            *elapsed.lock().unwrap() = t.elapsed();
        };
        let _guard = self.lock()?;
        match &self.workers {
            Some(w) => {
                w.broadcast(&|id| {
                    if id == tid {
                        run()
                    }
                });
            }
            None => run(),
        }
        let d = *elapsed.lock().unwrap();
        Ok(d)
    }

    /// Simulates the loop with this runtime's schedule, topology and binding.
    pub fn dry_run(&self, space: &IterationSpace, model: &dyn CostModel) -> Result<SimResult> {
        simulate(
            space,
            self.cfg.schedule,
            &self.cfg.topology,
            self.cfg.binding,
            model,
            SimOptions {
                record_trace: true,
                record_transitions: self.cfg.record_transitions,
            },
        )
    }

    fn multipliers(&self) -> Vec<f64> {
        match &self.cfg.emulation {
            Some(e) => e.multipliers().to_vec(),
            None => vec![1.0; self.cfg.topology.type_count()],
        }
    }

    fn lock(&self) -> Result<std::sync::MutexGuard<'_, ()>> {
        match self.busy.try_lock() {
            Ok(g) => Ok(g),
            Err(TryLockError::Poisoned(p)) => Ok(p.into_inner()),
            Err(TryLockError::WouldBlock) => Err(Error::InvalidRuntime(
                "nested or concurrent parallel loops are not supported".into(),
            )),
        }
    }

    fn execute(&self, space: &IterationSpace, invoke: &Invoke<'_>, pad: bool) -> Result<LoopReport> {
        let _guard = self.lock()?;
        let n = self.thread_types.len();
        let shared = SharedLoopState::new(
            self.cfg.schedule,
            &self.cfg.topology,
            self.thread_types.clone(),
            space.len(),
        )?
        .with_transition_log(self.cfg.record_transitions);
        let ctx = LoopContext {
            space,
            shared: &shared,
            invoke,
            multipliers: self.multipliers(),
            pad,
            record_trace: self.cfg.record_trace,
            origin: Instant::now(),
            abort: AtomicBool::new(false),
            failure: Mutex::new(None),
        };

        let outcomes: Vec<ThreadOutcome> = match &self.workers {
            Some(workers) => {
                let slots: Vec<Mutex<Option<ThreadOutcome>>> = (0..n).map(|_| Mutex::new(None)).collect();
                let ok = workers.broadcast(&|tid| {
                    let out = ctx.worker(tid);
                    *slots[tid].lock().unwrap() = Some(out);
                });
                if !ok {
                    return Err(Error::InvalidRuntime("worker thread panicked".into()));
                }
                slots
                    .into_iter()
                    .map(|s| s.into_inner().unwrap().unwrap_or_default())
                    .collect()
            }
            None => run_serialized(&ctx, n),
        };
        let wall_ns = ctx.now();

        if let Some((index, message)) = ctx.failure.into_inner().unwrap() {
            return Err(Error::BodyFailed { index, message });
        }

        let mean_busy = outcomes.iter().map(|o| o.busy_ns).sum::<u64>() as f64 / n as f64;
        let max_finish = outcomes.iter().map(|o| o.finish_ns).max().unwrap_or(0);
        let imbalance = if mean_busy > 0.0 {
            (max_finish as f64 / mean_busy).max(1.0)
        } else {
            1.0
        };
        let mut trace: Vec<AssignedRange> = Vec::new();
        let mut transitions = Vec::new();
        let mut report = LoopReport {
            iterations: Vec::with_capacity(n),
            busy_ns: Vec::with_capacity(n),
            wait_ns: Vec::with_capacity(n),
            finish_ns: Vec::with_capacity(n),
            calls: Vec::with_capacity(n),
            thread_types: self.thread_types.clone(),
            wall_ns,
            estimated_sf: shared
                .estimated_sf()
                .map(|sf| sf.factors().iter().map(|f| f.as_f64()).collect()),
            transitions: Vec::new(),
            trace: Vec::new(),
            imbalance,
        };
        for o in outcomes {
            report.iterations.push(o.iterations);
            report.busy_ns.push(o.busy_ns);
            report.wait_ns.push(wall_ns.saturating_sub(o.finish_ns));
            report.finish_ns.push(o.finish_ns);
            report.calls.push(o.calls);
            trace.extend(o.trace);
            transitions.extend(o.transitions);
        }
        trace.sort_by_key(|r| r.start);
        report.trace = trace;
        report.transitions = transitions;
        debug_assert_eq!(report.total_iterations(), space.len());
        Ok(report)
    }
}

/// Steps every live worker once per round, in id order.
fn run_serialized<T: Scalar>(ctx: &LoopContext<'_, T>, n: usize) -> Vec<ThreadOutcome> {
    let mut states: Vec<ThreadLoopState> = (0..n).map(|t| ctx.shared.thread_state(t)).collect();
    let mut outs: Vec<ThreadOutcome> = (0..n).map(|_| ThreadOutcome::default()).collect();
    let mut done = vec![false; n];
    let mut live = n;
    while live > 0 && !ctx.abort.load(Ordering::Acquire) {
        for tid in 0..n {
            if done[tid] {
                continue;
            }
            let call_start = ctx.now();
            let st = &mut states[tid];
            let out = &mut outs[tid];
            match ctx.shared.next_assignment(st, call_start) {
                Some(range) => {
                    if ctx.record_trace {
                        out.trace.push(AssignedRange { thread: tid, start: range.start, end: range.end });
                    }
                    let ok = ctx.run_range(st, range, &mut out.iterations);
                    out.busy_ns += ctx.now() - call_start;
                    if !ok {
                        return finish_serialized(states, outs, ctx);
                    }
                }
                None => {
                    debug_assert_eq!(st.phase, Phase::Done);
                    done[tid] = true;
                    live -= 1;
                    out.finish_ns = ctx.now();
                }
            }
        }
    }
    finish_serialized(states, outs, ctx)
}

fn finish_serialized<T: Scalar>(
    states: Vec<ThreadLoopState>,
    mut outs: Vec<ThreadOutcome>,
    ctx: &LoopContext<'_, T>,
) -> Vec<ThreadOutcome> {
    let now = ctx.now();
    for (st, out) in states.into_iter().zip(outs.iter_mut()) {
        if out.finish_ns == 0 {
            out.finish_ns = now;
        }
        out.calls = st.calls;
        out.transitions = st.transitions;
    }
    outs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedulers::ScheduleKind;
    use std::sync::atomic::AtomicU32;

    fn unbound(kind: ScheduleKind, topo: CoreTopology) -> RuntimeConfig {
        let emu = Emulation::new(vec![1.0; topo.type_count()]).unwrap();
        RuntimeConfig::new(ScheduleConfig::new(kind), topo)
            .with_binding(Binding::Unbound)
            .with_emulation(Some(emu))
    }

    #[test]
    fn empty_loop() {
        let rt = Runtime::new(unbound(ScheduleKind::Dynamic, CoreTopology::symmetric(3).unwrap())).unwrap();
        let report = rt.parallel_for(&IterationSpace::with_len(0).unwrap(), |_| unreachable!()).unwrap();
        assert_eq!(report.total_iterations(), 0);
        assert!(report.imbalance >= 1.0);
    }

    #[test]
    fn every_index_once_with_stride() {
        let topo = CoreTopology::big_little(2, 2, 3.0).unwrap();
        for kind in ScheduleKind::ALL {
            let rt = Runtime::new(unbound(kind, topo.clone())).unwrap();
            let space = IterationSpace::new(-50, 950, 3).unwrap();
            let tally: Vec<AtomicU32> = (0..1000).map(|_| AtomicU32::new(0)).collect();
            for _ in 0..3 {
                let report = rt
                    .parallel_for(&space, |i| {
                        tally[(i + 50) as usize].fetch_add(1, Ordering::Relaxed);
                    })
                    .unwrap();
                assert_eq!(report.total_iterations(), space.len(), "{kind}");
            }
            for i in space.indices() {
                assert_eq!(tally[(i + 50) as usize].load(Ordering::Relaxed), 3, "{kind} index {i}");
            }
        }
    }

    #[test]
    fn body_failure_carries_index_and_stops() {
        let rt = Runtime::new(unbound(ScheduleKind::Dynamic, CoreTopology::symmetric(4).unwrap())).unwrap();
        let started_after = AtomicU32::new(0);
        let failed = AtomicBool::new(false);
        let err = rt
            .try_parallel_for(&IterationSpace::with_len(10_000).unwrap(), |i| {
                if failed.load(Ordering::SeqCst) {
                    started_after.fetch_add(1, Ordering::SeqCst);
                }
                if i == 1234 {
                    failed.store(true, Ordering::SeqCst);
                    return Err("bad input");
                }
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, Error::BodyFailed { index: 1234, .. }), "{err}");
        // At most the iterations already in flight on the other workers.
        assert!(started_after.load(Ordering::SeqCst) <= 3);
        // The runtime stays usable.
        let report = rt.parallel_for(&IterationSpace::with_len(100).unwrap(), |_| {}).unwrap();
        assert_eq!(report.total_iterations(), 100);
    }

    #[test]
    fn panics_become_errors() {
        let cfg = unbound(ScheduleKind::Guided, CoreTopology::symmetric(2).unwrap()).with_mode(ExecutionMode::Serialized);
        let rt = Runtime::new(cfg).unwrap();
        let err = rt
            .parallel_for(&IterationSpace::with_len(50).unwrap(), |i| {
                if i == 7 {
                    panic!("seven");
                }
            })
            .unwrap_err();
        match err {
            Error::BodyFailed { index, message } => {
                assert_eq!(index, 7);
                assert!(message.contains("seven"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn aid_requires_binding_or_emulation() {
        let topo = CoreTopology::big_little(1, 1, 2.0).unwrap();
        let cfg = RuntimeConfig::<f64>::new(ScheduleConfig::new(ScheduleKind::AidStatic), topo)
            .with_binding(Binding::Unbound);
        assert!(matches!(Runtime::new(cfg), Err(Error::InvalidRuntime(_))));
    }

    #[test]
    fn emulation_shifts_aid_static_allotment() {
        // Two threads, the small one emulated 4x slower. The sampled SF is
        // noisy on a loaded machine, so only the direction is checked here.
        let topo = CoreTopology::from_counts(&[1, 1], &[1.0, 4.0]).unwrap();
        let cfg = RuntimeConfig::<f64>::new(ScheduleConfig::new(ScheduleKind::AidStatic).with_chunk(20), topo.clone())
            .with_binding(Binding::Unbound)
            .with_emulation(Some(Emulation::from_topology(&topo)));
        let rt = Runtime::new(cfg).unwrap();
        let report = rt
            .parallel_for(&IterationSpace::with_len(4000).unwrap(), |_| {
                spin_for(Duration::from_micros(5));
            })
            .unwrap();
        assert_eq!(report.total_iterations(), 4000);
        let sf = report.estimated_sf.expect("sf published")[1];
        assert!(sf > 1.5, "sf {sf}");
        assert!(report.iterations[0] > report.iterations[1]);
    }

    #[test]
    fn emulated_small_first_orders_types_without_pinning() {
        let topo = CoreTopology::from_counts(&[2, 1], &[1.0, 2.0]).unwrap();
        let cfg = RuntimeConfig::<f64>::new(ScheduleConfig::new(ScheduleKind::Static), topo.clone())
            .with_binding(Binding::SmallFirst)
            .with_emulation(Some(Emulation::from_topology(&topo)));
        assert_eq!(cfg.pin_map().unwrap(), vec![None; 3]);
        let rt = Runtime::new(cfg).unwrap();
        let report = rt.parallel_for(&IterationSpace::with_len(30).unwrap(), |_| {}).unwrap();
        assert_eq!(report.thread_types, vec![0, 0, 1]);
    }

    #[test]
    fn nested_loops_rejected() {
        let rt = Runtime::new(unbound(ScheduleKind::Static, CoreTopology::symmetric(1).unwrap())).unwrap();
        let inner = Mutex::new(None);
        rt.parallel_for(&IterationSpace::with_len(1).unwrap(), |_| {
            let r = rt.parallel_for(&IterationSpace::with_len(1).unwrap(), |_| {});
            *inner.lock().unwrap() = Some(r.is_err());
        })
        .unwrap();
        assert_eq!(*inner.lock().unwrap(), Some(true));
    }

    #[test]
    fn time_on_type_applies_multiplier() {
        let topo = CoreTopology::from_counts(&[1, 1], &[1.0, 3.0]).unwrap();
        let cfg = RuntimeConfig::<f64>::new(ScheduleConfig::new(ScheduleKind::Static), topo.clone())
            .with_binding(Binding::Unbound)
            .with_emulation(Some(Emulation::from_topology(&topo)));
        let rt = Runtime::new(cfg).unwrap();
        let space = IterationSpace::with_len(200).unwrap();
        let body = |_| spin_for(Duration::from_micros(10));
        let mut ratios: Vec<f64> = (0..5)
            .map(|_| {
                let slow = rt.time_on_type(&space, 0, body).unwrap();
                let fast = rt.time_on_type(&space, 1, body).unwrap();
                slow.as_secs_f64() / fast.as_secs_f64()
            })
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ratios[2] - 3.0).abs() < 0.6, "{ratios:?}");
    }
}

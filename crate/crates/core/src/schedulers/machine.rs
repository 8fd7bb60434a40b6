//! The loop scheduling state machines.
//!
//! One [`SharedLoopState`] exists per loop execution; every worker owns a
//! [`ThreadLoopState`] and repeatedly calls
//! [`SharedLoopState::next_assignment`] after finishing its previous range.
//! The shared state is mutated through atomics only. Values computed by the
//! last thread to complete a phase are written with relaxed stores and made
//! visible by a release store of the phase number; readers acquire the phase
//! number before reading them.

use std::ops::Range;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};

use crate::error::Result;
use crate::iter_pool::SharedPool;
use crate::scalar::Scalar;
use crate::sched_math::{
    compute_k, compute_sm, estimate_sf, plan_allotments, scaled_chunk,
    should_switch_to_tail, update_r, SamplingAccumulator, SpeedupEstimate,
};
use crate::topology::CoreTopology;

use super::config::{ScheduleConfig, ScheduleKind};
use super::transitions::{Phase, Transition};

/// Contiguous block of thread `thread_id` under the even static split:
/// sizes differ by at most one and lower ids get the earlier, larger blocks.
pub fn static_partition(ni: u64, n_threads: usize, thread_id: usize) -> Range<u64> {
    assert!(thread_id < n_threads);
    let n = n_threads as u64;
    let t = thread_id as u64;
    let (q, r) = (ni / n, ni % n);
    let start = t * q + t.min(r);
    let len = q + u64::from(t < r);
    start..start + len
}

/// Take size of the guided schedule for `remaining` unassigned iterations.
pub fn guided_chunk(remaining: u64, n_threads: usize, chunk_min: u64) -> u64 {
    remaining.div_ceil(n_threads as u64).max(chunk_min)
}

#[derive(Debug)]
struct AtomicAccumulator {
    sums: Vec<AtomicU64>,
    counts: Vec<AtomicUsize>,
}

impl AtomicAccumulator {
    fn new(types: usize) -> Self {
        Self {
            sums: (0..types).map(|_| AtomicU64::new(0)).collect(),
            counts: (0..types).map(|_| AtomicUsize::new(0)).collect(),
        }
    }

    fn add(&self, core_type: usize, ns: u64) {
        self.sums[core_type].fetch_add(ns, Ordering::Relaxed);
        self.counts[core_type].fetch_add(1, Ordering::Relaxed);
    }

    fn snapshot(&self) -> SamplingAccumulator {
        SamplingAccumulator {
            sums_ns: self.sums.iter().map(|s| s.load(Ordering::Relaxed)).collect(),
            counts: self.counts.iter().map(|c| c.load(Ordering::Relaxed)).collect(),
        }
    }

    fn reset(&self) {
        for s in &self.sums {
            s.store(0, Ordering::Relaxed);
        }
        for c in &self.counts {
            c.store(0, Ordering::Relaxed);
        }
    }
}

/// Per-loop shared scheduling state.
#[derive(Debug)]
pub struct SharedLoopState<T: Scalar = f64> {
    cfg: ScheduleConfig<T>,
    topo: CoreTopology,
    thread_types: Vec<usize>,
    pool: SharedPool,
    /// Iterations planned by AID-static/AID-hybrid.
    plan_len: u64,
    sampling: AtomicAccumulator,
    phase_acc: AtomicAccumulator,
    completed: AtomicUsize,
    /// 0 while sampling; p >= 1 once AID phase p has been published.
    phase_number: AtomicU64,
    /// AID-static/hybrid: rounded per-thread targets. AID-dynamic: per-type
    /// AID chunk `round(R_j * M)`.
    allotments: Vec<AtomicU64>,
    sf: Vec<AtomicU64>,
    r: Vec<AtomicU64>,
    k: AtomicU64,
    tail_engaged: AtomicBool,
    record_transitions: bool,
}

/// State owned by one worker thread for the duration of one loop.
#[derive(Debug, Clone)]
pub struct ThreadLoopState {
    pub thread_id: usize,
    pub core_type: usize,
    pub phase: Phase,
    /// Iterations executed in the current wait cycle, before the next AID
    /// assignment.
    pub delta: u64,
    /// Timestamp (ns) at which the current sampling/AID phase began.
    pub phase_entry_ns: u64,
    /// Length of the range returned by the previous call.
    pub outstanding: u64,
    /// Last AID phase number this thread received an assignment for.
    pub seen_phase: u64,
    pub iterations: u64,
    pub calls: u64,
    pub transitions: Vec<Transition>,
}

impl ThreadLoopState {
    fn enter(&mut self, to: Phase, record: bool) {
        if record {
            self.transitions.push(Transition {
                thread: self.thread_id,
                from: self.phase,
                to,
            });
        }
        self.phase = to;
    }
}

impl<T: Scalar> SharedLoopState<T> {
    /// Creates the shared state for a loop of `ni` normalized iterations.
    /// `thread_types[i]` is the core type thread `i` runs on.
    pub fn new(
        cfg: ScheduleConfig<T>,
        topo: &CoreTopology,
        thread_types: Vec<usize>,
        ni: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        assert_eq!(thread_types.len(), topo.total_threads());
        let nc = topo.type_count();
        let slots = match cfg.kind {
            ScheduleKind::AidDynamic => nc,
            _ => thread_types.len(),
        };
        let one = T::one().to_raw();
        Ok(Self {
            plan_len: cfg.planned_iterations(ni),
            cfg,
            topo: topo.clone(),
            thread_types,
            pool: SharedPool::with_len(ni),
            sampling: AtomicAccumulator::new(nc),
            phase_acc: AtomicAccumulator::new(nc),
            completed: AtomicUsize::new(0),
            phase_number: AtomicU64::new(0),
            allotments: (0..slots).map(|_| AtomicU64::new(0)).collect(),
            sf: (0..nc).map(|_| AtomicU64::new(one)).collect(),
            r: (0..nc).map(|_| AtomicU64::new(one)).collect(),
            k: AtomicU64::new(T::zero().to_raw()),
            tail_engaged: AtomicBool::new(false),
            record_transitions: false,
        })
    }

    /// Enables the per-thread transition log (off by default).
    pub fn with_transition_log(mut self, on: bool) -> Self {
        self.record_transitions = on;
        self
    }

    pub fn config(&self) -> &ScheduleConfig<T> {
        &self.cfg
    }

    pub fn topology(&self) -> &CoreTopology {
        &self.topo
    }

    pub fn pool(&self) -> &SharedPool {
        &self.pool
    }

    pub fn n_threads(&self) -> usize {
        self.thread_types.len()
    }

    pub fn thread_state(&self, thread_id: usize) -> ThreadLoopState {
        ThreadLoopState {
            thread_id,
            core_type: self.thread_types[thread_id],
            phase: Phase::Start,
            delta: 0,
            phase_entry_ns: 0,
            outstanding: 0,
            seen_phase: 0,
            iterations: 0,
            calls: 0,
            transitions: Vec::new(),
        }
    }

    pub fn phase_number(&self) -> u64 {
        self.phase_number.load(Ordering::Acquire)
    }

    pub fn tail_engaged(&self) -> bool {
        self.tail_engaged.load(Ordering::Acquire)
    }

    /// The speedup factors computed from the sampling phase, once published.
    pub fn estimated_sf(&self) -> Option<SpeedupEstimate<T>> {
        if self.phase_number() == 0 {
            return None;
        }
        Some(SpeedupEstimate::from_factors(
            self.sf.iter().map(|a| T::from_raw(a.load(Ordering::Relaxed))),
        ))
    }

    /// Current R per core type (AID-dynamic), once published.
    pub fn current_r(&self) -> Option<Vec<T>> {
        if self.phase_number() == 0 {
            return None;
        }
        Some(self.r.iter().map(|a| T::from_raw(a.load(Ordering::Relaxed))).collect())
    }

    /// Published k (AID-static/hybrid), once published.
    pub fn current_k(&self) -> Option<T> {
        (self.phase_number() > 0).then(|| T::from_raw(self.k.load(Ordering::Relaxed)))
    }

    /// Next range of normalized indices for `thr`, or `None` once the loop
    /// is complete for it. `now_ns` is a monotonic timestamp taken when the
    /// previous range finished.
    pub fn next_assignment(&self, thr: &mut ThreadLoopState, now_ns: u64) -> Option<Range<u64>> {
        thr.calls += 1;
        let range = match self.cfg.kind {
            ScheduleKind::Static => self.static_step(thr),
            ScheduleKind::Dynamic => self.baseline_take(thr, self.cfg.chunk),
            ScheduleKind::Guided => {
                let amount = guided_chunk(self.pool.remaining(), self.n_threads(), self.cfg.chunk);
                self.baseline_take(thr, amount)
            }
            ScheduleKind::AidStatic | ScheduleKind::AidHybrid | ScheduleKind::AidDynamic => {
                self.aid_step(thr, now_ns)
            }
        };
        let len = range.as_ref().map_or(0, |r| r.end - r.start);
        thr.outstanding = len;
        thr.iterations += len;
        range
    }

    fn enter(&self, thr: &mut ThreadLoopState, to: Phase) {
        thr.enter(to, self.record_transitions);
    }

    fn static_step(&self, thr: &mut ThreadLoopState) -> Option<Range<u64>> {
        if thr.phase != Phase::Start {
            if thr.phase != Phase::Done {
                self.enter(thr, Phase::Done);
            }
            return None;
        }
        let r = static_partition(self.pool.len(), self.n_threads(), thr.thread_id);
        if r.is_empty() {
            self.enter(thr, Phase::Done);
            None
        } else {
            self.enter(thr, Phase::Baseline);
            Some(r)
        }
    }

    fn baseline_take(&self, thr: &mut ThreadLoopState, amount: u64) -> Option<Range<u64>> {
        match self.pool.try_take(amount) {
            Some(r) => {
                self.enter(thr, Phase::Baseline);
                Some(r)
            }
            None => {
                if thr.phase != Phase::Done {
                    self.enter(thr, Phase::Done);
                }
                None
            }
        }
    }

    fn aid_step(&self, thr: &mut ThreadLoopState, now: u64) -> Option<Range<u64>> {
        let finished = std::mem::take(&mut thr.outstanding);
        let dynamic = self.cfg.kind == ScheduleKind::AidDynamic;

        if dynamic && !matches!(thr.phase, Phase::Start | Phase::DynamicTail | Phase::Done) {
            let engaged = self.tail_engaged.load(Ordering::Acquire)
                || should_switch_to_tail(self.pool.remaining(), self.cfg.major_chunk, &self.topo);
            if engaged {
                self.tail_engaged.store(true, Ordering::Release);
                self.enter(thr, Phase::DynamicTail);
                return self.tail_take(thr, false);
            }
        }

        match thr.phase {
            Phase::Start => {
                thr.phase_entry_ns = now;
                self.enter(thr, Phase::Sampling);
                self.take_or_done(thr, self.cfg.chunk)
            }
            Phase::Sampling => {
                thr.delta += finished;
                self.sampling
                    .add(thr.core_type, now.saturating_sub(thr.phase_entry_ns));
                let reported = self.completed.fetch_add(1, Ordering::AcqRel) + 1;
                if reported == self.n_threads() {
                    self.publish_sampling();
                    self.enter(thr, Phase::Aid);
                    self.aid_assign(thr, now)
                } else {
                    self.enter(thr, Phase::SamplingWait);
                    self.wait_take(thr, now, false)
                }
            }
            Phase::SamplingWait => {
                thr.delta += finished;
                self.wait_take(thr, now, true)
            }
            Phase::Aid if dynamic => {
                self.phase_acc
                    .add(thr.core_type, now.saturating_sub(thr.phase_entry_ns));
                let reported = self.completed.fetch_add(1, Ordering::AcqRel) + 1;
                if reported == self.n_threads() {
                    self.publish_aid_phase();
                    self.enter(thr, Phase::Aid);
                    self.aid_assign(thr, now)
                } else {
                    self.enter(thr, Phase::SamplingWait);
                    self.wait_take(thr, now, false)
                }
            }
            Phase::Aid => {
                self.enter(thr, Phase::DynamicTail);
                self.tail_take(thr, false)
            }
            Phase::DynamicTail => self.tail_take(thr, true),
            Phase::Done => None,
            Phase::Baseline => unreachable!("baseline phase in an AID schedule"),
        }
    }

    fn take_or_done(&self, thr: &mut ThreadLoopState, amount: u64) -> Option<Range<u64>> {
        let r = self.pool.try_take(amount);
        if r.is_none() {
            self.enter(thr, Phase::Done);
        }
        r
    }

    /// DYNAMIC_TAIL: plain dynamic with the sampling (minor) chunk.
    /// `staying` marks a self-loop that is logged as such.
    fn tail_take(&self, thr: &mut ThreadLoopState, staying: bool) -> Option<Range<u64>> {
        let r = self.pool.try_take(self.cfg.chunk);
        if r.is_none() {
            self.enter(thr, Phase::Done);
        } else if staying {
            self.enter(thr, Phase::DynamicTail);
        }
        r
    }

    /// SAMPLING_WAIT: move to AID as soon as a new phase has been published,
    /// otherwise keep taking `chunk` iterations.
    fn wait_take(&self, thr: &mut ThreadLoopState, now: u64, staying: bool) -> Option<Range<u64>> {
        if self.phase_number.load(Ordering::Acquire) > thr.seen_phase {
            self.enter(thr, Phase::Aid);
            return self.aid_assign(thr, now);
        }
        let r = self.pool.try_take(self.cfg.chunk);
        if r.is_none() {
            self.enter(thr, Phase::Done);
        } else if staying {
            self.enter(thr, Phase::SamplingWait);
        }
        r
    }

    /// Entering AID: take this thread's assignment minus its delta.
    fn aid_assign(&self, thr: &mut ThreadLoopState, now: u64) -> Option<Range<u64>> {
        thr.seen_phase = self.phase_number.load(Ordering::Acquire);
        let delta = std::mem::take(&mut thr.delta);
        if self.cfg.kind == ScheduleKind::AidDynamic {
            let chunk = self.allotments[thr.core_type].load(Ordering::Relaxed);
            thr.phase_entry_ns = now;
            return self.take_or_done(thr, chunk.saturating_sub(delta).max(1));
        }
        let target = self.allotments[thr.thread_id].load(Ordering::Relaxed);
        let amount = target.saturating_sub(delta);
        if amount == 0 {
            self.enter(thr, Phase::DynamicTail);
            return self.tail_take(thr, false);
        }
        self.take_or_done(thr, amount)
    }

    fn sampled_sf(&self) -> SpeedupEstimate<T> {
        if !self.topo.is_asymmetric() {
            return SpeedupEstimate::uniform(1);
        }
        estimate_sf(&self.sampling.snapshot(), &self.topo)
            .unwrap_or_else(|_| SpeedupEstimate::uniform(self.topo.type_count()))
    }

    /// Run by the last thread to complete the sampling phase.
    fn publish_sampling(&self) {
        let sf = self.sampled_sf();
        for (slot, f) in self.sf.iter().zip(sf.factors()) {
            slot.store(f.to_raw(), Ordering::Relaxed);
        }
        if self.cfg.kind == ScheduleKind::AidDynamic {
            for (j, f) in sf.factors().iter().enumerate() {
                self.r[j].store(f.to_raw(), Ordering::Relaxed);
                self.allotments[j].store(scaled_chunk(*f, self.cfg.major_chunk), Ordering::Relaxed);
            }
            self.phase_acc.reset();
        } else {
            let zeros = vec![0; self.n_threads()];
            let plan = plan_allotments(self.plan_len, &self.topo, &self.thread_types, &sf, &zeros);
            for (slot, c) in self.allotments.iter().zip(&plan.counts) {
                slot.store(*c, Ordering::Relaxed);
            }
            self.k.store(compute_k(self.plan_len, &self.topo, &sf).to_raw(), Ordering::Relaxed);
        }
        self.completed.store(0, Ordering::Relaxed);
        self.phase_number.store(1, Ordering::Release);
    }

    /// Run by the last thread to complete an AID-dynamic phase.
    fn publish_aid_phase(&self) {
        let nc = self.topo.type_count();
        let sm: Vec<T> = if self.topo.is_asymmetric() {
            compute_sm(&self.phase_acc.snapshot(), &self.topo).unwrap_or_else(|_| vec![T::one(); nc])
        } else {
            vec![T::one()]
        };
        for (j, (&s, (r, slot))) in sm.iter().zip(self.r.iter().zip(&self.allotments)).enumerate() {
            let prev = T::from_raw(r.load(Ordering::Relaxed));
            let next = if j == 0 { T::one() } else { update_r(prev, s) };
            r.store(next.to_raw(), Ordering::Relaxed);
            slot.store(scaled_chunk(next, self.cfg.major_chunk), Ordering::Relaxed);
        }
        self.phase_acc.reset();
        self.completed.store(0, Ordering::Relaxed);
        self.phase_number.fetch_add(1, Ordering::Release);
    }
}

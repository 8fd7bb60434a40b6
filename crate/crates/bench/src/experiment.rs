//! Experiment execution on the simulator or on real threads.

use std::hint::black_box;
use std::sync::Arc;

use aidsched::runtime::{burn_ns, calibration, Emulation};
use aidsched::simulator::{offline_sf, simulate, ScaledCost, SimOptions};
use aidsched::{
    Binding, CoreTopology, IterationSpace, LoopReport, Runtime, RuntimeConfig, ScheduleConfig,
    SimResult,
};
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::schedule_spec::{ScheduleDefaults, ScheduleSpec};
use crate::workload::WorkloadSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sim,
    Real,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub mode: Mode,
    pub topology: CoreTopology,
    pub binding: Binding,
    pub loops: Vec<WorkloadSpec>,
    pub repeats: usize,
    pub discard_first: bool,
    /// Per-assignment overhead of the modeled machine (sim mode).
    pub overhead_ns: u64,
    /// Real mode: slow core types by padding instead of pinning.
    pub emulate: bool,
    pub defaults: ScheduleDefaults,
    costs: Vec<Arc<Vec<u64>>>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LoopDetail {
    Sim(SimResult),
    Real(LoopReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopRecord {
    pub name: String,
    /// Makespan (sim) or wall time (real).
    pub time_ns: u64,
    pub iterations: u64,
    pub detail: LoopDetail,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub total_ns: u64,
    pub loops: Vec<LoopRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub mean_ns: f64,
    pub geomean_ns: f64,
    pub min_ns: u64,
    pub max_ns: u64,
}

impl Stats {
    /// Panics on an empty slice.
    pub fn of(samples: &[u64]) -> Self {
        assert!(!samples.is_empty(), "statistics over zero runs");
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / n;
        let geomean = if samples.contains(&0) {
            0.0
        } else {
            let lo = *samples.iter().min().unwrap() as f64;
            lo * (samples.iter().map(|&s| (s as f64 / lo).ln()).sum::<f64>() / n).exp()
        };
        Self {
            count: samples.len(),
            mean_ns: mean,
            geomean_ns: geomean,
            min_ns: *samples.iter().min().unwrap(),
            max_ns: *samples.iter().max().unwrap(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleResult {
    pub schedule: String,
    pub config: ScheduleConfig,
    pub binding: Binding,
    pub runs: Vec<RunRecord>,
    /// Leading runs left out of `stats`.
    pub discarded: usize,
    pub stats: Stats,
    /// Baseline geometric mean over this schedule's; above 1 is faster.
    pub normalized: Option<f64>,
}

impl ScheduleResult {
    pub fn normalize_to(&mut self, baseline: &Stats) {
        self.normalized = normalized(baseline.geomean_ns, self.stats.geomean_ns);
    }
}

pub fn normalized(baseline: f64, time: f64) -> Option<f64> {
    match (baseline == 0.0, time == 0.0) {
        (true, true) => Some(1.0),
        (_, true) => None,
        _ => Some(baseline / time),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SfRow {
    pub name: String,
    pub iterations: u64,
    /// Per core type, slowest first; `None` where undefined (empty loop).
    pub sf: Vec<Option<f64>>,
}

impl Experiment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mode: Mode,
        topology: CoreTopology,
        binding: Binding,
        loops: Vec<WorkloadSpec>,
        repeats: usize,
        discard_first: bool,
        overhead_ns: u64,
        emulate: bool,
        defaults: ScheduleDefaults,
    ) -> Result<Self> {
        if repeats == 0 {
            return Err(BenchError::Usage("--repeats must be at least 1".into()));
        }
        if discard_first && repeats < 2 {
            return Err(BenchError::Usage("--discard-first needs --repeats of at least 2".into()));
        }
        if mode == Mode::Real && overhead_ns > 0 {
            return Err(BenchError::Usage("--overhead only applies to sim mode".into()));
        }
        if loops.is_empty() {
            return Err(BenchError::Workload("no loops".into()));
        }
        for l in &loops {
            l.validate()?;
            if let Some(s) = &l.speedups {
                if s.len() != topology.type_count() {
                    return Err(BenchError::Workload(format!(
                        "loop {:?} has {} speedups for {} core types",
                        l.name,
                        s.len(),
                        topology.type_count()
                    )));
                }
            }
        }
        let mut exp = Self {
            mode,
            topology,
            binding,
            loops,
            repeats,
            discard_first,
            overhead_ns,
            emulate,
            defaults,
            costs: Vec::new(),
        };
        for l in &exp.loops {
            exp.topology_for(l)?;
        }
        exp.costs = exp.loops.iter().map(|l| Arc::new(l.costs())).collect();
        if mode == Mode::Real {
            // Calibrate outside any timed region.
            calibration();
        }
        Ok(exp)
    }

    /// Topology with the loop's own speeds, if it has any.
    fn topology_for(&self, l: &WorkloadSpec) -> Result<CoreTopology> {
        match &l.speedups {
            Some(s) => self
                .topology
                .with_speeds(s)
                .map_err(|e| BenchError::Workload(format!("loop {:?}: {e}", l.name))),
            None => Ok(self.topology.clone()),
        }
    }

    fn model(&self, idx: usize, topo: &CoreTopology) -> ScaledCost {
        let costs = Arc::clone(&self.costs[idx]);
        ScaledCost::new(move |i| costs[i as usize], topo.speeds()).with_overhead(self.overhead_ns)
    }

    fn emulation(&self, topo: &CoreTopology) -> Option<Emulation> {
        self.emulate.then(|| Emulation::from_topology(topo))
    }

    /// Binding actually used in real mode.
    fn real_binding(&self, topo: &CoreTopology, binding: Binding) -> Result<Binding> {
        if self.emulate || topo.has_core_ids() {
            return Ok(binding);
        }
        if topo.is_asymmetric() {
            return Err(BenchError::Unsupported(
                "real mode on an asymmetric topology needs core ids to pin threads, or --emulate".into(),
            ));
        }
        Ok(Binding::Unbound)
    }

    fn run_loop(&self, idx: usize, cfg: ScheduleConfig, binding: Binding) -> Result<LoopRecord> {
        let l = &self.loops[idx];
        let topo = self.topology_for(l)?;
        let space = IterationSpace::with_len(l.iterations)?;
        let (time_ns, detail) = match self.mode {
            Mode::Sim => {
                let model = self.model(idx, &topo);
                let sim = simulate(&space, cfg, &topo, binding, &model, SimOptions::default())?;
                (sim.makespan_ns, LoopDetail::Sim(sim))
            }
            Mode::Real => {
                let rt_cfg = RuntimeConfig::new(cfg, topo.clone())
                    .with_binding(self.real_binding(&topo, binding)?)
                    .with_emulation(self.emulation(&topo));
                let rt = Runtime::new(rt_cfg)?;
                let report = rt.parallel_for(&space, self.body(idx, &topo))?;
                (report.wall_ns, LoopDetail::Real(report))
            }
        };
        Ok(LoopRecord {
            name: l.name.clone(),
            time_ns,
            iterations: l.iterations,
            detail,
        })
    }

    /// Real-mode iteration body: compute work for the reference cost scaled
    /// to the fastest core type.
    fn body(&self, idx: usize, topo: &CoreTopology) -> impl Fn(i64) + Sync {
        let costs = Arc::clone(&self.costs[idx]);
        let fastest = topo.speeds().into_iter().fold(1.0, f64::max);
        move |i| {
            black_box(burn_ns((costs[i as usize] as f64 / fastest).round() as u64));
        }
    }

    pub fn run_schedule(&self, spec: &ScheduleSpec) -> Result<ScheduleResult> {
        let (cfg, binding) = spec.resolve(&self.defaults, self.binding)?;
        let mut runs = Vec::with_capacity(self.repeats);
        for _ in 0..self.repeats {
            let loops = (0..self.loops.len())
                .map(|i| self.run_loop(i, cfg, binding))
                .collect::<Result<Vec<_>>>()?;
            runs.push(RunRecord {
                total_ns: loops.iter().map(|l| l.time_ns).sum(),
                loops,
            });
        }
        let discarded = usize::from(self.discard_first);
        let totals: Vec<u64> = runs[discarded..].iter().map(|r| r.total_ns).collect();
        Ok(ScheduleResult {
            schedule: spec.to_string(),
            config: cfg,
            binding,
            runs,
            discarded,
            stats: Stats::of(&totals),
            normalized: None,
        })
    }

    /// Runs every schedule and normalizes each to `baseline`.
    pub fn compare(&self, schedules: &[ScheduleSpec], baseline: &ScheduleSpec) -> Result<Vec<ScheduleResult>> {
        let base = match schedules.iter().position(|s| s == baseline) {
            Some(_) => None,
            None => Some(self.run_schedule(baseline)?),
        };
        let mut out = schedules
            .iter()
            .map(|s| self.run_schedule(s))
            .collect::<Result<Vec<_>>>()?;
        let base_stats = match &base {
            Some(b) => b.stats,
            None => out.iter().find(|r| r.schedule == baseline.to_string()).unwrap().stats,
        };
        let mut all: Vec<ScheduleResult> = base.into_iter().collect();
        all.append(&mut out);
        for r in &mut all {
            r.normalize_to(&base_stats);
        }
        Ok(all)
    }

    /// Caveats about real-mode measurements on this machine.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.mode == Mode::Real {
            let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
            let workers = self.topology.total_threads();
            if workers > cores {
                out.push(format!(
                    "{workers} worker threads share {cores} available cores; wall times and emulation padding include time spent descheduled"
                ));
            }
        }
        out
    }

    /// Speedup factor of every loop on every core type. Real mode uses the
    /// median single-thread time over the kept repeats.
    pub fn sf_profile(&self) -> Result<Vec<SfRow>> {
        if self.mode == Mode::Real && self.topology.type_count() < 2 {
            return Err(BenchError::Unsupported(
                "sf-profile in real mode needs at least two core types".into(),
            ));
        }
        let mut rows = Vec::new();
        for (idx, l) in self.loops.iter().enumerate() {
            let topo = self.topology_for(l)?;
            let space = IterationSpace::with_len(l.iterations)?;
            let sf: Vec<f64> = match self.mode {
                Mode::Sim => offline_sf(&space, &self.model(idx, &topo), topo.type_count()),
                Mode::Real => {
                    let rt_cfg = RuntimeConfig::<f64>::new(
                        ScheduleConfig::new(aidsched::ScheduleKind::Static),
                        topo.clone(),
                    )
                    .with_binding(self.real_binding(&topo, Binding::BigFirst)?)
                    .with_emulation(self.emulation(&topo));
                    let rt = Runtime::new(rt_cfg)?;
                    let body = self.body(idx, &topo);
                    let mut samples = vec![Vec::new(); topo.type_count()];
                    for r in 0..self.repeats {
                        for (j, s) in samples.iter_mut().enumerate() {
                            let t = rt.time_on_type(&space, j, &body)?;
                            if r >= usize::from(self.discard_first) {
                                s.push(t.as_secs_f64());
                            }
                        }
                    }
                    let times: Vec<f64> = samples.into_iter().map(median).collect();
                    times.iter().map(|t| times[0] / t).collect()
                }
            };
            rows.push(SfRow {
                name: l.name.clone(),
                iterations: l.iterations,
                sf: sf.into_iter().map(|v| v.is_finite().then_some(v)).collect(),
            });
        }
        Ok(rows)
    }
}

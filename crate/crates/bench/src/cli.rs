//! Command-line interface.

use std::collections::BTreeMap;
use std::path::PathBuf;

use aidsched::runtime::{EnvOverrides, ENV_VARS};
use aidsched::{Binding, CoreTopology};
use clap::{Args, Parser, Subcommand};

use crate::error::{BenchError, Result};
use crate::experiment::{Experiment, Mode};
use crate::report::{Body, ConfigEcho, Format, Report};
use crate::schedule_spec::{ScheduleDefaults, ScheduleSpec};
use crate::sweep::{parse_values, run_sweep, SweepParam};
use crate::workload::{Shape, WorkloadFile, WorkloadSpec, PRNG_NAME};

const DEFAULT_SCHEDULE: &str = "aid_static";
const DEFAULT_BASELINE: &str = "static(SB)";

#[derive(Debug, Parser)]
#[command(name = "aidsched", version, about = "Loop scheduling experiments on real threads or the simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one schedule and the baseline.
    Run {
        /// Schedule as kind[(BS|SB|none)][,chunk]; defaults to AIDSCHED_SCHEDULE, then aid_static.
        #[arg(long)]
        schedule: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one schedule for every value of a parameter.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated list or inclusive start:end:step range.
        #[arg(long)]
        values: String,
        #[arg(long)]
        schedule: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Speedup factor of each loop on each core type.
    SfProfile {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run several schedules on the same workload.
    Compare {
        /// Schedules, e.g. `static(SB) dynamic,5 aid_dynamic`.
        #[arg(required = true)]
        schedules: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value_t = Mode::Sim)]
    pub mode: Mode,
    /// Workload file; overrides the single-loop flags below.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Shape::Uniform)]
    pub shape: Shape,
    #[arg(long, default_value_t = 100_000)]
    pub iterations: u64,
    #[arg(long, default_value_t = 1000)]
    pub base_cost_ns: u64,
    #[arg(long)]
    pub slope: Option<f64>,
    #[arg(long)]
    pub spread: Option<f64>,
    /// Seed for random loops without their own; loop i gets seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Topology file; defaults to AIDSCHED_TOPOLOGY, then --big/--small/--ratio,
    /// which carry no core ids (real mode then needs --emulate).
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub big: usize,
    #[arg(long, default_value_t = 4)]
    pub small: usize,
    #[arg(long, default_value_t = 4.0)]
    pub ratio: f64,
    /// BS, SB or none; defaults to AIDSCHED_AFFINITY, then BS.
    #[arg(long)]
    pub binding: Option<String>,
    #[arg(long)]
    pub chunk: Option<u64>,
    #[arg(long)]
    pub major_chunk: Option<u64>,
    /// Fraction (0.8) or percentage (80).
    #[arg(long)]
    pub hybrid_pct: Option<f64>,
    #[arg(long, default_value = DEFAULT_BASELINE)]
    pub baseline: String,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long)]
    pub discard_first: bool,
    /// Per-assignment overhead in ns (sim mode).
    #[arg(long, default_value_t = 0)]
    pub overhead: u64,
    /// Real mode: emulate slower core types by padding.
    #[arg(long)]
    pub emulate: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Lookup of environment variables, injectable for tests.
pub type EnvLookup<'a> = &'a dyn Fn(&str) -> Option<String>;

struct Resolved {
    experiment: Experiment,
    echo: ConfigEcho,
    env: EnvOverrides,
}

fn resolve(common: &CommonArgs, lookup: EnvLookup<'_>) -> Result<Resolved> {
    let env = EnvOverrides::from_lookup(lookup).map_err(|e| BenchError::Usage(e.to_string()))?;
    let raw_env: BTreeMap<String, String> = ENV_VARS
        .iter()
        .filter_map(|&k| lookup(k).map(|v| (k.to_string(), v)))
        .collect();

    let topology = match (&common.topology, &env.topology_path) {
        (Some(path), _) => CoreTopology::load(path)?,
        (None, Some(_)) => env.load_topology()?.expect("path present"),
        (None, None) => CoreTopology::from_counts(&[common.small, common.big], &[1.0, common.ratio])
            .map_err(|e| BenchError::Usage(e.to_string()))?,
    };
    let binding = match &common.binding {
        Some(b) => b.parse::<Binding>().map_err(BenchError::Usage)?,
        None => env.binding.unwrap_or_default(),
    };
    let mut defaults = ScheduleDefaults::default();
    if let Some(c) = common.chunk.or(env.chunk) {
        defaults.chunk = c;
    }
    if let Some(m) = common.major_chunk.or(env.major_chunk) {
        defaults.major_chunk = m;
    }
    if let Some(p) = common.hybrid_pct {
        defaults.hybrid_fraction = if p > 1.0 { p / 100.0 } else { p };
    } else if let Some(p) = env.hybrid_fraction {
        defaults.hybrid_fraction = p;
    }

    let mut loops = match &common.workload {
        Some(path) => WorkloadFile::load(path)?.loops,
        None => {
            let mut l = WorkloadSpec::new(common.shape, common.iterations, common.base_cost_ns);
            if let Some(s) = common.slope {
                l.slope = s;
            }
            if let Some(s) = common.spread {
                l.spread = s;
            }
            vec![l]
        }
    };
    for (i, l) in loops.iter_mut().enumerate() {
        if l.shape == Shape::RandomUniform && l.seed.is_none() {
            l.seed = Some(common.seed.wrapping_add(i as u64));
        }
    }

    let experiment = Experiment::new(
        common.mode,
        topology.clone(),
        binding,
        loops.clone(),
        common.repeats,
        common.discard_first,
        common.overhead,
        common.emulate,
        defaults,
    )?;
    let echo = ConfigEcho {
        mode: common.mode,
        topology,
        binding,
        repeats: common.repeats,
        discard_first: common.discard_first,
        overhead_ns: common.overhead,
        emulate: common.emulate,
        schedule_defaults: defaults,
        prng: PRNG_NAME,
        workload: loops,
        env: raw_env,
    };
    Ok(Resolved { experiment, echo, env })
}

fn schedule_arg(flag: &Option<String>, env: &EnvOverrides) -> Result<ScheduleSpec> {
    flag.as_deref()
        .or(env.schedule.as_deref())
        .unwrap_or(DEFAULT_SCHEDULE)
        .parse()
}

/// Runs a parsed command and writes its report.
pub fn execute(cli: &Cli, lookup: EnvLookup<'_>) -> Result<()> {
    let (report, common) = build_report(cli, lookup)?;
    for w in &report.warnings {
        eprintln!("aidsched: warning: {w}");
    }
    report.write(common.format, common.out.as_deref())
}

pub fn build_report<'a>(cli: &'a Cli, lookup: EnvLookup<'_>) -> Result<(Report, &'a CommonArgs)> {
    match &cli.command {
        Command::Run { schedule, common } => {
            let r = resolve(common, lookup)?;
            let spec = schedule_arg(schedule, &r.env)?;
            let baseline: ScheduleSpec = common.baseline.parse()?;
            let results = r.experiment.compare(std::slice::from_ref(&spec), &baseline)?;
            let report = Report::new("run", r.echo, Some(baseline.to_string()), Body::Results { results })
                .with_warnings(r.experiment.warnings());
            Ok((report, common))
        }
        Command::Compare { schedules, common } => {
            let r = resolve(common, lookup)?;
            let specs = schedules
                .iter()
                .map(|s| s.parse::<ScheduleSpec>())
                .collect::<Result<Vec<_>>>()?;
            let baseline: ScheduleSpec = common.baseline.parse()?;
            let results = r.experiment.compare(&specs, &baseline)?;
            let report = Report::new("compare", r.echo, Some(baseline.to_string()), Body::Results { results })
                .with_warnings(r.experiment.warnings());
            Ok((report, common))
        }
        Command::Sweep { param, values, schedule, common } => {
            let values = parse_values(values)?;
            let r = resolve(common, lookup)?;
            let spec = schedule_arg(schedule, &r.env)?;
            let baseline: ScheduleSpec = common.baseline.parse()?;
            let rows = run_sweep(&r.experiment, *param, &values, &spec, &baseline)?;
            let body = Body::Sweep {
                parameter: *param,
                schedule: spec.to_string(),
                rows,
            };
            let report = Report::new("sweep", r.echo, Some(baseline.to_string()), body)
                .with_warnings(r.experiment.warnings());
            Ok((report, common))
        }
        Command::SfProfile { common } => {
            let r = resolve(common, lookup)?;
            let rows = r.experiment.sf_profile()?;
            Ok((Report::new("sf-profile", r.echo, None, Body::SfProfile { sf_profile: rows }), common))
        }
    }
}

pub fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(&cli, &|k| std::env::var(k).ok()) {
        eprintln!("aidsched: {e}");
        std::process::exit(e.exit_code());
    }
}

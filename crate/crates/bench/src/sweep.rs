//! Parameter sweeps over a base experiment.

use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::experiment::{normalized, Experiment, ScheduleResult, Stats};
use crate::schedule_spec::ScheduleSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    Chunk,
    MajorChunk,
    HybridPct,
    SpeedRatio,
    Overhead,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub result: ScheduleResult,
    pub baseline: Stats,
    pub normalized: Option<f64>,
    /// Lowest geometric mean of the sweep.
    pub best: bool,
}

/// Parses `a,b,c` or an inclusive `start:end:step` range.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let usage = |m: &str| BenchError::Usage(format!("--values {text:?}: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, end, step] = parts[..] else {
            return Err(usage("expected start:end:step"));
        };
        let (start, end, step) = match (num(start), num(end), num(step)) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(usage("range bounds must be numbers")),
        };
        if step <= 0.0 {
            return Err(usage("step must be positive"));
        }
        if end < start {
            return Err(usage("empty range"));
        }
        let n = ((end - start) / step + 1e-9).floor() as u64 + 1;
        if n > 100_000 {
            return Err(usage("range has too many values"));
        }
        (0..n).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| num(s).ok_or_else(|| usage(&format!("{s:?} is not a number"))))
            .collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(usage("empty range"));
    }
    Ok(values)
}

fn positive_int(param: SweepParam, v: f64) -> Result<u64> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as u64)
    } else {
        Err(BenchError::Usage(format!("{param:?} values must be positive integers, got {v}")))
    }
}

/// The experiment and schedule with `param` set to `value`.
pub fn apply(
    param: SweepParam,
    value: f64,
    base: &Experiment,
    spec: &ScheduleSpec,
) -> Result<(Experiment, ScheduleSpec)> {
    let mut exp = base.clone();
    let mut spec = spec.clone();
    match param {
        SweepParam::Chunk => spec.chunk = Some(positive_int(param, value)?),
        SweepParam::MajorChunk => exp.defaults.major_chunk = positive_int(param, value)?,
        SweepParam::HybridPct => {
            let p = if value > 1.0 { value / 100.0 } else { value };
            if !(p > 0.0 && p <= 1.0) {
                return Err(BenchError::Usage(format!("hybrid_pct {value} outside (0, 1] or (0, 100]")));
            }
            exp.defaults.hybrid_fraction = p;
        }
        SweepParam::SpeedRatio => {
            if !exp.topology.is_asymmetric() {
                return Err(BenchError::Usage("speed_ratio sweeps need an asymmetric topology".into()));
            }
            if value < 1.0 {
                return Err(BenchError::Usage(format!("speed_ratio {value} below 1")));
            }
            // Rescale linearly so the fastest type runs at `value`.
            let speeds = exp.topology.speeds();
            let top = speeds.iter().copied().fold(1.0, f64::max);
            let scaled: Vec<f64> = speeds
                .iter()
                .map(|s| 1.0 + (s - 1.0) * (value - 1.0) / (top - 1.0))
                .collect();
            exp.topology = exp.topology.with_speeds(&scaled)?;
        }
        SweepParam::Overhead => {
            if exp.mode != crate::experiment::Mode::Sim {
                return Err(BenchError::Usage("overhead sweeps run in sim mode only".into()));
            }
            if value < 0.0 || value.fract() != 0.0 {
                return Err(BenchError::Usage(format!("overhead {value} must be a whole number of ns")));
            }
            exp.overhead_ns = value as u64;
        }
    }
    Ok((exp, spec))
}

pub fn run_sweep(
    base: &Experiment,
    param: SweepParam,
    values: &[f64],
    spec: &ScheduleSpec,
    baseline: &ScheduleSpec,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(BenchError::Usage("empty range".into()));
    }
    // Validate every value before running anything.
    let setups = values
        .iter()
        .map(|&v| apply(param, v, base, spec).map(|s| (v, s)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for (value, (exp, spec)) in setups {
        let result = exp.run_schedule(&spec)?;
        let base_stats = exp.run_schedule(baseline)?.stats;
        rows.push(SweepRow {
            value,
            normalized: normalized(base_stats.geomean_ns, result.stats.geomean_ns),
            result,
            baseline: base_stats,
            best: false,
        });
    }
    let best = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.result.stats.geomean_ns.total_cmp(&b.1.result.stats.geomean_ns))
        .map(|(i, _)| i);
    if let Some(i) = best {
        rows[i].best = true;
    }
    Ok(rows)
}

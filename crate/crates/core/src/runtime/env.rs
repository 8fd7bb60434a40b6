//! Runtime configuration from environment variables.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedulers::ScheduleConfig;
use crate::topology::{Binding, CoreTopology};

pub const ENV_SCHEDULE: &str = "AIDSCHED_SCHEDULE";
pub const ENV_CHUNK: &str = "AIDSCHED_CHUNK";
pub const ENV_MAJOR_CHUNK: &str = "AIDSCHED_MAJOR_CHUNK";
pub const ENV_HYBRID_PCT: &str = "AIDSCHED_HYBRID_PCT";
pub const ENV_AFFINITY: &str = "AIDSCHED_AFFINITY";
pub const ENV_TOPOLOGY: &str = "AIDSCHED_TOPOLOGY";

pub const ENV_VARS: [&str; 6] = [
    ENV_SCHEDULE,
    ENV_CHUNK,
    ENV_MAJOR_CHUNK,
    ENV_HYBRID_PCT,
    ENV_AFFINITY,
    ENV_TOPOLOGY,
];

/// Overrides read from the environment; `None` leaves a setting untouched.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnvOverrides {
    /// Raw `kind[,chunk]` string.
    pub schedule: Option<String>,
    pub chunk: Option<u64>,
    pub major_chunk: Option<u64>,
    pub hybrid_fraction: Option<f64>,
    pub binding: Option<Binding>,
    pub topology_path: Option<PathBuf>,
}

fn bad(var: &'static str, value: &str, reason: impl Into<String>) -> Error {
    Error::Env {
        var,
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn positive(var: &'static str, value: &str) -> Result<u64> {
    match value.trim().parse::<u64>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(bad(var, value, "expected a positive integer")),
    }
}

impl EnvOverrides {
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|name| std::env::var(name).ok())
    }

    /// Reads the variables through `lookup`, validating every value.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut out = EnvOverrides::default();
        if let Some(v) = lookup(ENV_SCHEDULE) {
            ScheduleConfig::<f64>::parse(&v).map_err(|e| bad(ENV_SCHEDULE, &v, e.to_string()))?;
            out.schedule = Some(v);
        }
        if let Some(v) = lookup(ENV_CHUNK) {
            out.chunk = Some(positive(ENV_CHUNK, &v)?);
        }
        if let Some(v) = lookup(ENV_MAJOR_CHUNK) {
            out.major_chunk = Some(positive(ENV_MAJOR_CHUNK, &v)?);
        }
        if let Some(v) = lookup(ENV_HYBRID_PCT) {
            // Accepts a fraction ("0.8") or a percentage ("80").
            let p: f64 = v
                .trim()
                .trim_end_matches('%')
                .parse()
                .map_err(|_| bad(ENV_HYBRID_PCT, &v, "expected a number"))?;
            let p = if p > 1.0 { p / 100.0 } else { p };
            if !(p > 0.0 && p <= 1.0) {
                return Err(bad(ENV_HYBRID_PCT, &v, "fraction must be in (0, 1]"));
            }
            out.hybrid_fraction = Some(p);
        }
        if let Some(v) = lookup(ENV_AFFINITY) {
            out.binding = Some(v.parse().map_err(|e: String| bad(ENV_AFFINITY, &v, e))?);
        }
        if let Some(v) = lookup(ENV_TOPOLOGY) {
            out.topology_path = Some(PathBuf::from(v));
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        *self == EnvOverrides::default()
    }

    /// Applies the schedule-related overrides.
    pub fn apply_schedule<T: Scalar>(&self, cfg: &mut ScheduleConfig<T>) -> Result<()> {
        if let Some(s) = &self.schedule {
            cfg.apply_schedule_str(s)
                .map_err(|e| bad(ENV_SCHEDULE, s, e.to_string()))?;
        }
        if let Some(c) = self.chunk {
            cfg.chunk = c;
        }
        if let Some(m) = self.major_chunk {
            cfg.major_chunk = m;
        }
        if let Some(p) = self.hybrid_fraction {
            cfg.hybrid_fraction = T::from_f64_lossy(p);
        }
        Ok(())
    }

    /// Loads the topology file named by `AIDSCHED_TOPOLOGY`, if set.
    pub fn load_topology(&self) -> Result<Option<CoreTopology>> {
        self.topology_path
            .as_ref()
            .map(CoreTopology::load)
            .transpose()
            .map_err(|e| bad(ENV_TOPOLOGY, &self.topology_path.as_ref().unwrap().display().to_string(), e.to_string()))
    }
}

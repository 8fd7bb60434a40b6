//! Schedule names as written on the command line: `kind[(binding)][,chunk]`,
//! for example `static(SB)`, `dynamic,5` or `aid_dynamic(BS),2`.

use std::fmt;
use std::str::FromStr;

use aidsched::{Binding, ScheduleConfig, ScheduleKind};
use serde::Serialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleDefaults {
    pub chunk: u64,
    pub major_chunk: u64,
    pub hybrid_fraction: f64,
}

impl Default for ScheduleDefaults {
    fn default() -> Self {
        let c = ScheduleConfig::<f64>::new(ScheduleKind::Dynamic);
        Self {
            chunk: c.chunk,
            major_chunk: c.major_chunk,
            hybrid_fraction: c.hybrid_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub binding: Option<Binding>,
    pub chunk: Option<u64>,
}

impl ScheduleSpec {
    /// Effective scheduler configuration and binding.
    pub fn resolve(&self, defaults: &ScheduleDefaults, binding: Binding) -> Result<(ScheduleConfig, Binding)> {
        let cfg = ScheduleConfig::<f64>::new(self.kind)
            .with_chunk(self.chunk.unwrap_or(defaults.chunk))
            .with_major_chunk(defaults.major_chunk)
            .with_hybrid_fraction(defaults.hybrid_fraction);
        cfg.validate().map_err(|e| BenchError::Usage(format!("schedule {self}: {e}")))?;
        Ok((cfg, self.binding.unwrap_or(binding)))
    }
}

impl FromStr for ScheduleSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let usage = |m: String| BenchError::Usage(m);
        let (head, chunk) = match s.split_once(',') {
            Some((h, c)) => {
                let c: u64 = c
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| usage(format!("schedule {s:?}: chunk must be a positive integer")))?;
                (h.trim(), Some(c))
            }
            None => (s.trim(), None),
        };
        let (name, binding) = match head.split_once('(') {
            Some((name, rest)) => {
                let b = rest
                    .strip_suffix(')')
                    .ok_or_else(|| usage(format!("schedule {s:?}: missing ')'")))?;
                let b = Binding::from_str(b).map_err(|e| usage(format!("schedule {s:?}: {e}")))?;
                (name, Some(b))
            }
            None => (head, None),
        };
        let kind = ScheduleKind::from_str(name).map_err(|e| usage(e.to_string()))?;
        Ok(Self { kind, binding, chunk })
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if let Some(b) = self.binding {
            write!(f, "({b})")?;
        }
        if let Some(c) = self.chunk {
            write!(f, ",{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        for s in ["static(SB)", "dynamic,5", "aid_dynamic(BS),2", "guided", "static(none)"] {
            assert_eq!(s.parse::<ScheduleSpec>().unwrap().to_string(), s);
        }
        assert_eq!("AID-static".parse::<ScheduleSpec>().unwrap().to_string(), "aid_static");
    }

    #[test]
    fn rejects_bad_specs() {
        let err = "fastest".parse::<ScheduleSpec>().unwrap_err().to_string();
        assert!(err.contains("aid_hybrid"), "{err}");
        assert!("static(XY)".parse::<ScheduleSpec>().is_err());
        assert!("static(SB".parse::<ScheduleSpec>().is_err());
        assert!("dynamic,0".parse::<ScheduleSpec>().is_err());
        assert!("dynamic,x".parse::<ScheduleSpec>().is_err());
    }

    #[test]
    fn resolution_prefers_the_spec() {
        let d = ScheduleDefaults { chunk: 4, ..Default::default() };
        let (cfg, b) = "dynamic(SB),9".parse::<ScheduleSpec>().unwrap().resolve(&d, Binding::BigFirst).unwrap();
        assert_eq!((cfg.chunk, b), (9, Binding::SmallFirst));
        let (cfg, b) = "dynamic".parse::<ScheduleSpec>().unwrap().resolve(&d, Binding::BigFirst).unwrap();
        assert_eq!((cfg.chunk, b), (4, Binding::BigFirst));
        let bad = ScheduleDefaults { major_chunk: 2, ..d };
        assert!("aid_dynamic".parse::<ScheduleSpec>().unwrap().resolve(&bad, Binding::BigFirst).is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Static,
    Dynamic,
    Guided,
    AidStatic,
    AidHybrid,
    AidDynamic,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 6] = [
        ScheduleKind::Static,
        ScheduleKind::Dynamic,
        ScheduleKind::Guided,
        ScheduleKind::AidStatic,
        ScheduleKind::AidHybrid,
        ScheduleKind::AidDynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Static => "static",
            ScheduleKind::Dynamic => "dynamic",
            ScheduleKind::Guided => "guided",
            ScheduleKind::AidStatic => "aid_static",
            ScheduleKind::AidHybrid => "aid_hybrid",
            ScheduleKind::AidDynamic => "aid_dynamic",
        }
    }

    pub fn is_aid(self) -> bool {
        matches!(
            self,
            ScheduleKind::AidStatic | ScheduleKind::AidHybrid | ScheduleKind::AidDynamic
        )
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ScheduleKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let valid: Vec<&str> = ScheduleKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidSchedule(format!(
                    "unknown schedule {s:?}; valid kinds: {}",
                    valid.join(", ")
                ))
            })
    }
}

pub const DEFAULT_CHUNK: u64 = 1;
pub const DEFAULT_MAJOR_CHUNK: u64 = 5;
pub const DEFAULT_HYBRID_FRACTION: f64 = 0.80;

/// A scheduling policy and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig<T = f64> {
    pub kind: ScheduleKind,
    /// Chunk for dynamic/guided, the sampling chunk of the AID kinds, and
    /// the minor chunk m of AID-dynamic.
    pub chunk: u64,
    /// Major chunk M of AID-dynamic.
    pub major_chunk: u64,
    /// Fraction P of the iterations AID-hybrid distributes asymmetrically.
    pub hybrid_fraction: T,
}

impl<T: Scalar> Default for ScheduleConfig<T> {
    fn default() -> Self {
        Self::new(ScheduleKind::Static)
    }
}

impl<T: Scalar> ScheduleConfig<T> {
    pub fn new(kind: ScheduleKind) -> Self {
        Self {
            kind,
            chunk: DEFAULT_CHUNK,
            major_chunk: DEFAULT_MAJOR_CHUNK,
            hybrid_fraction: T::from_f64_lossy(DEFAULT_HYBRID_FRACTION),
        }
    }

    pub fn with_chunk(mut self, chunk: u64) -> Self {
        self.chunk = chunk;
        self
    }

    pub fn with_major_chunk(mut self, major: u64) -> Self {
        self.major_chunk = major;
        self
    }

    pub fn with_hybrid_fraction(mut self, p: T) -> Self {
        self.hybrid_fraction = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk == 0 {
            return Err(Error::InvalidSchedule("chunk must be at least 1".into()));
        }
        if self.major_chunk == 0 {
            return Err(Error::InvalidSchedule("major chunk must be at least 1".into()));
        }
        if self.kind == ScheduleKind::AidDynamic && self.major_chunk < self.chunk {
            return Err(Error::InvalidSchedule(format!(
                "major chunk {} is smaller than minor chunk {}",
                self.major_chunk, self.chunk
            )));
        }
        let p = self.hybrid_fraction;
        if !(p > T::zero() && p <= T::one()) {
            return Err(Error::InvalidSchedule(format!(
                "hybrid fraction {p} is outside (0, 1]"
            )));
        }
        Ok(())
    }

    /// Parses `kind[,chunk]`, e.g. `dynamic,4`. Unspecified parameters
    /// keep their defaults.
    pub fn parse(s: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_schedule_str(s)?;
        Ok(cfg)
    }

    /// Applies `kind[,chunk]` on top of this configuration.
    pub fn apply_schedule_str(&mut self, s: &str) -> Result<()> {
        let (kind, chunk) = match s.split_once(',') {
            Some((k, c)) => (k, Some(c)),
            None => (s, None),
        };
        self.kind = kind.parse()?;
        if let Some(c) = chunk {
            self.chunk = c.trim().parse().map_err(|_| {
                Error::InvalidSchedule(format!("chunk {c:?} is not a positive integer"))
            })?;
        }
        Ok(())
    }

    /// Iterations AID-static/AID-hybrid distribute asymmetrically out of `ni`.
    pub fn planned_iterations(&self, ni: u64) -> u64 {
        match self.kind {
            ScheduleKind::AidHybrid => {
                let planned = (self.hybrid_fraction * T::from_u64_lossy(ni)).floor();
                planned.to_u64().unwrap_or(0).min(ni)
            }
            _ => ni,
        }
    }
}

impl<T: Scalar> fmt::Display for ScheduleConfig<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScheduleKind::Static => write!(f, "static"),
            ScheduleKind::Dynamic | ScheduleKind::Guided | ScheduleKind::AidStatic => {
                write!(f, "{}({})", self.kind, self.chunk)
            }
            ScheduleKind::AidHybrid => write!(
                f,
                "aid_hybrid({},{:.0}%)",
                self.chunk,
                self.hybrid_fraction.as_f64() * 100.0
            ),
            ScheduleKind::AidDynamic => {
                write!(f, "aid_dynamic(m={},M={})", self.chunk, self.major_chunk)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = ScheduleConfig::<f64>::new(ScheduleKind::AidDynamic);
        assert_eq!((cfg.chunk, cfg.major_chunk, cfg.hybrid_fraction), (1, 5, 0.8));
        cfg.validate().unwrap();
    }

    #[test]
    fn parse_kind_and_chunk() {
        let cfg = ScheduleConfig::<f64>::parse("dynamic,1").unwrap();
        assert_eq!((cfg.kind, cfg.chunk), (ScheduleKind::Dynamic, 1));
        let cfg = ScheduleConfig::<f32>::parse("aid-hybrid").unwrap();
        assert_eq!(cfg.kind, ScheduleKind::AidHybrid);
        let err = ScheduleConfig::<f64>::parse("fastest").unwrap_err();
        assert!(err.to_string().contains("aid_dynamic"));
        assert!(ScheduleConfig::<f64>::parse("dynamic,x").is_err());
    }

    #[test]
    fn validation() {
        let bad = ScheduleConfig::<f64>::new(ScheduleKind::AidDynamic)
            .with_chunk(6)
            .with_major_chunk(5);
        assert!(bad.validate().is_err());
        assert!(ScheduleConfig::<f64>::new(ScheduleKind::Dynamic)
            .with_chunk(0)
            .validate()
            .is_err());
        assert!(ScheduleConfig::<f64>::new(ScheduleKind::AidHybrid)
            .with_hybrid_fraction(0.0)
            .validate()
            .is_err());
        // M only constrains AID-dynamic.
        ScheduleConfig::<f64>::new(ScheduleKind::Dynamic)
            .with_chunk(50)
            .validate()
            .unwrap();
    }

    #[test]
    fn hybrid_plan_length() {
        let cfg = ScheduleConfig::<f64>::new(ScheduleKind::AidHybrid);
        assert_eq!(cfg.planned_iterations(1000), 800);
        assert_eq!(cfg.planned_iterations(7), 5);
        let cfg = ScheduleConfig::<f64>::new(ScheduleKind::AidStatic);
        assert_eq!(cfg.planned_iterations(1000), 1000);
    }
}

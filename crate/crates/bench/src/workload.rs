//! Synthetic loop workloads: per-iteration reference costs on the slowest
//! core type.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const WORKLOAD_SCHEMA_VERSION: u32 = 1;

/// Name of the generator behind `random_uniform`, echoed in reports.
pub const PRNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Shape {
    Uniform,
    LinearIncreasing,
    LinearDecreasing,
    RandomUniform,
    Phased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    /// Fraction of the loop, in (0, 1], at which this phase ends.
    pub end: f64,
    /// Cost multiplier relative to `base_cost_ns`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub shape: Shape,
    pub iterations: u64,
    pub base_cost_ns: u64,
    /// Linear shapes: the last (or first) iteration costs
    /// `base * (1 + slope)`.
    #[serde(default = "default_slope")]
    pub slope: f64,
    /// Random shape: costs are uniform in `base * [1 - spread, 1 + spread]`.
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<PhaseSpec>,
    /// Per-core-type speed of this loop, slowest first, overriding the
    /// topology's speeds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speedups: Option<Vec<f64>>,
}

fn default_name() -> String {
    "loop".into()
}

fn default_slope() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    pub schema_version: u32,
    #[serde(rename = "loop")]
    pub loops: Vec<WorkloadSpec>,
}

impl WorkloadFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: WorkloadFile =
            toml::from_str(text).map_err(|e| BenchError::Workload(e.message().to_string()))?;
        if file.schema_version != WORKLOAD_SCHEMA_VERSION {
            return Err(BenchError::Workload(format!(
                "unsupported schema_version {} (expected {WORKLOAD_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        if file.loops.is_empty() {
            return Err(BenchError::Workload("no [[loop]] entries".into()));
        }
        for l in &file.loops {
            l.validate()?;
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            BenchError::Workload(m) => BenchError::Workload(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

impl WorkloadSpec {
    pub fn new(shape: Shape, iterations: u64, base_cost_ns: u64) -> Self {
        Self {
            name: default_name(),
            shape,
            iterations,
            base_cost_ns,
            slope: default_slope(),
            spread: default_spread(),
            seed: None,
            phases: Vec::new(),
            speedups: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Workload(format!("loop {:?}: {m}", self.name)));
        if self.iterations > aidsched::iter_pool::MAX_ITERATIONS {
            return fail(format!("iterations {} too large", self.iterations));
        }
        if self.base_cost_ns == 0 {
            return fail("base_cost_ns must be positive".into());
        }
        if !(self.slope.is_finite() && self.slope >= 0.0) {
            return fail(format!("slope {} must be finite and non-negative", self.slope));
        }
        if !(0.0..1.0).contains(&self.spread) {
            return fail(format!("spread {} must be in [0, 1)", self.spread));
        }
        if self.shape == Shape::Phased {
            if self.phases.is_empty() {
                return fail("phased shape needs at least one phase".into());
            }
            let mut prev = 0.0;
            for p in &self.phases {
                if !(p.end > prev && p.end <= 1.0) {
                    return fail(format!("phase ends must increase within (0, 1], got {}", p.end));
                }
                if !(p.scale.is_finite() && p.scale > 0.0) {
                    return fail(format!("phase scale {} must be positive", p.scale));
                }
                prev = p.end;
            }
            if prev != 1.0 {
                return fail("the last phase must end at 1.0".into());
            }
        }
        if let Some(s) = &self.speedups {
            if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return fail("speedups must be positive".into());
            }
        }
        Ok(())
    }

    /// Reference cost of every iteration, in nanoseconds on the slowest
    /// core type. Every cost is at least 1.
    pub fn costs(&self) -> Vec<u64> {
        let n = self.iterations;
        let base = self.base_cost_ns as f64;
        let at = |x: f64| (x.round() as u64).max(1);
        match self.shape {
            Shape::Uniform => vec![self.base_cost_ns; n as usize],
            Shape::LinearIncreasing => (0..n)
                .map(|i| at(base * (1.0 + self.slope * i as f64 / n as f64)))
                .collect(),
            Shape::LinearDecreasing => (0..n)
                .map(|i| at(base * (1.0 + self.slope * (n - 1 - i) as f64 / n as f64)))
                .collect(),
            Shape::RandomUniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
                (0..n)
                    .map(|_| at(base * (1.0 + self.spread * (2.0 * rng.gen::<f64>() - 1.0))))
                    .collect()
            }
            Shape::Phased => (0..n)
                .map(|i| {
                    let x = i as f64 / n as f64;
                    let phase = self.phases.iter().find(|p| x < p.end).or(self.phases.last());
                    at(base * phase.map_or(1.0, |p| p.scale))
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let mut w = WorkloadSpec::new(Shape::LinearIncreasing, 4, 100);
        assert_eq!(w.costs(), vec![100, 125, 150, 175]);
        w.shape = Shape::LinearDecreasing;
        assert_eq!(w.costs(), vec![175, 150, 125, 100]);
        w.shape = Shape::Phased;
        w.phases = vec![PhaseSpec { end: 0.5, scale: 1.0 }, PhaseSpec { end: 1.0, scale: 3.0 }];
        assert_eq!(w.costs(), vec![100, 100, 300, 300]);
        assert!(WorkloadSpec::new(Shape::Uniform, 0, 5).costs().is_empty());
    }

    #[test]
    fn random_costs_are_seeded_and_bounded() {
        let mut w = WorkloadSpec::new(Shape::RandomUniform, 10_000, 1000);
        w.seed = Some(7);
        w.spread = 0.25;
        let a = w.costs();
        assert_eq!(a, w.costs());
        assert!(a.iter().all(|&c| (750..=1250).contains(&c)));
        w.seed = Some(8);
        assert_ne!(a, w.costs());
    }

    #[test]
    fn file_round_trip_and_validation() {
        let text = r#"
schema_version = 1
[[loop]]
name = "tail-heavy"
shape = "phased"
iterations = 1000
base_cost_ns = 200
phases = [{ end = 0.9, scale = 1.0 }, { end = 1.0, scale = 5.0 }]
"#;
        let f = WorkloadFile::from_toml_str(text).unwrap();
        assert_eq!(f.loops[0].name, "tail-heavy");
        let again = WorkloadFile::from_toml_str(&toml::to_string(&f).unwrap()).unwrap();
        assert_eq!(f, again);

        assert!(WorkloadFile::from_toml_str(&text.replace("schema_version = 1", "schema_version = 2")).is_err());
        assert!(WorkloadFile::from_toml_str(&text.replace("end = 1.0", "end = 0.95")).is_err());
        assert!(WorkloadFile::from_toml_str(&text.replace("base_cost_ns = 200", "base_cost_ns = 0")).is_err());
        assert!(WorkloadFile::from_toml_str(&text.replace("name =", "nmae =")).is_err());
    }
}

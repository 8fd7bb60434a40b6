//! Core types, per-type thread counts and the thread-to-core-type mapping.
//!
//! Core types are ordered slowest first; the slowest type has nominal
//! speed 1.0. The topology file is TOML:
//!
//! ```toml
//! schema_version = 1
//!
//! [[core_type]]
//! name = "little"
//! cores = [0, 1, 2, 3]
//! speed = 1.0
//!
//! [[core_type]]
//! name = "big"
//! cores = [4, 5, 6, 7]
//! speed = 2.0        # optional, nominal, used by simulation/emulation
//! threads = 4        # optional, defaults to the number of cores
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TOPOLOGY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreType {
    pub name: String,
    /// Worker threads placed on this core type.
    pub threads: usize,
    /// Concrete CPU ids; may be empty for simulated machines.
    #[serde(default)]
    pub cores: Vec<usize>,
    /// Nominal speed relative to the slowest type.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreTopology {
    types: Vec<CoreType>,
}

/// Thread-to-core-type placement convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Binding {
    /// Low thread ids on the fastest cores.
    #[default]
    #[serde(rename = "BS")]
    BigFirst,
    /// Low thread ids on the slowest cores.
    #[serde(rename = "SB")]
    SmallFirst,
    /// No pinning; the logical placement follows the big-first convention.
    #[serde(rename = "none")]
    Unbound,
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Binding::BigFirst => "BS",
            Binding::SmallFirst => "SB",
            Binding::Unbound => "none",
        })
    }
}

impl FromStr for Binding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "BS" | "bs" => Ok(Binding::BigFirst),
            "SB" | "sb" => Ok(Binding::SmallFirst),
            "none" | "NONE" | "" => Ok(Binding::Unbound),
            other => Err(format!("unknown binding {other:?}; expected BS, SB or none")),
        }
    }
}

impl CoreTopology {
    /// Builds a topology from types ordered slowest first. Types without
    /// threads are dropped and speeds are renormalized so the slowest
    /// remaining type has speed 1.
    pub fn new(types: Vec<CoreType>) -> Result<Self> {
        let mut types: Vec<CoreType> = types.into_iter().filter(|t| t.threads > 0).collect();
        if types.is_empty() {
            return Err(Error::InvalidTopology("no worker threads".into()));
        }
        for t in &types {
            if !(t.speed.is_finite() && t.speed > 0.0) {
                return Err(Error::InvalidTopology(format!(
                    "core type {:?} has non-positive speed {}",
                    t.name, t.speed
                )));
            }
            if !t.cores.is_empty() && t.cores.len() < t.threads {
                return Err(Error::InvalidTopology(format!(
                    "core type {:?} has {} threads but only {} cores (oversubscription)",
                    t.name,
                    t.threads,
                    t.cores.len()
                )));
            }
        }
        if types.windows(2).any(|w| w[0].speed > w[1].speed) {
            return Err(Error::InvalidTopology(
                "core types must be ordered slowest first".into(),
            ));
        }
        let mut all: Vec<usize> = types.iter().flat_map(|t| t.cores.iter().copied()).collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTopology("a core id is listed twice".into()));
        }
        let base = types[0].speed;
        for t in &mut types {
            t.speed /= base;
        }
        Ok(Self { types })
    }

    /// One thread per core with identical speeds.
    pub fn symmetric(threads: usize) -> Result<Self> {
        Self::new(vec![CoreType {
            name: "core".into(),
            threads,
            cores: (0..threads).collect(),
            speed: 1.0,
        }])
    }

    /// Two core types: `small` threads at speed 1 on cores `0..small`, `big`
    /// threads at `big_speed` on the following cores.
    pub fn big_little(big: usize, small: usize, big_speed: f64) -> Result<Self> {
        Self::new(vec![
            CoreType {
                name: "small".into(),
                threads: small,
                cores: (0..small).collect(),
                speed: 1.0,
            },
            CoreType {
                name: "big".into(),
                threads: big,
                cores: (small..small + big).collect(),
                speed: big_speed,
            },
        ])
    }

    /// Thread counts per type (slowest first) with the given speeds and no
    /// concrete core ids.
    pub fn from_counts(threads: &[usize], speeds: &[f64]) -> Result<Self> {
        if threads.len() != speeds.len() {
            return Err(Error::InvalidTopology(
                "thread and speed lists differ in length".into(),
            ));
        }
        Self::new(
            threads
                .iter()
                .zip(speeds)
                .enumerate()
                .map(|(i, (&n, &s))| CoreType {
                    name: format!("type{i}"),
                    threads: n,
                    cores: Vec::new(),
                    speed: s,
                })
                .collect(),
        )
    }

    pub fn types(&self) -> &[CoreType] {
        &self.types
    }

    /// NC.
    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    /// N_j for type `j`.
    pub fn threads_of(&self, j: usize) -> usize {
        self.types[j].threads
    }

    pub fn total_threads(&self) -> usize {
        self.types.iter().map(|t| t.threads).sum()
    }

    pub fn is_asymmetric(&self) -> bool {
        self.types.len() > 1
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.types.iter().map(|t| t.speed).collect()
    }

    pub fn has_core_ids(&self) -> bool {
        self.types.iter().all(|t| !t.cores.is_empty())
    }

    /// Same topology with new nominal speeds (slowest first).
    pub fn with_speeds(&self, speeds: &[f64]) -> Result<Self> {
        if speeds.len() != self.types.len() {
            return Err(Error::InvalidTopology(format!(
                "expected {} speeds, got {}",
                self.types.len(),
                speeds.len()
            )));
        }
        let mut types = self.types.clone();
        for (t, &s) in types.iter_mut().zip(speeds) {
            t.speed = s;
        }
        Self::new(types)
    }

    /// Core type of every thread id. Big-first places the fastest type's
    /// threads at the lowest ids; small-first the reverse.
    pub fn thread_types(&self, binding: Binding) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total_threads());
        let order: Vec<usize> = match binding {
            Binding::BigFirst | Binding::Unbound => (0..self.types.len()).rev().collect(),
            Binding::SmallFirst => (0..self.types.len()).collect(),
        };
        for j in order {
            out.extend(std::iter::repeat_n(j, self.types[j].threads));
        }
        out
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: TopologyFile = toml::from_str(text)
            .map_err(|e| Error::InvalidTopology(format!("parse error: {e}")))?;
        file.into_topology()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::TopologyFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| Error::TopologyFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        let file = TopologyFile {
            schema_version: TOPOLOGY_SCHEMA_VERSION,
            core_type: self
                .types
                .iter()
                .map(|t| CoreTypeEntry {
                    name: t.name.clone(),
                    threads: Some(t.threads),
                    cores: t.cores.clone(),
                    speed: Some(t.speed),
                })
                .collect(),
        };
        toml::to_string(&file).expect("topology serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    schema_version: u32,
    core_type: Vec<CoreTypeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoreTypeEntry {
    name: String,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    cores: Vec<usize>,
    #[serde(default)]
    speed: Option<f64>,
}

impl TopologyFile {
    fn into_topology(self) -> Result<CoreTopology> {
        if self.schema_version != TOPOLOGY_SCHEMA_VERSION {
            return Err(Error::InvalidTopology(format!(
                "unsupported schema_version {} (expected {TOPOLOGY_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let types = self
            .core_type
            .into_iter()
            .map(|e| {
                let threads = e.threads.unwrap_or(e.cores.len());
                CoreType {
                    name: e.name,
                    threads,
                    cores: e.cores,
                    speed: e.speed.unwrap_or(1.0),
                }
            })
            .collect();
        CoreTopology::new(types)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_first_mapping() {
        let topo = CoreTopology::big_little(2, 3, 2.0).unwrap();
        assert_eq!(topo.thread_types(Binding::BigFirst), vec![1, 1, 0, 0, 0]);
        assert_eq!(topo.thread_types(Binding::SmallFirst), vec![0, 0, 0, 1, 1]);
        assert_eq!(topo.total_threads(), 5);
    }

    #[test]
    fn zero_thread_type_degrades_to_symmetric() {
        let topo = CoreTopology::big_little(4, 0, 3.0).unwrap();
        assert!(!topo.is_asymmetric());
        assert_eq!(topo.speeds(), vec![1.0]);
    }

    #[test]
    fn speeds_are_normalized() {
        let topo = CoreTopology::from_counts(&[2, 2], &[0.5, 2.0]).unwrap();
        assert_eq!(topo.speeds(), vec![1.0, 4.0]);
    }

    #[test]
    fn rejects_bad_topologies() {
        assert!(CoreTopology::from_counts(&[0, 0], &[1.0, 2.0]).is_err());
        assert!(CoreTopology::from_counts(&[1, 1], &[2.0, 1.0]).is_err());
        assert!(CoreTopology::from_counts(&[1], &[0.0]).is_err());
        let oversubscribed = CoreType {
            name: "x".into(),
            threads: 3,
            cores: vec![0, 1],
            speed: 1.0,
        };
        assert!(CoreTopology::new(vec![oversubscribed]).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            schema_version = 1
            [[core_type]]
            name = "little"
            cores = [0, 1, 2, 3]
            [[core_type]]
            name = "big"
            cores = [4, 5, 6, 7]
            speed = 2.5
        "#;
        let topo = CoreTopology::from_toml_str(text).unwrap();
        assert_eq!(topo.threads_of(1), 4);
        assert_eq!(topo.types()[1].cores, vec![4, 5, 6, 7]);
        let again = CoreTopology::from_toml_str(&topo.to_toml_string()).unwrap();
        assert_eq!(topo, again);
    }

    #[test]
    fn toml_schema_version_checked() {
        let text = "schema_version = 2\n[[core_type]]\nname = \"a\"\nthreads = 1\n";
        assert!(CoreTopology::from_toml_str(text).is_err());
    }
}

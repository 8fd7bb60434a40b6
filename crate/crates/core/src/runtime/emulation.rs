//! Software emulation of slow cores on a symmetric machine.
//!
//! Threads on a slow core type execute every range and then spin for
//! `(multiplier - 1)` times the range's measured duration.

use std::hint::black_box;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::CoreTopology;

/// Per-core-type work multipliers; the fastest type has multiplier 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emulation {
    multipliers: Vec<f64>,
}

impl Emulation {
    pub fn new(multipliers: Vec<f64>) -> Result<Self> {
        if multipliers.is_empty() {
            return Err(Error::InvalidRuntime("emulation needs at least one multiplier".into()));
        }
        if multipliers.iter().any(|m| !(m.is_finite() && *m >= 1.0)) {
            return Err(Error::InvalidRuntime(format!(
                "emulation multipliers must be >= 1, got {multipliers:?}"
            )));
        }
        Ok(Self { multipliers })
    }

    /// Multipliers that make every type run at its nominal topology speed:
    /// `max_speed / speed_j`.
    pub fn from_topology(topo: &CoreTopology) -> Self {
        let speeds = topo.speeds();
        let max = speeds.iter().copied().fold(1.0, f64::max);
        Self {
            multipliers: speeds.iter().map(|s| max / s).collect(),
        }
    }

    pub fn multiplier(&self, core_type: usize) -> f64 {
        self.multipliers[core_type]
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }
}

/// Busy-waits until `d` has elapsed.
#[inline]
pub fn spin_for(d: Duration) {
    if d.is_zero() {
        return;
    }
    let until = Instant::now() + d;
    while Instant::now() < until {
        std::hint::spin_loop();
    }
}

/// Pads a piece of work that took `elapsed` so that it costs `multiplier`
/// times as much in total.
#[inline]
pub fn pad(elapsed: Duration, multiplier: f64) {
    if multiplier > 1.0 {
        spin_for(elapsed.mul_f64(multiplier - 1.0));
    }
}

fn kernel(rounds: u64) -> u64 {
    let mut x = 0x9e37_79b9_7f4a_7c15u64;
    for i in 0..rounds {
        x = black_box(x.rotate_left(5) ^ i).wrapping_mul(0x2545_f491_4f6c_dd1d);
    }
    x
}

/// Kernel rounds per nanosecond, measured once per process.
pub fn calibration() -> f64 {
    static RATE: OnceLock<f64> = OnceLock::new();
    *RATE.get_or_init(|| {
        let mut best = 0.0f64;
        for _ in 0..5 {
            let rounds = 200_000;
            let t = Instant::now();
            black_box(kernel(rounds));
            let ns = t.elapsed().as_nanos().max(1) as f64;
            best = best.max(rounds as f64 / ns);
        }
        best
    })
}

/// Compute-bound work calibrated to take about `ns` nanoseconds on this
/// machine at calibration time.
pub fn burn_ns(ns: u64) -> u64 {
    kernel((ns as f64 * calibration()).round() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multipliers_from_topology() {
        let topo = CoreTopology::big_little(4, 4, 4.0).unwrap();
        assert_eq!(Emulation::from_topology(&topo).multipliers(), &[4.0, 1.0]);
        assert!(Emulation::new(vec![0.5]).is_err());
    }

    #[test]
    fn identity_padding() {
        let t = Instant::now();
        pad(Duration::from_millis(50), 1.0);
        assert!(t.elapsed() < Duration::from_millis(20));
    }

    #[test]
    fn padding_scales_duration() {
        // Median over repeats to ride out scheduler noise.
        let mut ratios: Vec<f64> = (0..15)
            .map(|_| {
                let t = Instant::now();
                spin_for(Duration::from_micros(200));
                let work = t.elapsed();
                pad(work, 4.0);
                t.elapsed().as_secs_f64() / work.as_secs_f64()
            })
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ratios[ratios.len() / 2];
        assert!((median - 4.0).abs() <= 0.8, "ratio {median}");
    }

    #[test]
    fn burn_is_roughly_calibrated() {
        let mut ratios: Vec<f64> = (0..9)
            .map(|_| {
                let t = Instant::now();
                burn_ns(500_000);
                t.elapsed().as_nanos() as f64 / 500_000.0
            })
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ratios[ratios.len() / 2];
        assert!((0.5..2.0).contains(&median), "ratio {median}");
    }
}

#![allow(dead_code)]

use aidsched::simulator::ScaledCost;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference costs drawn uniformly from `base * [1 - spread, 1 + spread]`.
pub fn random_uniform_costs(n: u64, base: u64, spread: f64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = (base as f64 * (1.0 - spread)).round() as u64;
    let hi = (base as f64 * (1.0 + spread)).round() as u64;
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

pub fn table_cost(costs: Vec<u64>, speeds: Vec<f64>) -> ScaledCost {
    ScaledCost::new(move |i| costs[i as usize], speeds)
}

/// Brute-force apportionment: start from the floors and hand out one unit
/// at a time to the entry furthest below its target (lowest index on ties).
/// Surplus from rounding error is taken back one unit at a time from the
/// entry furthest above its target (highest index on ties).
pub fn greedy_apportion(targets: &[f64], total: u64, eligible: &[bool]) -> Vec<u64> {
    let mut alloc: Vec<u64> = targets.iter().map(|t| t.floor().max(0.0) as u64).collect();
    loop {
        let sum: u64 = alloc.iter().sum();
        if sum == total {
            break;
        }
        if sum < total {
            let mut best: Option<usize> = None;
            for i in 0..targets.len() {
                if !eligible[i] {
                    continue;
                }
                let gap = targets[i] - alloc[i] as f64;
                match best {
                    Some(b) if targets[b] - alloc[b] as f64 >= gap => {}
                    _ => best = Some(i),
                }
            }
            match best {
                Some(b) => alloc[b] += 1,
                None => break,
            }
        } else {
            let mut best: Option<usize> = None;
            for i in 0..targets.len() {
                if alloc[i] == 0 {
                    continue;
                }
                let gap = targets[i] - alloc[i] as f64;
                match best {
                    Some(b) if targets[b] - (alloc[b] as f64) < gap => {}
                    _ => best = Some(i),
                }
            }
            alloc[best.unwrap()] -= 1;
        }
    }
    alloc
}

/// Independent evaluation of the AID-static allotment rule.
pub fn oracle_plan(
    ni: u64,
    threads_per_type: &[usize],
    factors: &[f64],
    thread_types: &[usize],
    deltas: &[u64],
) -> Vec<u64> {
    let mut denom = 0.0f64;
    for (n, f) in threads_per_type.iter().zip(factors) {
        denom += *n as f64 * f;
    }
    let k = ni as f64 / denom;
    let targets: Vec<f64> = thread_types.iter().map(|&j| factors[j] * k).collect();
    let rounded = greedy_apportion(&targets, ni, &vec![true; targets.len()]);
    let mut planned: Vec<u64> = rounded.iter().zip(deltas).map(|(r, d)| r.saturating_sub(*d)).collect();
    let remaining = ni - deltas.iter().sum::<u64>();
    let sum: u64 = planned.iter().sum();
    if sum > remaining {
        let excess = sum - remaining;
        if excess >= sum {
            return vec![0; planned.len()];
        }
        let shares: Vec<f64> = planned
            .iter()
            .map(|&p| excess as f64 * p as f64 / sum as f64)
            .collect();
        let eligible: Vec<bool> = planned.iter().map(|&p| p > 0).collect();
        let cuts = greedy_apportion(&shares, excess, &eligible);
        for (p, c) in planned.iter_mut().zip(cuts) {
            *p -= c.min(*p);
        }
    }
    planned
}

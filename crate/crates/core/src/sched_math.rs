//! Arithmetic behind asymmetric iteration distribution.
//!
//! Every function here is pure. Core type 0 is the slowest type and the
//! reference for all ratios, so its speedup factor is exactly 1.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::CoreTopology;

/// Bounds applied to speedup factors and to the AID-dynamic ratio R.
pub const SF_MIN: f64 = 1.0 / 64.0;
pub const SF_MAX: f64 = 64.0;
pub const R_MIN: f64 = SF_MIN;
pub const R_MAX: f64 = SF_MAX;
/// Bounds applied to the smoothing factor SM.
pub const SM_MIN: f64 = 1.0 / 8.0;
pub const SM_MAX: f64 = 8.0;

/// Per-core-type totals of phase completion times.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SamplingAccumulator {
    pub sums_ns: Vec<u64>,
    pub counts: Vec<usize>,
}

impl SamplingAccumulator {
    pub fn new(type_count: usize) -> Self {
        Self {
            sums_ns: vec![0; type_count],
            counts: vec![0; type_count],
        }
    }

    pub fn record(&mut self, core_type: usize, elapsed_ns: u64) {
        self.sums_ns[core_type] += elapsed_ns;
        self.counts[core_type] += 1;
    }

    pub fn reported(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Relative speed of every core type against the slowest one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupEstimate<T = f64> {
    factors: Vec<T>,
}

impl<T: Scalar> SpeedupEstimate<T> {
    /// All types equally fast.
    pub fn uniform(type_count: usize) -> Self {
        Self {
            factors: vec![T::one(); type_count],
        }
    }

    /// `factors[0]` is forced to 1; the rest are clamped to `[SF_MIN, SF_MAX]`.
    pub fn from_factors(factors: impl IntoIterator<Item = T>) -> Self {
        let lo = T::from_f64_lossy(SF_MIN);
        let hi = T::from_f64_lossy(SF_MAX);
        let mut factors: Vec<T> = factors.into_iter().map(|f| f.clamp_to(lo, hi)).collect();
        if let Some(first) = factors.first_mut() {
            *first = T::one();
        }
        Self { factors }
    }

    /// The two-type SF: speed of the fastest type relative to the slowest.
    pub fn sf(&self) -> T {
        *self.factors.last().expect("at least one core type")
    }

    pub fn factor(&self, core_type: usize) -> T {
        self.factors[core_type]
    }

    pub fn factors(&self) -> &[T] {
        &self.factors
    }
}

/// Per-thread iteration counts produced by [`plan_allotments`].
#[derive(Debug, Clone, PartialEq)]
pub struct AllotmentPlan<T = f64> {
    pub counts: Vec<u64>,
    /// Base share of a thread on the slowest type, before rounding.
    pub k: T,
}

impl<T> AllotmentPlan<T> {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn type_ratios<T: Scalar>(
    acc: &SamplingAccumulator,
    topo: &CoreTopology,
    lo: f64,
    hi: f64,
) -> Result<Vec<T>> {
    let nc = topo.type_count();
    if nc == 1 {
        return Ok(vec![T::one()]);
    }
    let mut avgs = Vec::with_capacity(nc);
    for j in 0..nc {
        let count = acc.counts.get(j).copied().unwrap_or(0);
        let sum = acc.sums_ns.get(j).copied().unwrap_or(0);
        if count == 0 || sum == 0 {
            return Err(Error::DegenerateTiming { core_type: j });
        }
        avgs.push(T::from_u64_lossy(sum) / T::from_usize_lossy(count));
    }
    let (lo, hi) = (T::from_f64_lossy(lo), T::from_f64_lossy(hi));
    let mut out = Vec::with_capacity(nc);
    out.push(T::one());
    for avg in &avgs[1..] {
        out.push((avgs[0] / *avg).clamp_to(lo, hi));
    }
    Ok(out)
}

/// SF_j = average sampling time on the slowest type / average on type j.
///
/// Fails with [`Error::DegenerateTiming`] when some type reported nothing
/// or only zero durations; callers fall back to [`SpeedupEstimate::uniform`].
pub fn estimate_sf<T: Scalar>(
    acc: &SamplingAccumulator,
    topo: &CoreTopology,
) -> Result<SpeedupEstimate<T>> {
    type_ratios(acc, topo, SF_MIN, SF_MAX).map(|factors| SpeedupEstimate { factors })
}

/// Iterations per slowest-type thread: `NI / sum_t(N_t * SF_t)`.
pub fn compute_k<T: Scalar>(ni: u64, topo: &CoreTopology, sf: &SpeedupEstimate<T>) -> T {
    let mut denom = T::zero();
    for j in 0..topo.type_count() {
        denom = denom + T::from_usize_lossy(topo.threads_of(j)) * sf.factor(j);
    }
    T::from_u64_lossy(ni) / denom
}

/// Integer apportionment of `total` units over real `targets` by largest
/// remainder. Ties go to the lower index. `eligible` restricts which
/// entries may receive a unit beyond their floor.
pub fn largest_remainder<T: Scalar>(targets: &[T], total: u64, eligible: &[bool]) -> Vec<u64> {
    debug_assert_eq!(targets.len(), eligible.len());
    let mut counts: Vec<u64> = targets
        .iter()
        .map(|t| t.floor().max(T::zero()).to_u64().unwrap_or(0))
        .collect();
    let assigned: u64 = counts.iter().sum();
    let rem = |i: usize| targets[i] - targets[i].floor();

    if assigned < total {
        let mut order: Vec<usize> = (0..targets.len()).filter(|&i| eligible[i]).collect();
        order.sort_by(|&a, &b| rem(b).partial_cmp(&rem(a)).unwrap().then(a.cmp(&b)));
        if order.is_empty() {
            return counts;
        }
        let mut left = total - assigned;
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[i] += 1;
            left -= 1;
        }
    } else if assigned > total {
        // Only reachable through floating-point error in the targets.
        let mut order: Vec<usize> = (0..targets.len()).collect();
        order.sort_by(|&a, &b| rem(a).partial_cmp(&rem(b)).unwrap().then(b.cmp(&a)));
        let mut excess = assigned - total;
        while excess > 0 {
            for &i in &order {
                if excess == 0 {
                    break;
                }
                if counts[i] > 0 {
                    counts[i] -= 1;
                    excess -= 1;
                }
            }
        }
    }
    counts
}

/// Per-thread AID allotments for a loop of `ni_total` iterations.
///
/// Thread `i` runs on core type `thread_types[i]` and has already executed
/// `deltas[i]` iterations. Its real target is `SF_j * k`; targets are
/// rounded by largest remainder to sum to `ni_total`, then `deltas[i]` is
/// subtracted. Threads that already exceeded their target get 0 and the
/// overshoot is taken back from the others, again by largest remainder in
/// proportion to their counts, so the plan sums to `ni_total - sum(deltas)`.
pub fn plan_allotments<T: Scalar>(
    ni_total: u64,
    topo: &CoreTopology,
    thread_types: &[usize],
    sf: &SpeedupEstimate<T>,
    deltas: &[u64],
) -> AllotmentPlan<T> {
    assert_eq!(thread_types.len(), deltas.len());
    let executed: u64 = deltas.iter().sum();
    assert!(executed <= ni_total, "deltas exceed the iteration count");
    let remaining = ni_total - executed;

    let k = compute_k(ni_total, topo, sf);
    let targets: Vec<T> = thread_types.iter().map(|&j| sf.factor(j) * k).collect();
    let rounded = largest_remainder(&targets, ni_total, &vec![true; targets.len()]);

    let mut counts: Vec<u64> = rounded
        .iter()
        .zip(deltas)
        .map(|(&r, &d)| r.saturating_sub(d))
        .collect();
    let planned: u64 = counts.iter().sum();
    if planned > remaining {
        let excess = planned - remaining;
        let cuts = proportional_cuts(&counts, excess);
        for (c, cut) in counts.iter_mut().zip(cuts) {
            *c -= cut;
        }
    }
    AllotmentPlan { counts, k }
}

/// Splits `excess` units of reduction over `counts` in proportion to each
/// count, by largest remainder, never cutting a count below zero.
fn proportional_cuts(counts: &[u64], excess: u64) -> Vec<u64> {
    let sum: u64 = counts.iter().sum();
    if excess >= sum {
        return counts.to_vec();
    }
    let shares: Vec<f64> = counts
        .iter()
        .map(|&c| excess as f64 * c as f64 / sum as f64)
        .collect();
    let eligible: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let mut cuts = largest_remainder(&shares, excess, &eligible);
    for (cut, &c) in cuts.iter_mut().zip(counts) {
        *cut = (*cut).min(c);
    }
    cuts
}

/// Smoothing factors SM_j = average AID-phase time on the slowest type /
/// average on type j, clamped to `[SM_MIN, SM_MAX]`. Entry 0 is 1.
pub fn compute_sm<T: Scalar>(acc: &SamplingAccumulator, topo: &CoreTopology) -> Result<Vec<T>> {
    type_ratios(acc, topo, SM_MIN, SM_MAX)
}

/// R for the next AID phase: `R' * SM`, clamped to `[R_MIN, R_MAX]`.
pub fn update_r<T: Scalar>(r_prev: T, sm: T) -> T {
    (r_prev * sm).clamp_to(T::from_f64_lossy(R_MIN), T::from_f64_lossy(R_MAX))
}

/// `round(ratio * major)`, half away from zero, never below 1.
pub fn scaled_chunk<T: Scalar>(ratio: T, major: u64) -> u64 {
    (ratio * T::from_u64_lossy(major))
        .round()
        .to_u64()
        .unwrap_or(1)
        .max(1)
}

/// True once `remaining <= M * total_threads`.
pub fn should_switch_to_tail(remaining: u64, major: u64, topo: &CoreTopology) -> bool {
    remaining <= major.saturating_mul(topo.total_threads() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Binding;
    use proptest::prelude::*;

    fn two_type(big: usize, small: usize) -> CoreTopology {
        CoreTopology::big_little(big, small, 2.0).unwrap()
    }

    fn acc(small: (u64, usize), big: (u64, usize)) -> SamplingAccumulator {
        SamplingAccumulator {
            sums_ns: vec![small.0, big.0],
            counts: vec![small.1, big.1],
        }
    }

    #[test]
    fn sf_examples() {
        let topo = two_type(4, 4);
        let sf: SpeedupEstimate = estimate_sf(&acc((4000, 4), (4000, 4)), &topo).unwrap();
        assert_eq!(sf.sf(), 1.0);
        let sf: SpeedupEstimate = estimate_sf(&acc((40_000_000, 4), (10_000_000, 4)), &topo).unwrap();
        assert_eq!(sf.sf(), 4.0);
        let sf: SpeedupEstimate<f32> = estimate_sf(&acc((77, 1), (10, 1)), &two_type(1, 1)).unwrap();
        assert!((sf.sf() - 7.7).abs() < 1e-5);
    }

    #[test]
    fn sf_degenerate_and_clamped() {
        let topo = two_type(1, 1);
        assert!(matches!(
            estimate_sf::<f64>(&acc((100, 1), (0, 1)), &topo),
            Err(Error::DegenerateTiming { core_type: 1 })
        ));
        let sf: SpeedupEstimate = estimate_sf(&acc((1_000_000, 1), (1, 1)), &topo).unwrap();
        assert_eq!(sf.sf(), SF_MAX);
        let sym = CoreTopology::symmetric(3).unwrap();
        let sf: SpeedupEstimate = estimate_sf(&SamplingAccumulator::new(1), &sym).unwrap();
        assert_eq!(sf.factors(), &[1.0]);
    }

    #[test]
    fn k_examples() {
        let topo = two_type(2, 2);
        let sf = SpeedupEstimate::from_factors([1.0, 4.0]);
        assert_eq!(compute_k(1000, &topo, &sf), 100.0);
        let sf = SpeedupEstimate::<f64>::uniform(2);
        assert_eq!(compute_k(1000, &topo, &sf), 250.0);
        let three = CoreTopology::from_counts(&[2, 2, 2], &[1.0, 2.0, 4.0]).unwrap();
        let sf = SpeedupEstimate::<f64>::from_factors([1.0, 2.0, 4.0]);
        assert!((compute_k(1400, &three, &sf) - 100.0).abs() < 1e-12);
        assert!((compute_k(1000, &three, &sf) - 1000.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn plan_examples() {
        let topo = two_type(2, 2);
        let types = topo.thread_types(Binding::BigFirst);
        let sf = SpeedupEstimate::from_factors([1.0, 4.0]);
        let plan = plan_allotments(1000, &topo, &types, &sf, &[0; 4]);
        assert_eq!(plan.counts, vec![400, 400, 100, 100]);
        assert_eq!(plan.k, 100.0);

        let plan = plan_allotments(100, &topo, &types, &SpeedupEstimate::<f64>::uniform(2), &[0; 4]);
        assert_eq!(plan.counts, vec![25; 4]);

        let one_one = two_type(1, 1);
        let sf = SpeedupEstimate::from_factors([1.0, 3.0]);
        let plan = plan_allotments(10, &one_one, &[1, 0], &sf, &[2, 1]);
        assert_eq!(plan.counts, vec![6, 1]);
        assert_eq!(plan.total(), 7);
    }

    #[test]
    fn plan_repairs_overrun() {
        // Thread 3 over-ran its target of 100 by 20; the others give it back.
        let topo = two_type(2, 2);
        let types = topo.thread_types(Binding::BigFirst);
        let sf = SpeedupEstimate::from_factors([1.0, 4.0]);
        let plan = plan_allotments(1000, &topo, &types, &sf, &[1, 1, 1, 120]);
        assert_eq!(plan.counts[3], 0);
        assert_eq!(plan.total(), 1000 - 123);
    }

    #[test]
    fn largest_remainder_ties_favor_low_ids() {
        let t = [1.5f64, 1.5, 1.5, 1.5];
        assert_eq!(largest_remainder(&t, 6, &[true; 4]), vec![2, 2, 1, 1]);
        let t = [0.2f64, 0.9, 0.9];
        assert_eq!(largest_remainder(&t, 2, &[true; 3]), vec![0, 1, 1]);
    }

    #[test]
    fn sm_and_r() {
        let topo = two_type(1, 1);
        let sm: Vec<f64> = compute_sm(&acc((10, 1), (10, 1)), &topo).unwrap();
        assert_eq!(sm[1], 1.0);
        let sm: Vec<f64> = compute_sm(&acc((20_000_000, 1), (10_000_000, 1)), &topo).unwrap();
        assert_eq!(sm[1], 2.0);
        let sm: Vec<f64> = compute_sm(&acc((10_000_000, 1), (20_000_000, 1)), &topo).unwrap();
        assert_eq!(sm[1], 0.5);
        let sm: Vec<f64> = compute_sm(&acc((1000, 1), (1, 1)), &topo).unwrap();
        assert_eq!(sm[1], SM_MAX);
        assert!(compute_sm::<f64>(&acc((10, 1), (0, 1)), &topo).is_err());

        assert_eq!(update_r(4.0, 1.0), 4.0);
        assert_eq!(update_r(4.0, 1.25), 5.0);
        assert_eq!(update_r(60.0f32, 2.0), 64.0);
    }

    #[test]
    fn scaled_chunk_rounding() {
        assert_eq!(scaled_chunk(4.0, 5), 20);
        assert_eq!(scaled_chunk(1.5, 1), 2);
        assert_eq!(scaled_chunk(2.5, 1), 3);
        assert_eq!(scaled_chunk(0.05, 5), 1);
    }

    #[test]
    fn switch_threshold() {
        let topo = two_type(4, 4);
        assert!(should_switch_to_tail(40, 5, &topo));
        assert!(!should_switch_to_tail(41, 5, &topo));
        assert!(should_switch_to_tail(0, 5, &topo));
    }

    fn topo_strategy() -> impl Strategy<Value = CoreTopology> {
        proptest::collection::vec(1usize..6, 1..4).prop_map(|counts| {
            let speeds: Vec<f64> = (0..counts.len()).map(|i| 1.0 + i as f64).collect();
            CoreTopology::from_counts(&counts, &speeds).unwrap()
        })
    }

    proptest! {
        #[test]
        fn plan_sums_to_remaining(
            topo in topo_strategy(),
            ni in 0u64..200_000,
            sf in 1.0f64..16.0,
            seed in any::<u64>(),
        ) {
            let n = topo.total_threads();
            let types = topo.thread_types(Binding::BigFirst);
            let factors: Vec<f64> = (0..topo.type_count())
                .map(|j| 1.0 + (sf - 1.0) * j as f64 / (topo.type_count().max(2) - 1) as f64)
                .collect();
            let est = SpeedupEstimate::from_factors(factors);
            // Spread a pseudo-random share of ni as deltas.
            let mut left = ni / 3;
            let mut x = seed | 1;
            let deltas: Vec<u64> = (0..n).map(|_| {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                let d = if left == 0 { 0 } else { x % (left + 1) };
                left -= d;
                d
            }).collect();
            let executed: u64 = deltas.iter().sum();
            let plan = plan_allotments(ni, &topo, &types, &est, &deltas);
            prop_assert_eq!(plan.total(), ni - executed);
        }

        #[test]
        fn k_symmetric_is_even_split(topo in topo_strategy(), ni in 0u64..10_000_000) {
            let k = compute_k(ni, &topo, &SpeedupEstimate::<f64>::uniform(topo.type_count()));
            let even = ni as f64 / topo.total_threads() as f64;
            prop_assert!((k - even).abs() <= 1e-12 * even.max(1.0));
        }

        #[test]
        fn sf_scale_invariant(a in 1u64..1_000_000, b in 1u64..1_000_000, c in 1u64..1000) {
            let topo = CoreTopology::big_little(2, 3, 2.0).unwrap();
            let base: SpeedupEstimate = estimate_sf(&acc((a * 3, 3), (b * 2, 2)), &topo).unwrap();
            let scaled: SpeedupEstimate = estimate_sf(&acc((a * 3 * c, 3), (b * 2 * c, 2)), &topo).unwrap();
            prop_assert!((base.sf() - scaled.sf()).abs() <= 1e-12 * base.sf());
        }

        #[test]
        fn r_monotone_and_bounded(r0 in 0.1f64..10.0, sms in proptest::collection::vec(0.01f64..100.0, 1..50)) {
            let mut r = r0;
            for sm in sms {
                let next = update_r(r, sm);
                prop_assert!((R_MIN..=R_MAX).contains(&next));
                prop_assert!(update_r(r, sm * 1.1) >= next);
                r = next;
            }
        }
    }
}

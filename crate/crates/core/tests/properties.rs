use std::collections::HashMap;

use proptest::prelude::*;
use qgt_core::bounds::{
    all_bounds, bound_gaussian_linear, bound_noiseless_linear, linear_coefficient, linear_union_error_bound, BoundQuery,
};
use qgt_core::decoders::{decode_linear, decode_lse_exhaustive, decode_lse_local, local_search_from, lse_loss, Method};
use qgt_core::experiments::{run_batch, DecoderKind, ExperimentConfig};
use qgt_core::{gen_bernoulli_matrix, gen_signal, observe, ChannelModel, RandomSeed, SparseSignal, TestMatrix};

fn channel_strategy() -> impl Strategy<Value = ChannelModel> {
    prop_oneof![
        Just(ChannelModel::Noiseless),
        (0.01f64..10.0).prop_map(|s| ChannelModel::Gaussian { sigma2: s }),
        (0.01f64..0.99).prop_map(|p| ChannelModel::ZChannel { p }),
    ]
}

fn naive_counts(a: &TestMatrix, x: &SparseSignal) -> Vec<u32> {
    (0..a.tests())
        .map(|i| x.support().iter().filter(|&&j| a.get(i, j)).count() as u32)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observations_respect_channel_shape(
        m in 1usize..40, n in 2usize..90, kf in 0.0f64..1.0, ch in channel_strategy(), seed in any::<u64>()
    ) {
        let k = 1 + ((n - 1) as f64 * kf) as usize;
        let a = gen_bernoulli_matrix(m, n, RandomSeed::new(seed)).unwrap();
        let x = gen_signal(n, k, RandomSeed::new(seed ^ 1)).unwrap();
        let counts = naive_counts(&a, &x);
        prop_assert_eq!(a.mul_support(&x).unwrap(), counts.clone());
        let y = observe(&a, &x, &ch, RandomSeed::new(seed ^ 2)).unwrap();
        prop_assert_eq!(y.len(), m);
        prop_assert_eq!(y.is_discrete(), ch.is_discrete());
        let again = observe(&a, &x, &ch, RandomSeed::new(seed ^ 2)).unwrap();
        prop_assert_eq!(
            y.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            again.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        if ch.is_discrete() {
            for (v, &c) in y.values().iter().zip(&counts) {
                prop_assert!(v.fract() == 0.0 && *v >= 0.0 && *v <= c as f64);
            }
        }
        if ch == ChannelModel::Noiseless {
            prop_assert!(y.values().iter().zip(&counts).all(|(v, &c)| *v == c as f64));
        }
    }

    #[test]
    fn decoders_return_sorted_k_subsets(
        m in 1usize..30, n in 3usize..14, kf in 0.0f64..1.0, ch in channel_strategy(), seed in any::<u64>()
    ) {
        let k = 1 + ((n - 2) as f64 * kf) as usize;
        let a = gen_bernoulli_matrix(m, n, RandomSeed::new(seed)).unwrap();
        let x = gen_signal(n, k, RandomSeed::new(seed ^ 1)).unwrap();
        let y = observe(&a, &x, &ch, RandomSeed::new(seed ^ 2)).unwrap();
        let lin = decode_linear(&a, &y, k).unwrap();
        let ex = decode_lse_exhaustive(&a, &y, k, &ch).unwrap();
        let loc = decode_lse_local(&a, &y, k, &ch, 3, RandomSeed::new(seed ^ 3)).unwrap();
        for r in [&lin, &ex, &loc] {
            prop_assert_eq!(r.support.len(), k);
            prop_assert!(r.support.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(r.support.iter().all(|&j| j < n));
            prop_assert_eq!(r.certified_optimal, r.method == Method::LseExhaustive);
        }
        prop_assert_eq!(decode_linear(&a, &y, k).unwrap(), lin.clone());
        // Exhaustive is a lower bound for every other candidate's loss.
        let best = ex.objective_value.unwrap();
        prop_assert!(best <= loc.objective_value.unwrap());
        let lin_loss = lse_loss(&a, &y, &SparseSignal::new(n, lin.support).unwrap(), &ch).unwrap();
        prop_assert!(best <= lin_loss);
        prop_assert!(best <= lse_loss(&a, &y, &x, &ch).unwrap());
    }

    #[test]
    fn local_search_trajectory_non_increasing(
        m in 1usize..30, n in 3usize..40, kf in 0.0f64..1.0, ch in channel_strategy(), seed in any::<u64>()
    ) {
        let k = 1 + ((n - 2) as f64 * kf) as usize;
        let a = gen_bernoulli_matrix(m, n, RandomSeed::new(seed)).unwrap();
        let x = gen_signal(n, k, RandomSeed::new(seed ^ 1)).unwrap();
        let y = observe(&a, &x, &ch, RandomSeed::new(seed ^ 2)).unwrap();
        let start = gen_signal(n, k, RandomSeed::new(seed ^ 4)).unwrap();
        let run = local_search_from(&a, &y, &ch, &start).unwrap();
        prop_assert!(run.trajectory.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*run.trajectory.last().unwrap(), run.objective);
    }

    #[test]
    fn bounds_positive_and_gaussian_offset(
        n in 3usize..100_000, kf in 0.0f64..1.0, sigma2 in 1e-3f64..100.0, p in 0.001f64..0.999
    ) {
        let k = 1 + ((n - 2) as f64 * kf) as usize;
        let q = BoundQuery::<f64>::new(n, k).unwrap().with_sigma2(sigma2).unwrap().with_p(p).unwrap();
        for b in all_bounds(&q).unwrap() {
            prop_assert!(b.tests.is_finite());
            if !b.degenerate {
                prop_assert!(b.tests > 0.0);
            }
        }
        let diff = bound_gaussian_linear(&q).unwrap().tests - bound_noiseless_linear(&q).unwrap().tests;
        let want = 32.0 * sigma2 * ((k * (n - k)) as f64).ln();
        prop_assert!((diff - want).abs() <= 1e-9 * want.max(1.0) + 1e-9 * bound_noiseless_linear(&q).unwrap().tests);
    }
}

#[test]
fn union_bound_at_one_and_two_times_the_linear_bound() {
    for (n, k, sigma2) in [(500usize, 5usize, 0.0f64), (500, 5, 1.0), (10_000, 40, 0.3)] {
        let mut q = BoundQuery::<f64>::new(n, k).unwrap();
        if sigma2 > 0.0 {
            q = q.with_sigma2(sigma2).unwrap();
        }
        let b = if sigma2 > 0.0 {
            bound_gaussian_linear(&q).unwrap()
        } else {
            bound_noiseless_linear(&q).unwrap()
        };
        let coef = linear_coefficient(k, sigma2);
        let pairs = (k * (n - k)) as f64;
        // Rounding m up moves the exponent by less than 1/coef.
        let slack = (-1.0 / coef).exp();
        let at_bound: f64 = linear_union_error_bound(n, k, coef, b.tests.ceil() as usize);
        assert!(at_bound <= 1.0 && at_bound >= slack);
        let at_twice: f64 = linear_union_error_bound(n, k, coef, (2.0 * b.tests).ceil() as usize);
        assert!(at_twice <= 1.0 / pairs && at_twice >= slack / pairs);
    }
}

/// Chi-square statistic of `draws` uniform k-subsets of `0..n` against the uniform law.
fn subset_chi_square(n: usize, k: usize, draws: u64) -> (f64, usize) {
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for s in 0..draws {
        let x = gen_signal(n, k, RandomSeed::new(s).derive(qgt_core::Purpose::Signal, 0)).unwrap();
        *counts.entry(x.support().to_vec()).or_default() += 1;
    }
    let cells = qgt_core::decoders::binomial_u128(n, k).unwrap() as usize;
    let expected = draws as f64 / cells as f64;
    let observed: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let missing = (cells - counts.len()) as f64 * expected;
    (observed + missing, cells - 1)
}

#[test]
fn signal_support_is_uniform_by_chi_square() {
    // 0.999 quantiles of chi-square with 9, 19 and 6 degrees of freedom.
    for (n, k, critical) in [(5, 2, 27.877164871256568), (6, 3, 43.82019596451753), (7, 1, 22.457744484825323)] {
        let (stat, df) = subset_chi_square(n, k, 20_000);
        assert!(stat < critical, "n={n} k={k}: chi2 = {stat:.2} on {df} df");
    }
}

#[test]
fn noiseless_exhaustive_recovers_unique_zero_loss_support() {
    let model = ChannelModel::Noiseless;
    let mut checked = 0;
    for t in 0..40u64 {
        let (n, k, m) = (6 + t as usize % 7, 1 + t as usize % 3, 6 + t as usize % 8);
        let a = gen_bernoulli_matrix(m, n, RandomSeed::new(t)).unwrap();
        let x = gen_signal(n, k, RandomSeed::new(1000 + t)).unwrap();
        let y = observe(&a, &x, &model, RandomSeed::new(0)).unwrap();
        // Count zero-loss supports by brute force over all k-subsets (bitmask enumeration).
        let mut zero = 0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let sup: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            let cand = SparseSignal::new(n, sup).unwrap();
            if lse_loss(&a, &y, &cand, &model).unwrap() == 0.0 {
                zero += 1;
            }
        }
        if zero == 1 {
            checked += 1;
            assert_eq!(decode_lse_exhaustive(&a, &y, k, &model).unwrap().support, x.support());
        }
    }
    assert!(checked >= 10, "only {checked} unique instances");
}

#[test]
fn batch_serialization_is_bit_identical_on_rerun() {
    let cfg = ExperimentConfig::new(60, 3, 25, ChannelModel::gaussian(0.5).unwrap(), DecoderKind::local())
        .with_trials(30)
        .with_seed(99);
    let mut a = qgt_core::experiments::BatchRecord::new(&cfg, &run_batch(&cfg).unwrap());
    let mut b = qgt_core::experiments::BatchRecord::new(&cfg, &run_batch(&cfg).unwrap());
    a.wall_time_ms = 0.0;
    b.wall_time_ms = 0.0;
    assert_eq!(a, b);
}

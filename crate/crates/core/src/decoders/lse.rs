use rayon::prelude::*;

use super::combinations::{binomial_u128, for_each_revolving_door};
use super::linear::decode_linear;
use super::{DecodeResult, Method};
use crate::error::{invalid, Error, Result};
use crate::model::{sample_support, ChannelModel, Observation, SparseSignal, TestMatrix};
use crate::scalar::Scalar;
use crate::seed::{Purpose, RandomSeed};

/// Largest number of candidate supports exhaustive search will enumerate.
pub const DEFAULT_EXHAUSTIVE_BUDGET: u128 = 5_000_000;

pub const DEFAULT_RESTARTS: usize = 10;

fn check_dims<T: Scalar>(a: &TestMatrix, y: &Observation<T>, k: usize) -> Result<()> {
    if y.len() != a.tests() {
        return invalid(format!(
            "observation has {} entries but the design has {} tests",
            y.len(),
            a.tests()
        ));
    }
    if k == 0 || k > a.items() {
        return invalid(format!("k = {k} must satisfy 1 <= k <= n = {}", a.items()));
    }
    Ok(())
}

fn check_candidate(a: &TestMatrix, x: &SparseSignal) -> Result<()> {
    if x.items() != a.items() {
        return invalid(format!(
            "candidate over {} items does not match design with {} items",
            x.items(),
            a.items()
        ));
    }
    Ok(())
}

/// `E[y | A, x]`: `A x` for the noiseless and Gaussian channels, `(1 - p) A x`
/// for the Z-channel.
pub fn expected_outcome<T: Scalar>(a: &TestMatrix, x: &SparseSignal, model: &ChannelModel) -> Result<Vec<T>> {
    check_candidate(a, x)?;
    model.validate()?;
    let scale = T::of(model.mean_scale());
    Ok(a.mul_support(x)?
        .into_iter()
        .map(|c| scale * T::of(c as f64))
        .collect())
}

// Every loss in this module goes through here so equal counts give
// bit-identical losses regardless of how the counts were obtained.
#[inline]
fn squared_residual<T: Scalar, C: Copy + Into<f64>>(y: &[T], counts: &[C], scale: T) -> T {
    y.iter()
        .zip(counts)
        .fold(T::zero(), |acc, (&yi, &c)| {
            let r = yi - scale * T::of(c.into());
            acc + r * r
        })
}

/// `||y - E[y | A, x]||^2`.
pub fn lse_loss<T: Scalar>(
    a: &TestMatrix,
    y: &Observation<T>,
    x: &SparseSignal,
    model: &ChannelModel,
) -> Result<T> {
    check_candidate(a, x)?;
    check_dims(a, y, x.weight())?;
    model.validate()?;
    let counts = a.mul_support(x)?;
    Ok(squared_residual(y.values(), &counts, T::of(model.mean_scale())))
}

/// `f(x) = sum_i [2 y_i A_i x - c (A_i x)^2]` with `c` the channel mean scale.
///
/// `lse_loss(x) = ||y||^2 - c f(x)`, so maximizing `f` and minimizing the loss
/// select the same supports.
pub fn lse_gain<T: Scalar>(
    a: &TestMatrix,
    y: &Observation<T>,
    x: &SparseSignal,
    model: &ChannelModel,
) -> Result<T> {
    check_candidate(a, x)?;
    check_dims(a, y, x.weight())?;
    model.validate()?;
    let c = T::of(model.mean_scale());
    let two = T::of(2.0);
    Ok(a.mul_support(x)?
        .into_iter()
        .zip(y.values())
        .fold(T::zero(), |acc, (ax, &yi)| {
            let ax = T::of(ax as f64);
            acc + two * yi * ax - c * ax * ax
        }))
}

#[inline]
fn better<T: Scalar>(loss: T, support: &[usize], best_loss: T, best: &[usize]) -> bool {
    loss < best_loss || (loss == best_loss && support < best)
}

/// Exhaustive least-squares decoding with the default budget.
pub fn decode_lse_exhaustive<T: Scalar>(
    a: &TestMatrix,
    y: &Observation<T>,
    k: usize,
    model: &ChannelModel,
) -> Result<DecodeResult<T>> {
    decode_lse_exhaustive_with_budget(a, y, k, model, DEFAULT_EXHAUSTIVE_BUDGET)
}

/// Global minimizer of the least-squares loss over all `k`-subsets.
///
/// Candidates are visited in revolving-door order with per-test counts updated
/// by one column swap per step. Ties go to the lexicographically smallest
/// support.
pub fn decode_lse_exhaustive_with_budget<T: Scalar>(
    a: &TestMatrix,
    y: &Observation<T>,
    k: usize,
    model: &ChannelModel,
    budget: u128,
) -> Result<DecodeResult<T>> {
    check_dims(a, y, k)?;
    model.validate()?;
    let n = a.items();
    let candidates = binomial_u128(n, k).unwrap_or(u128::MAX);
    if candidates > budget {
        return Err(Error::BudgetExceeded { candidates, budget });
    }

    let scale = T::of(model.mean_scale());
    let yv = y.values();
    let m = a.tests();
    let mut counts = vec![0i32; m];
    let mut best_loss = T::infinity();
    let mut best: Vec<usize> = Vec::new();

    for_each_revolving_door(n, k, |support, swap| {
        match swap {
            None => {
                for (i, c) in counts.iter_mut().enumerate() {
                    *c = support.iter().filter(|&&j| a.get(i, j)).count() as i32;
                }
            }
            Some((out, inn)) => {
                for (i, c) in counts.iter_mut().enumerate() {
                    *c += a.get(i, inn) as i32 - a.get(i, out) as i32;
                }
            }
        }
        let loss = squared_residual(yv, &counts, scale);
        if best.is_empty() || better(loss, support, best_loss, &best) {
            best_loss = loss;
            best.clear();
            best.extend_from_slice(support);
        }
    });

    Ok(DecodeResult {
        support: best,
        method: Method::LseExhaustive,
        objective_value: Some(best_loss),
        certified_optimal: true,
    })
}

/// Outcome of one swap local search.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchRun<T = f64> {
    pub support: Vec<usize>,
    pub objective: T,
    /// Loss after initialization and after every accepted swap.
    pub trajectory: Vec<T>,
}

/// Best-improvement swap search from `start` until no single swap (one item
/// out, one in) strictly lowers the loss. Among equally good swaps the first
/// in (out ascending, in ascending) order is taken.
pub fn local_search_from<T: Scalar>(
    a: &TestMatrix,
    y: &Observation<T>,
    model: &ChannelModel,
    start: &SparseSignal,
) -> Result<LocalSearchRun<T>> {
    check_candidate(a, start)?;
    check_dims(a, y, start.weight())?;
    model.validate()?;

    let n = a.items();
    let m = a.tests();
    let scale = T::of(model.mean_scale());
    let yv = y.values();

    let mut support = start.support().to_vec();
    let mut in_support = vec![false; n];
    for &j in &support {
        in_support[j] = true;
    }
    let mut counts: Vec<i32> = a.mul_support(start)?.into_iter().map(|c| c as i32).collect();
    let mut loss = squared_residual(yv, &counts, scale);
    let mut trajectory = vec![loss];
    let mut scratch = vec![0i32; m];

    loop {
        let mut best_move: Option<(usize, usize, T)> = None;
        for (slot, &out) in support.iter().enumerate() {
            for inn in (0..n).filter(|&j| !in_support[j]) {
                for (i, s) in scratch.iter_mut().enumerate() {
                    *s = counts[i] + a.get(i, inn) as i32 - a.get(i, out) as i32;
                }
                let cand = squared_residual(yv, &scratch, scale);
                let threshold = best_move.map_or(loss, |(_, _, l)| l);
                if cand < threshold {
                    best_move = Some((slot, inn, cand));
                }
            }
        }
        let Some((slot, inn, cand)) = best_move else {
            break;
        };
        let out = support[slot];
        for (i, c) in counts.iter_mut().enumerate() {
            *c += a.get(i, inn) as i32 - a.get(i, out) as i32;
        }
        in_support[out] = false;
        in_support[inn] = true;
        support[slot] = inn;
        support.sort_unstable();
        loss = cand;
        trajectory.push(loss);
    }

    Ok(LocalSearchRun {
        support,
        objective: loss,
        trajectory,
    })
}

/// Least-squares decoding by restarted swap local search.
///
/// Restart 0 starts from the linear decoder's support; restart `r >= 1` from a
/// uniform random `k`-subset drawn from `seed.derive(Decoder, r)`. The best run
/// by (loss, lexicographic support) wins.
pub fn decode_lse_local<T: Scalar>(
    a: &TestMatrix,
    y: &Observation<T>,
    k: usize,
    model: &ChannelModel,
    restarts: usize,
    seed: RandomSeed,
) -> Result<DecodeResult<T>> {
    if restarts == 0 {
        return invalid("local search needs at least one restart");
    }
    check_dims(a, y, k)?;
    model.validate()?;
    let n = a.items();

    let runs: Vec<LocalSearchRun<T>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                SparseSignal::new(n, decode_linear(a, y, k)?.support)?
            } else {
                let mut rng = seed.derive(Purpose::Decoder, r as u64).rng();
                sample_support(n, k, &mut rng)
            };
            local_search_from(a, y, model, &start)
        })
        .collect::<Result<_>>()?;

    let best = runs
        .into_iter()
        .reduce(|best, run| {
            if better(run.objective, &run.support, best.objective, &best.support) {
                run
            } else {
                best
            }
        })
        .expect("restarts >= 1");

    Ok(DecodeResult {
        support: best.support,
        method: Method::LseLocal,
        objective_value: Some(best.objective),
        certified_optimal: false,
    })
}

//! Closed-form test-count bounds for the linear and least-squares decoders
//! and the matching converse bounds, plus the auxiliary quantities their
//! derivations rely on.
//!
//! Explicit `ln` constants are always natural logarithms. The standalone
//! `log(k(n - k))` factor of the linear bounds uses the query's `log_base`
//! (default `e`); ratio-of-logs bounds do not depend on the base.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundModel {
    Noiseless,
    Gaussian,
    ZChannel,
}

impl fmt::Display for BoundModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundModel::Noiseless => "noiseless",
            BoundModel::Gaussian => "gaussian",
            BoundModel::ZChannel => "zchannel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    AchievabilityLinear,
    AchievabilityLse,
    Converse,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::AchievabilityLinear => "achievability-linear",
            BoundKind::AchievabilityLse => "achievability-lse",
            BoundKind::Converse => "converse",
        })
    }
}

/// Parameters of a bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery<T = f64> {
    pub n: usize,
    pub k: usize,
    pub sigma2: Option<T>,
    pub p: Option<T>,
    pub log_base: T,
}

impl<T: Scalar> BoundQuery<T> {
    /// Natural-log query with no channel parameters.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return invalid(format!("bounds need 1 <= k < n, got n = {n}, k = {k}"));
        }
        Ok(BoundQuery {
            n,
            k,
            sigma2: None,
            p: None,
            log_base: T::of(std::f64::consts::E),
        })
    }

    pub fn with_sigma2(mut self, sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return invalid(format!("sigma2 must be positive and finite, got {sigma2}"));
        }
        self.sigma2 = Some(sigma2);
        Ok(self)
    }

    pub fn with_p(mut self, p: T) -> Result<Self> {
        check_open_unit(p, "p")?;
        self.p = Some(p);
        Ok(self)
    }

    pub fn with_log_base(mut self, base: T) -> Result<Self> {
        if !(base > T::zero()) || base == T::one() || !base.is_finite() {
            return invalid(format!("log base must be positive, finite and != 1, got {base}"));
        }
        self.log_base = base;
        Ok(self)
    }

    /// `theta` with `k = n^theta`. Informational only.
    pub fn theta(&self) -> T {
        T::of_usize(self.k).ln() / T::of_usize(self.n).ln()
    }

    fn log(&self, v: T) -> T {
        v.ln() / self.log_base.ln()
    }

    fn sigma2_req(&self) -> Result<T> {
        self.sigma2
            .map_or_else(|| invalid("Gaussian bound requires sigma2"), Ok)
    }

    fn p_req(&self) -> Result<T> {
        self.p.map_or_else(|| invalid("Z-channel bound requires p"), Ok)
    }

    fn check(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.n {
            return invalid(format!("bounds need 1 <= k < n, got n = {}, k = {}", self.n, self.k));
        }
        Ok(())
    }

    fn kf(&self) -> T {
        T::of_usize(self.k)
    }

    fn nf(&self) -> T {
        T::of_usize(self.n)
    }

    /// `log(k (n - k))` in the query's base.
    fn pair_log(&self) -> T {
        self.log(self.kf() * T::of_usize(self.n - self.k))
    }
}

/// An evaluated bound on the number of tests `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue<T = f64> {
    pub model: BoundModel,
    pub kind: BoundKind,
    /// Real-valued bound before rounding.
    pub tests: T,
    pub log_base: T,
    /// Set when the expression hides unspecified constants or `1 + o(1)` factors.
    pub constant_caveat: bool,
    /// Set when the value carries no information (zero, non-finite or negative).
    pub degenerate: bool,
}

impl<T: Scalar> BoundValue<T> {
    fn new(model: BoundModel, kind: BoundKind, tests: T, q: &BoundQuery<T>, caveat: bool) -> Self {
        BoundValue {
            model,
            kind,
            tests,
            log_base: q.log_base,
            constant_caveat: caveat,
            degenerate: !(tests > T::zero()) || !tests.is_finite(),
        }
    }

    /// Integer test count, `ceil(tests)`; `None` when degenerate.
    pub fn tests_ceil(&self) -> Option<u64> {
        if self.degenerate {
            None
        } else {
            self.tests.ceil().to_u64()
        }
    }
}

fn check_open_unit<T: Scalar>(p: T, name: &str) -> Result<()> {
    if p > T::zero() && p < T::one() {
        Ok(())
    } else {
        invalid(format!("{name} must lie in (0, 1), got {p}"))
    }
}

fn ln3<T: Scalar>() -> T {
    T::of(3.0).ln()
}

/// `16/ln3 k + 8 - 8/ln3 + 32 sigma2`, the per-log coefficient of the
/// linear-decoder bound (noiseless when `sigma2 = 0`).
pub fn linear_coefficient<T: Scalar>(k: usize, sigma2: T) -> T {
    let l3 = ln3::<T>();
    T::of(16.0) / l3 * T::of_usize(k) + T::of(32.0) * sigma2 + T::of(8.0) - T::of(8.0) / l3
}

/// Per-log coefficient of the Z-channel linear-decoder bound.
pub fn zchannel_linear_coefficient<T: Scalar>(k: usize, p: T) -> T {
    let one = T::one();
    let q2 = (one - p) * (one - p);
    let first = T::of(16.0) * p / (q2 * ((one + p) / (one - p)).ln());
    let second = T::of(8.0) * T::of_usize(2 * k - 1) * (one + p) / (q2 * ((T::of(3.0) + p) / (one - p)).ln());
    first + second
}

pub fn bound_noiseless_linear<T: Scalar>(q: &BoundQuery<T>) -> Result<BoundValue<T>> {
    q.check()?;
    let tests = linear_coefficient(q.k, T::zero()) * q.pair_log();
    Ok(BoundValue::new(BoundModel::Noiseless, BoundKind::AchievabilityLinear, tests, q, false))
}

/// `k log(n/k) / log(1 + k/sigma2)`.
pub fn bound_gaussian_lse<T: Scalar>(q: &BoundQuery<T>) -> Result<BoundValue<T>> {
    q.check()?;
    let s2 = q.sigma2_req()?;
    let tests = q.kf() * (q.nf() / q.kf()).ln() / (T::one() + q.kf() / s2).ln();
    Ok(BoundValue::new(BoundModel::Gaussian, BoundKind::AchievabilityLse, tests, q, true))
}

/// `log C(n,k) / (1/2 log(1 + k/(4 sigma2)))`.
pub fn bound_gaussian_converse<T: Scalar>(q: &BoundQuery<T>) -> Result<BoundValue<T>> {
    q.check()?;
    let s2 = q.sigma2_req()?;
    let denom = T::of(0.5) * (T::one() + q.kf() / (T::of(4.0) * s2)).ln();
    let tests = ln_binomial::<T>(q.n, q.k) / denom;
    Ok(BoundValue::new(BoundModel::Gaussian, BoundKind::Converse, tests, q, true))
}

pub fn bound_gaussian_linear<T: Scalar>(q: &BoundQuery<T>) -> Result<BoundValue<T>> {
    q.check()?;
    let s2 = q.sigma2_req()?;
    let tests = linear_coefficient(q.k, s2) * q.pair_log();
    Ok(BoundValue::new(BoundModel::Gaussian, BoundKind::AchievabilityLinear, tests, q, false))
}

/// `C_p = (1-p)^2 ln(p/(1-p)) / (2p - 1)`, extended by continuity to `1/2` at `p = 1/2`.
///
/// Evaluated as `(1-p)^2 * 2 atanh(u) / u` with `u = 2p - 1`, which is the same
/// function and stays accurate near the removable singularity.
pub fn c_p<T: Scalar>(p: T) -> Result<T> {
    check_open_unit(p, "p")?;
    let one = T::one();
    let u = T::of(2.0) * p - one;
    let ratio = if u == T::zero() { T::of(2.0) } else { T::of(2.0) * u.atanh() / u };
    Ok((one - p) * (one - p) * ratio)
}

/// `k log(n/k) / log(1 + 2 C_p)`.
pub fn bound_zchannel_lse<T: Scalar>(q: &BoundQuery<T>) -> Result<BoundValue<T>> {
    q.check()?;
    let p = q.p_req()?;
    let cp = c_p(p)?;
    let tests = q.kf() * (q.nf() / q.kf()).ln() / (T::one() + T::of(2.0) * cp).ln();
    Ok(BoundValue::new(BoundModel::ZChannel, BoundKind::AchievabilityLse, tests, q, true))
}

/// `k log(n/k) / log((1 - k/n + kp/n) / p)` with the unspecified constant set to 1.
pub fn bound_zchannel_converse<T: Scalar>(q: &BoundQuery<T>) -> Result<BoundValue<T>> {
    q.check()?;
    let p = q.p_req()?;
    let ratio = q.kf() / q.nf();
    let arg = (T::one() - ratio + ratio * p) / p;
    let tests = q.kf() * (q.nf() / q.kf()).ln() / arg.ln();
    let mut v = BoundValue::new(BoundModel::ZChannel, BoundKind::Converse, tests, q, true);
    if !(arg > T::one()) {
        v.degenerate = true;
    }
    Ok(v)
}

pub fn bound_zchannel_linear<T: Scalar>(q: &BoundQuery<T>) -> Result<BoundValue<T>> {
    q.check()?;
    let p = q.p_req()?;
    let tests = zchannel_linear_coefficient(q.k, p) * q.pair_log();
    Ok(BoundValue::new(BoundModel::ZChannel, BoundKind::AchievabilityLinear, tests, q, false))
}

/// Every bound applicable to the query: the noiseless row always, Gaussian rows
/// when `sigma2` is set, Z-channel rows when `p` is set.
pub fn all_bounds<T: Scalar>(q: &BoundQuery<T>) -> Result<Vec<BoundValue<T>>> {
    let mut out = vec![bound_noiseless_linear(q)?];
    if q.sigma2.is_some() {
        out.push(bound_gaussian_lse(q)?);
        out.push(bound_gaussian_converse(q)?);
        out.push(bound_gaussian_linear(q)?);
    }
    if q.p.is_some() {
        out.push(bound_zchannel_lse(q)?);
        out.push(bound_zchannel_converse(q)?);
        out.push(bound_zchannel_linear(q)?);
    }
    Ok(out)
}

/// Optimal subgaussian variance proxy of a centered Bernoulli(`q`):
/// `(1 - 2q) / (2 ln((1-q)/q))`, equal to `1/4` at `q = 1/2`.
///
/// Evaluated as `v / (4 atanh(v))` with `v = 1 - 2q`.
pub fn sigma2_opt_bernoulli<T: Scalar>(q: T) -> Result<T> {
    check_open_unit(q, "q")?;
    let v = T::one() - T::of(2.0) * q;
    if v == T::zero() {
        return Ok(T::of(0.25));
    }
    Ok(v / (T::of(4.0) * v.atanh()))
}

/// `ln C(n, k)` as `sum_{i<k} [ln(n - i) - ln(i + 1)]`.
pub fn ln_binomial<T: Scalar>(n: usize, k: usize) -> T {
    (0..k).fold(T::zero(), |acc, i| {
        acc + T::of_usize(n - i).ln() - T::of_usize(i + 1).ln()
    })
}

/// Union bound on the linear decoder's error probability after `m` tests:
/// `k (n - k) exp(-m / coefficient)` where `coefficient` is the per-log factor
/// of the matching linear bound. Equals 1 at the bound itself and
/// `1 / (k (n - k))` at twice the bound (natural logs).
pub fn linear_union_error_bound<T: Scalar>(
    n: usize,
    k: usize,
    coefficient: T,
    m: usize,
) -> T {
    let pairs = T::of_usize(k) * T::of_usize(n - k);
    pairs * (-T::of_usize(m) / coefficient).exp()
}

/// Variance of `<A_i, X>` for a uniform `k`-subset `X` and a fixed row of weight `w`
/// (hypergeometric). Never exceeds `k/4`.
pub fn hypergeometric_variance<T: Scalar>(n: usize, k: usize, w: usize) -> T {
    let nf = T::of_usize(n);
    let frac = T::of_usize(w) / nf;
    if n <= 1 {
        return T::zero();
    }
    T::of_usize(k) * frac * (T::one() - frac) * T::of_usize(n - k) / T::of_usize(n - 1)
}

//! Exact verification of three binomial-coefficient inequalities:
//!
//! - subset: `C(N, M) <= (e N / M)^M`
//! - central: `C(2N, N) <= e 4^N / (pi sqrt(2N))`
//! - tail: `4^-l C(2l, l + b) <= e / (pi sqrt(2l)) * exp(-b^2 / (2l))` for `0 <= b <= l`
//!
//! Binomials are exact big integers. Square roots are removed by squaring both
//! sides, and the transcendental constants are replaced by rational bounds in
//! the direction that makes each comparison harder, so a case that passes is
//! proven to satisfy the real inequality.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Grid limits for [`check_binomial_lemmas`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaRanges {
    /// Subset bound over `1 <= M <= N <= subset_max_n`.
    pub subset_max_n: u32,
    /// Central bound over `1 <= N <= central_max_n`.
    pub central_max_n: u32,
    /// Tail bound over `1 <= l <= tail_max_l`, `0 <= b <= l`.
    pub tail_max_l: u32,
}

impl Default for LemmaRanges {
    fn default() -> Self {
        LemmaRanges {
            subset_max_n: 60,
            central_max_n: 30,
            tail_max_l: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inequality {
    Subset,
    Central,
    Tail,
}

impl Inequality {
    pub const ALL: [Inequality; 3] = [Inequality::Subset, Inequality::Central, Inequality::Tail];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub inequality: Inequality,
    /// `(N, M)`, `(N, 0)` or `(l, b)` depending on the lemma.
    pub params: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub ranges: LemmaRanges,
    /// Cases checked, indexed subset / central / tail.
    pub checked: [usize; 3],
    /// Largest `lhs / rhs` seen per inequality, in floating point, for reporting.
    pub max_ratio: [f64; 3],
    pub violations: Vec<LemmaViolation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn checked(&self, which: Inequality) -> usize {
        self.checked[which.index()]
    }

    pub fn max_ratio(&self, which: Inequality) -> f64 {
        self.max_ratio[which.index()]
    }

    pub fn violations_of(&self, which: Inequality) -> usize {
        self.violations.iter().filter(|v| v.inequality == which).count()
    }
}

fn rat(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

// e = 2.718281828459045235..., pi = 3.141592653589793238...
fn e_lower() -> BigRational {
    rat(2_718_281_828_459_045, 1_000_000_000_000_000)
}

fn e_upper() -> BigRational {
    rat(2_718_281_828_459_046, 1_000_000_000_000_000)
}

fn pi_upper() -> BigRational {
    rat(3_141_592_653_589_794, 1_000_000_000_000_000)
}

fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

fn binom(n: u32, k: u32) -> BigInt {
    BigInt::from(num_integer::binomial(BigUint::from(n), BigUint::from(k)))
}

fn pow(base: &BigRational, exp: u32) -> BigRational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Rational upper bound on `exp(r)` for rational `r >= 0`.
///
/// Splits `r = q + f` with integer `q` and `0 <= f < 1`, bounds `e^q` by an upper
/// rational for `e`, and `exp(f)` by a 24-term Taylor sum plus the geometric
/// tail bound `f^N / N! * (N + 1) / (N + 1 - f)`.
pub fn exp_upper(r: &BigRational) -> BigRational {
    assert!(*r >= BigRational::zero(), "exp_upper needs r >= 0");
    let q = r.floor();
    let f = r - &q;
    let q = q.to_integer().to_u32().expect("exponent fits in u32");

    const TERMS: u32 = 24;
    let mut term = BigRational::one();
    let mut sum = BigRational::zero();
    for i in 0..TERMS {
        sum += &term;
        term = term * &f / int(i + 1);
    }
    // term == f^TERMS / TERMS!
    let tail = term * int(TERMS + 1) / (int(TERMS + 1) - &f);
    pow(&e_upper(), q) * (sum + tail)
}

fn ratio_f64(lhs: &BigRational, rhs: &BigRational) -> f64 {
    (lhs / rhs).to_f64().unwrap_or(f64::INFINITY)
}

/// Subset bound at `(N, M)`: `C(N,M) M^M <= e^M N^M`, with `e` bounded below.
/// Returns the verdict and the float ratio `lhs / rhs`.
pub fn subset_bound_holds(n: u32, m: u32) -> (bool, f64) {
    let lhs = int(binom(n, m)) * pow(&int(m), m);
    let rhs = pow(&e_lower(), m) * pow(&int(n), m);
    (lhs <= rhs, ratio_f64(&lhs, &rhs))
}

/// Central bound at `N`, squared: `C(2N,N)^2 pi^2 2N <= e^2 16^N`.
pub fn central_bound_holds(n: u32) -> (bool, f64) {
    let c = int(binom(2 * n, n));
    let lhs = &c * &c * pow(&pi_upper(), 2) * int(2 * n);
    let rhs = pow(&e_lower(), 2) * pow(&int(16u32), n);
    (lhs <= rhs, ratio_f64(&lhs, &rhs).sqrt())
}

/// Tail bound at `(l, b)`, squared: `C(2l,l+b)^2 pi^2 2l exp(b^2/l) <= e^2 16^l`.
pub fn tail_bound_holds(l: u32, b: u32) -> (bool, f64) {
    assert!(l >= 1 && b <= l);
    let c = int(binom(2 * l, l + b));
    let growth = exp_upper(&BigRational::new(BigInt::from(b * b), BigInt::from(l)));
    let lhs = &c * &c * pow(&pi_upper(), 2) * int(2 * l) * growth;
    let rhs = pow(&e_lower(), 2) * pow(&int(16u32), l);
    (lhs <= rhs, ratio_f64(&lhs, &rhs).sqrt())
}

/// Checks all three inequalities over the full grid.
pub fn check_binomial_lemmas(ranges: LemmaRanges) -> LemmaReport {
    let mut report = LemmaReport {
        ranges,
        checked: [0; 3],
        max_ratio: [0.0; 3],
        violations: Vec::new(),
    };
    let mut record = |inequality: Inequality, params: (u32, u32), (ok, ratio): (bool, f64)| {
        let idx = inequality.index();
        report.checked[idx] += 1;
        report.max_ratio[idx] = report.max_ratio[idx].max(ratio);
        if !ok {
            report.violations.push(LemmaViolation { inequality, params });
        }
    };
    for n in 1..=ranges.subset_max_n {
        for m in 1..=n {
            record(Inequality::Subset, (n, m), subset_bound_holds(n, m));
        }
    }
    for n in 1..=ranges.central_max_n {
        record(Inequality::Central, (n, 0), central_bound_holds(n));
    }
    for l in 1..=ranges.tail_max_l {
        for b in 0..=l {
            record(Inequality::Tail, (l, b), tail_bound_holds(l, b));
        }
    }
    report
}

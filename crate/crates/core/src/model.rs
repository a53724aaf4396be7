//! Problem instances: pooling designs, defective sets and the three
//! observation channels.

use std::collections::HashMap;
use std::fmt;

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::seed::RandomSeed;

const WORD: usize = 64;

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// Binary `m x n` pooling design, stored row-major with 64-bit words.
///
/// Bits beyond column `n` in the last word of each row are always zero, so
/// popcounts over whole words are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TestMatrix {
    m: usize,
    n: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl TestMatrix {
    /// All-zero design.
    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid(format!("test matrix needs m >= 1 and n >= 1, got {m}x{n}"));
        }
        let stride = words_for(n);
        Ok(TestMatrix {
            m,
            n,
            stride,
            bits: vec![0; m * stride],
        })
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut a = Self::zeros(m, n)?;
        for i in 0..m {
            for j in 0..n {
                if f(i, j) {
                    a.bits[i * a.stride + j / WORD] |= 1u64 << (j % WORD);
                }
            }
        }
        Ok(a)
    }

    /// Builds a design from explicit 0/1 rows of equal length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return invalid(format!("row {i} has length {}, expected {n}", r.len()));
            }
            if let Some(v) = r.iter().find(|&&v| v > 1) {
                return invalid(format!("row {i} contains non-binary entry {v}"));
            }
        }
        Self::from_fn(m, n, |i, j| rows[i].as_ref()[j] == 1)
    }

    /// Square design where test `i` pools exactly item `i`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| i == j)
    }

    /// Parses the debug dump format: one row per line, `0`/`1` characters.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.bytes()
                    .map(|b| match b {
                        b'0' => Ok(0),
                        b'1' => Ok(1),
                        other => invalid(format!("unexpected character {:?} in dump", other as char)),
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }

    pub fn tests(&self) -> usize {
        self.m
    }

    pub fn items(&self) -> usize {
        self.n
    }

    pub fn words_per_row(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.m && j < self.n);
        (self.bits[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.stride..(i + 1) * self.stride]
    }

    /// Pool size `|A_i|`.
    pub fn row_weight(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Items pooled in test `i`, ascending.
    pub fn row_items(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(i).iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let b = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(w * WORD + b)
                }
            })
        })
    }

    /// Column `j` as a 0/1 count vector.
    pub fn column(&self, j: usize) -> Vec<i32> {
        (0..self.m).map(|i| self.get(i, j) as i32).collect()
    }

    /// `A x` for a packed indicator mask of length `words_per_row()`.
    pub fn mul_mask(&self, mask: &[u64]) -> Vec<u32> {
        assert_eq!(mask.len(), self.stride, "mask width mismatch");
        self.bits
            .chunks_exact(self.stride)
            .map(|row| row.iter().zip(mask).map(|(r, x)| (r & x).count_ones()).sum())
            .collect()
    }

    /// `A x` for a support set over the same items.
    pub fn mul_support(&self, x: &SparseSignal) -> Result<Vec<u32>> {
        if x.items() != self.n {
            return invalid(format!(
                "signal over {} items does not match design with {} items",
                x.items(),
                self.n
            ));
        }
        Ok(self.mul_mask(&x.mask()))
    }

    /// Multiline `0`/`1` dump, one test per line.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TestMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.m {
            for j in 0..self.n {
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

impl fmt::Debug for TestMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestMatrix({}x{})", self.m, self.n)?;
        if self.m * self.n <= 256 {
            write!(f, "\n{self}")?;
        }
        Ok(())
    }
}

/// Random design with i.i.d. Bernoulli(1/2) entries.
pub fn gen_bernoulli_matrix(m: usize, n: usize, seed: RandomSeed) -> Result<TestMatrix> {
    let mut a = TestMatrix::zeros(m, n)?;
    let mut rng = seed.rng();
    let tail = n % WORD;
    let tail_mask = if tail == 0 { u64::MAX } else { (1u64 << tail) - 1 };
    for row in a.bits.chunks_exact_mut(a.stride) {
        for w in row.iter_mut() {
            *w = rng.next_u64();
        }
        *row.last_mut().expect("stride >= 1") &= tail_mask;
    }
    Ok(a)
}

/// Defective set of exactly `k` items out of `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SparseSignal {
    n: usize,
    support: Vec<usize>,
}

impl SparseSignal {
    /// Validates and sorts the support; duplicates or out-of-range indices
    /// are rejected.
    pub fn new(n: usize, mut support: Vec<usize>) -> Result<Self> {
        support.sort_unstable();
        if support.is_empty() {
            return invalid("support must be non-empty");
        }
        if support.len() > n {
            return invalid(format!("support size {} exceeds n = {n}", support.len()));
        }
        if support.windows(2).any(|w| w[0] == w[1]) {
            return invalid("support contains duplicate indices");
        }
        if let Some(&last) = support.last() {
            if last >= n {
                return invalid(format!("support index {last} out of range for n = {n}"));
            }
        }
        Ok(SparseSignal { n, support })
    }

    pub fn items(&self) -> usize {
        self.n
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn contains(&self, j: usize) -> bool {
        self.support.binary_search(&j).is_ok()
    }

    /// Packed indicator, `ceil(n / 64)` words.
    pub fn mask(&self) -> Vec<u64> {
        let mut mask = vec![0u64; words_for(self.n)];
        for &j in &self.support {
            mask[j / WORD] |= 1u64 << (j % WORD);
        }
        mask
    }
}

/// Uniform `k`-subset of `0..n` by a partial Fisher-Yates shuffle.
///
/// Only displaced positions are stored, so a draw costs `O(k)` regardless of `n`.
pub fn gen_signal(n: usize, k: usize, seed: RandomSeed) -> Result<SparseSignal> {
    if k == 0 || k > n {
        return invalid(format!("signal weight k = {k} must satisfy 1 <= k <= n = {n}"));
    }
    let mut rng = seed.rng();
    Ok(sample_support(n, k, &mut rng))
}

pub(crate) fn sample_support<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> SparseSignal {
    let mut displaced: HashMap<usize, usize> = HashMap::with_capacity(2 * k);
    let mut support = Vec::with_capacity(k);
    for i in 0..k {
        let r = rng.random_range(i..n);
        let at_r = displaced.get(&r).copied().unwrap_or(r);
        let at_i = displaced.get(&i).copied().unwrap_or(i);
        displaced.insert(r, at_i);
        support.push(at_r);
    }
    support.sort_unstable();
    SparseSignal { n, support }
}

/// Observation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ChannelModel {
    Noiseless,
    /// Additive i.i.d. `N(0, sigma2)` noise on each test.
    Gaussian { sigma2: f64 },
    /// Each defective's contribution to each test is erased with probability `p`.
    ZChannel { p: f64 },
}

impl ChannelModel {
    pub fn gaussian(sigma2: f64) -> Result<Self> {
        let c = ChannelModel::Gaussian { sigma2 };
        c.validate()?;
        Ok(c)
    }

    pub fn zchannel(p: f64) -> Result<Self> {
        let c = ChannelModel::ZChannel { p };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Noiseless => Ok(()),
            ChannelModel::Gaussian { sigma2 } if sigma2 > 0.0 && sigma2.is_finite() => Ok(()),
            ChannelModel::Gaussian { sigma2 } => {
                invalid(format!("Gaussian noise variance must be positive and finite, got {sigma2}"))
            }
            ChannelModel::ZChannel { p } if p > 0.0 && p < 1.0 => Ok(()),
            ChannelModel::ZChannel { p } => {
                invalid(format!("Z-channel erasure probability must lie in (0, 1), got {p}"))
            }
        }
    }

    /// Factor `c` with `E[y | A, x] = c * A x`.
    pub fn mean_scale(&self) -> f64 {
        match *self {
            ChannelModel::ZChannel { p } => 1.0 - p,
            _ => 1.0,
        }
    }

    /// Whether outcomes are guaranteed to be nonnegative integers.
    pub fn is_discrete(&self) -> bool {
        !matches!(self, ChannelModel::Gaussian { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Noiseless => "noiseless",
            ChannelModel::Gaussian { .. } => "gaussian",
            ChannelModel::ZChannel { .. } => "zchannel",
        }
    }

    pub fn sigma2(&self) -> Option<f64> {
        match *self {
            ChannelModel::Gaussian { sigma2 } => Some(sigma2),
            _ => None,
        }
    }

    pub fn erasure(&self) -> Option<f64> {
        match *self {
            ChannelModel::ZChannel { p } => Some(p),
            _ => None,
        }
    }
}

/// Test outcome vector `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T = f64> {
    values: Vec<T>,
    discrete: bool,
}

impl<T: Scalar> Observation<T> {
    /// Real-valued outcomes with no integrality guarantee.
    pub fn real(values: Vec<T>) -> Self {
        Observation {
            values,
            discrete: false,
        }
    }

    /// Integer counts.
    pub fn counts(counts: &[u32]) -> Self {
        Observation {
            values: counts.iter().map(|&c| T::of(c as f64)).collect(),
            discrete: true,
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_discrete(&self) -> bool {
        self.discrete
    }

    /// Same outcomes in another precision.
    pub fn cast<U: Scalar>(&self) -> Observation<U> {
        Observation {
            values: self.values.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
            discrete: self.discrete,
        }
    }
}

/// `y = A x`.
pub fn observe_noiseless(a: &TestMatrix, x: &SparseSignal) -> Result<Observation> {
    Ok(Observation::counts(&a.mul_support(x)?))
}

/// `y = A x + N` with `N_i ~ N(0, sigma2)`.
///
/// Standard normals come from `rand_distr::StandardNormal` (ziggurat) driven by
/// the seeded ChaCha8 stream and are scaled by `sqrt(sigma2)`.
pub fn observe_gaussian(
    a: &TestMatrix,
    x: &SparseSignal,
    sigma2: f64,
    seed: RandomSeed,
) -> Result<Observation> {
    ChannelModel::gaussian(sigma2)?;
    let clean = a.mul_support(x)?;
    let sd = sigma2.sqrt();
    let mut rng = seed.rng();
    let values = clean
        .iter()
        .map(|&c| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c as f64 + sd * z
        })
        .collect();
    Ok(Observation::real(values))
}

/// `y_i = sum_j a_ij x_j z_ij` with `z_ij ~ Ber(1 - p)`.
///
/// Erasure variables are only drawn for pooled defectives, in row order and
/// then ascending item order.
pub fn observe_zchannel(
    a: &TestMatrix,
    x: &SparseSignal,
    p: f64,
    seed: RandomSeed,
) -> Result<Observation> {
    ChannelModel::zchannel(p)?;
    if x.items() != a.items() {
        return invalid(format!(
            "signal over {} items does not match design with {} items",
            x.items(),
            a.items()
        ));
    }
    let keep = Bernoulli::new(1.0 - p).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    let mut rng = seed.rng();
    let counts: Vec<u32> = (0..a.tests())
        .map(|i| {
            x.support()
                .iter()
                .filter(|&&j| a.get(i, j))
                .filter(|_| keep.sample(&mut rng))
                .count() as u32
        })
        .collect();
    Ok(Observation::counts(&counts))
}

/// Dispatches to the channel simulator selected by `model`. The seed is ignored
/// for the noiseless channel.
pub fn observe(
    a: &TestMatrix,
    x: &SparseSignal,
    model: &ChannelModel,
    seed: RandomSeed,
) -> Result<Observation> {
    match *model {
        ChannelModel::Noiseless => observe_noiseless(a, x),
        ChannelModel::Gaussian { sigma2 } => observe_gaussian(a, x, sigma2, seed),
        ChannelModel::ZChannel { p } => observe_zchannel(a, x, p, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TestMatrix {
        TestMatrix::from_rows(&[[1u8, 0, 1, 0], [1, 1, 0, 0], [0, 1, 1, 1]]).unwrap()
    }

    #[test]
    fn bernoulli_matrix_is_deterministic() {
        let s = RandomSeed::new(11);
        assert_eq!(
            gen_bernoulli_matrix(2, 3, s).unwrap(),
            gen_bernoulli_matrix(2, 3, s).unwrap()
        );
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(gen_bernoulli_matrix(0, 5, RandomSeed::new(1)).is_err());
        assert!(gen_bernoulli_matrix(5, 0, RandomSeed::new(1)).is_err());
    }

    #[test]
    fn column_means_near_half() {
        // Bin(10000, 1/2): 3 sigma = 0.015 around 0.5.
        let a = gen_bernoulli_matrix(10_000, 64, RandomSeed::new(2024)).unwrap();
        for j in 0..64 {
            let ones = (0..a.tests()).filter(|&i| a.get(i, j)).count();
            let mean = ones as f64 / 10_000.0;
            assert!((0.48..=0.52).contains(&mean), "column {j}: {mean}");
        }
    }

    #[test]
    fn tail_bits_are_clear() {
        let a = gen_bernoulli_matrix(50, 70, RandomSeed::new(3)).unwrap();
        for i in 0..50 {
            assert_eq!(a.row_words(i)[1] >> 6, 0);
            assert_eq!(a.row_weight(i), (0..70).filter(|&j| a.get(i, j)).count());
        }
    }

    #[test]
    fn full_support_forced() {
        let x = gen_signal(5, 5, RandomSeed::new(9)).unwrap();
        assert_eq!(x.support(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn signal_weight_checked() {
        assert!(gen_signal(3, 4, RandomSeed::new(0)).is_err());
        assert!(gen_signal(3, 0, RandomSeed::new(0)).is_err());
        assert!(SparseSignal::new(4, vec![1, 1]).is_err());
        assert!(SparseSignal::new(4, vec![4]).is_err());
    }

    #[test]
    fn signal_subsets_uniform() {
        // Six 2-subsets of 4 items, each with probability 1/6.
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let base = RandomSeed::new(77);
        let draws = 40_000;
        for t in 0..draws {
            let x = gen_signal(4, 2, base.derive(crate::Purpose::Signal, t)).unwrap();
            *counts.entry(x.support().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (s, c) in counts {
            let f = c as f64 / draws as f64;
            assert!((f - 1.0 / 6.0).abs() <= 0.01, "{s:?}: {f}");
        }
    }

    #[test]
    fn noiseless_hand_example() {
        let x = SparseSignal::new(4, vec![0, 2]).unwrap();
        let y = observe_noiseless(&small(), &x).unwrap();
        assert_eq!(y.values(), &[2.0, 1.0, 1.0]);
        assert!(y.is_discrete());
    }

    #[test]
    fn zero_and_identity_designs() {
        let x = SparseSignal::new(6, vec![1, 4]).unwrap();
        let y = observe_noiseless(&TestMatrix::zeros(3, 6).unwrap(), &x).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));

        let x = SparseSignal::new(5, vec![1]).unwrap();
        let y = observe_noiseless(&TestMatrix::identity(5).unwrap(), &x).unwrap();
        assert_eq!(y.values(), &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let x = SparseSignal::new(5, vec![1]).unwrap();
        assert!(observe_noiseless(&small(), &x).is_err());
        assert!(observe_zchannel(&small(), &x, 0.2, RandomSeed::new(1)).is_err());
    }

    #[test]
    fn gaussian_vanishing_noise() {
        let a = gen_bernoulli_matrix(200, 30, RandomSeed::new(5)).unwrap();
        let x = gen_signal(30, 4, RandomSeed::new(6)).unwrap();
        let clean = observe_noiseless(&a, &x).unwrap();
        let y = observe_gaussian(&a, &x, 1e-12, RandomSeed::new(7)).unwrap();
        assert!(!y.is_discrete());
        for (u, v) in y.values().iter().zip(clean.values()) {
            assert!((u - v).abs() <= 1e-4);
        }
    }

    #[test]
    fn gaussian_replay_and_validation() {
        let a = gen_bernoulli_matrix(20, 10, RandomSeed::new(5)).unwrap();
        let x = gen_signal(10, 2, RandomSeed::new(6)).unwrap();
        let s = RandomSeed::new(8);
        assert_eq!(
            observe_gaussian(&a, &x, 1.0, s).unwrap(),
            observe_gaussian(&a, &x, 1.0, s).unwrap()
        );
        assert!(observe_gaussian(&a, &x, 0.0, s).is_err());
        assert!(observe_gaussian(&a, &x, -1.0, s).is_err());
    }

    #[test]
    fn gaussian_noise_variance() {
        // Sample variance of 50000 N(0,1) draws: sd of s^2 is sqrt(2/49999) ~ 0.0063,
        // so +-5% is ~7.9 standard deviations.
        let m = 50_000;
        let a = gen_bernoulli_matrix(m, 16, RandomSeed::new(12)).unwrap();
        let x = gen_signal(16, 3, RandomSeed::new(13)).unwrap();
        let clean = observe_noiseless(&a, &x).unwrap();
        let y = observe_gaussian(&a, &x, 1.0, RandomSeed::new(14)).unwrap();
        let r: Vec<f64> = y.values().iter().zip(clean.values()).map(|(a, b)| a - b).collect();
        let mean = r.iter().sum::<f64>() / m as f64;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        assert!((var - 1.0).abs() <= 0.05, "{var}");
    }

    #[test]
    fn zchannel_tiny_erasure_matches_noiseless() {
        let a = gen_bernoulli_matrix(100, 40, RandomSeed::new(21)).unwrap();
        let x = gen_signal(40, 5, RandomSeed::new(22)).unwrap();
        let y = observe_zchannel(&a, &x, 1e-9, RandomSeed::new(23)).unwrap();
        assert_eq!(y, observe_noiseless(&a, &x).unwrap());
    }

    #[test]
    fn zchannel_binomial_mean() {
        // One test pooling all 8 defectives: y ~ Bin(8, 1/2), mean 4.
        let a = TestMatrix::from_fn(1, 8, |_, _| true).unwrap();
        let x = SparseSignal::new(8, (0..8).collect()).unwrap();
        let base = RandomSeed::new(31);
        let trials = 20_000;
        let total: f64 = (0..trials)
            .map(|t| observe_zchannel(&a, &x, 0.5, base.derive(crate::Purpose::Noise, t)).unwrap().values()[0])
            .sum();
        let mean = total / trials as f64;
        assert!((mean - 4.0).abs() <= 0.2, "{mean}");
    }

    #[test]
    fn zchannel_parameter_range() {
        let a = small();
        let x = SparseSignal::new(4, vec![0]).unwrap();
        for p in [0.0, 1.0, 1.2, -0.1] {
            assert!(observe_zchannel(&a, &x, p, RandomSeed::new(1)).is_err());
        }
    }

    #[test]
    fn dump_roundtrip() {
        let a = small();
        assert_eq!(a.dump(), "1010\n1100\n0111\n");
        assert_eq!(TestMatrix::parse_dump(&a.dump()).unwrap(), a);
        assert!(TestMatrix::parse_dump("10\n1x\n").is_err());
    }

    #[test]
    fn row_items_iterates_set_bits() {
        let a = TestMatrix::from_fn(1, 130, |_, j| j % 7 == 0).unwrap();
        let items: Vec<usize> = a.row_items(0).collect();
        assert_eq!(items, (0..130).filter(|j| j % 7 == 0).collect::<Vec<_>>());
    }
}

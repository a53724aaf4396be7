//! Monte Carlo harness: exact-recovery trials, batch statistics, empirical
//! phase-transition search and checks of distributional facts the bounds
//! rely on.
//!
//! Every trial draws its design, signal, noise and decoder randomness from
//! streams derived from `(master_seed, trial_index)`, so batches are
//! reproducible regardless of how rayon schedules them.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{
    correlation_scores, decode_linear, decode_lse_exhaustive_with_budget, decode_lse_local,
    DecodeResult, DEFAULT_EXHAUSTIVE_BUDGET, DEFAULT_RESTARTS,
};
use crate::error::{invalid, Error, Result};
use crate::model::{gen_bernoulli_matrix, gen_signal, observe, ChannelModel, TestMatrix};
use crate::seed::{Purpose, RandomSeed};

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_THRESHOLD: f64 = 0.95;
pub const DEFAULT_PROBE_TRIALS: usize = 200;
pub const DEFAULT_M_MAX: usize = 1_000_000;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "decoder", rename_all = "snake_case")]
pub enum DecoderKind {
    Linear,
    LseExhaustive,
    LseLocal { restarts: usize },
}

impl DecoderKind {
    pub fn local() -> Self {
        DecoderKind::LseLocal {
            restarts: DEFAULT_RESTARTS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DecoderKind::Linear => "linear",
            DecoderKind::LseExhaustive => "lse_exhaustive",
            DecoderKind::LseLocal { .. } => "lse_local",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declarative description of a batch of recovery trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub channel: ChannelModel,
    pub decoder: DecoderKind,
    pub trials: usize,
    pub master_seed: RandomSeed,
    pub success_threshold: f64,
    pub exhaustive_budget: u128,
}

impl ExperimentConfig {
    pub fn new(n: usize, k: usize, m: usize, channel: ChannelModel, decoder: DecoderKind) -> Self {
        ExperimentConfig {
            n,
            k,
            m,
            channel,
            decoder,
            trials: DEFAULT_TRIALS,
            master_seed: RandomSeed::new(0),
            success_threshold: DEFAULT_THRESHOLD,
            exhaustive_budget: DEFAULT_EXHAUSTIVE_BUDGET,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = RandomSeed::new(seed);
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.k == 0 || self.k >= self.n {
            return invalid(format!("need 1 <= k < n, got n = {}, k = {}", self.n, self.k));
        }
        if self.m == 0 {
            return invalid("m must be at least 1");
        }
        if !(self.success_threshold > 0.0 && self.success_threshold < 1.0) {
            return invalid(format!(
                "success threshold must lie in (0, 1), got {}",
                self.success_threshold
            ));
        }
        if let DecoderKind::LseLocal { restarts: 0 } = self.decoder {
            return invalid("local search needs at least one restart");
        }
        self.channel.validate()
    }
}

/// Outcome of a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub exact_recovery: bool,
    pub support_overlap: usize,
    pub objective_value: Option<f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    // Both sorted.
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

fn decode(
    cfg: &ExperimentConfig,
    a: &TestMatrix,
    y: &crate::model::Observation,
    seed: RandomSeed,
) -> Result<DecodeResult> {
    match cfg.decoder {
        DecoderKind::Linear => decode_linear(a, y, cfg.k),
        DecoderKind::LseExhaustive => {
            decode_lse_exhaustive_with_budget(a, y, cfg.k, &cfg.channel, cfg.exhaustive_budget)
        }
        DecoderKind::LseLocal { restarts } => decode_lse_local(a, y, cfg.k, &cfg.channel, restarts, seed),
    }
}

fn trial_seed(cfg: &ExperimentConfig, trial_index: u64) -> RandomSeed {
    cfg.master_seed.derive(Purpose::Trial, trial_index)
}

/// Draws `(A, x, y)`, decodes, and compares supports.
pub fn run_trial(cfg: &ExperimentConfig, trial_index: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let seed = trial_seed(cfg, trial_index);
    let a = gen_bernoulli_matrix(cfg.m, cfg.n, seed.derive(Purpose::Matrix, 0))?;
    run_trial_on(cfg, trial_index, &a)
}

/// Like [`run_trial`] but with a caller-supplied design; `cfg.m` is ignored in
/// favour of the design's test count.
pub fn run_trial_with_design(cfg: &ExperimentConfig, trial_index: u64, design: &TestMatrix) -> Result<TrialResult> {
    let mut cfg = *cfg;
    cfg.m = design.tests();
    cfg.validate()?;
    if design.items() != cfg.n {
        return invalid(format!("design has {} items, config has n = {}", design.items(), cfg.n));
    }
    run_trial_on(&cfg, trial_index, design)
}

fn run_trial_on(cfg: &ExperimentConfig, trial_index: u64, a: &TestMatrix) -> Result<TrialResult> {
    let start = Instant::now();
    let seed = trial_seed(cfg, trial_index);
    let x = gen_signal(cfg.n, cfg.k, seed.derive(Purpose::Signal, 0))?;
    let y = observe(a, &x, &cfg.channel, seed.derive(Purpose::Noise, 0))?;
    let r = decode(cfg, a, &y, seed.derive(Purpose::Decoder, 0))?;
    let support_overlap = overlap(&r.support, x.support());
    Ok(TrialResult {
        trial_index,
        exact_recovery: support_overlap == cfg.k,
        support_overlap,
        objective_value: r.objective_value,
        wall_time: start.elapsed(),
    })
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    // Clamp rounding so the interval always contains the point estimate.
    let lo = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, phat) };
    let hi = if successes == trials { 1.0 } else { (centre + half).clamp(phat, 1.0) };
    (lo, hi)
}

/// Aggregated exact-recovery statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub successes: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub wilson_ci_95: (f64, f64),
    pub mean_overlap: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl BatchStats {
    /// Order-independent aggregation.
    pub fn from_results(results: &[TrialResult]) -> Self {
        let trials = results.len();
        let successes = results.iter().filter(|r| r.exact_recovery).count();
        let overlap_total: usize = results.iter().map(|r| r.support_overlap).sum();
        let wall_time = results.iter().map(|r| r.wall_time).sum();
        let (success_rate, mean_overlap) = if trials == 0 {
            (0.0, 0.0)
        } else {
            (successes as f64 / trials as f64, overlap_total as f64 / trials as f64)
        };
        BatchStats {
            successes,
            trials,
            success_rate,
            wilson_ci_95: wilson_interval(successes, trials, Z_95),
            mean_overlap,
            wall_time,
        }
    }
}

/// All trial results of a batch, ordered by trial index.
pub fn run_batch_results(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect()
}

pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchStats> {
    Ok(BatchStats::from_results(&run_batch_results(cfg)?))
}

/// Result of the transition search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionResult {
    /// Smallest probed `m` whose success rate reached the threshold.
    pub m_star: usize,
    /// `(m_lo, m_hi)`: last failing and first succeeding `m` (`m_lo = 0` if `m = 1` succeeded).
    pub bracket: (usize, usize),
    pub threshold: f64,
    /// Probes in ascending `m`.
    pub probes: Vec<(usize, BatchStats)>,
}

/// Seed used for the batch probing `m` tests. Probes at different `m` are independent.
pub fn probe_seed(template: &ExperimentConfig, m: usize) -> RandomSeed {
    template.master_seed.derive(Purpose::Probe, m as u64)
}

fn probe(template: &ExperimentConfig, m: usize, probe_trials: usize) -> Result<BatchStats> {
    let mut cfg = *template;
    cfg.m = m;
    cfg.trials = probe_trials;
    cfg.master_seed = probe_seed(template, m);
    run_batch(&cfg)
}

pub fn find_transition(template: &ExperimentConfig, threshold: f64, probe_trials: usize) -> Result<TransitionResult> {
    find_transition_capped(template, threshold, probe_trials, DEFAULT_M_MAX)
}

/// Doubles `m` from 1 until the success rate reaches `threshold`, then binary
/// searches the last bracket down to a single test. `template.m` and
/// `template.trials` are ignored.
pub fn find_transition_capped(
    template: &ExperimentConfig,
    threshold: f64,
    probe_trials: usize,
    m_max: usize,
) -> Result<TransitionResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return invalid(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    if probe_trials < 50 {
        return invalid(format!("probe_trials must be at least 50, got {probe_trials}"));
    }
    if m_max == 0 {
        return invalid("m_max must be at least 1");
    }
    let mut check = *template;
    check.m = 1;
    check.trials = probe_trials;
    check.validate()?;

    let mut probes: Vec<(usize, BatchStats)> = Vec::new();
    let mut run = |m: usize| -> Result<bool> {
        let stats = probe(template, m, probe_trials)?;
        let ok = stats.success_rate >= threshold;
        probes.push((m, stats));
        Ok(ok)
    };

    let mut lo = 0;
    let mut m = 1;
    let mut hi = loop {
        if run(m)? {
            break m;
        }
        lo = m;
        if m >= m_max {
            return Err(Error::NoTransitionFound { threshold, m_max });
        }
        m = (m * 2).min(m_max);
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if run(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    probes.sort_by_key(|(m, _)| *m);
    Ok(TransitionResult {
        m_star: hi,
        bracket: (lo, hi),
        threshold,
        probes,
    })
}

/// Measured mean of `S_i - S_j` against its expectation `(1 - p) m / 4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGapReport {
    pub measured: f64,
    pub target: f64,
    pub std_err: f64,
    pub relative_error: f64,
    pub trials: usize,
    /// Within 5% of the target.
    pub within_tolerance: bool,
    /// At least 10^4 trials, the count the 5% tolerance is calibrated for.
    pub sufficient_trials: bool,
}

pub const SCORE_GAP_TOLERANCE: f64 = 0.05;

/// Expected score gap between a defective and a non-defective item under a
/// Bernoulli(1/2) design.
pub fn expected_score_gap(m: usize, channel: &ChannelModel) -> f64 {
    channel.mean_scale() * m as f64 / 4.0
}

/// Monte Carlo estimate of `E[S_i - S_j]` for `i` defective and `j` not.
///
/// Each trial uses a fresh design, signal and channel draw and contributes the
/// average of `S_i - S_j` over all `(i, j)` pairs, i.e. the mean defective score
/// minus the mean non-defective score.
pub fn verify_score_gap(
    n: usize,
    k: usize,
    m: usize,
    channel: &ChannelModel,
    trials: usize,
    seed: RandomSeed,
) -> Result<ScoreGapReport> {
    if matches!(channel, ChannelModel::Gaussian { .. }) {
        return invalid("score-gap check covers the noiseless and Z-channel models");
    }
    let cfg = ExperimentConfig::new(n, k, m, *channel, DecoderKind::Linear).with_trials(trials);
    cfg.validate()?;

    let gaps: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed.derive(Purpose::Trial, t);
            let a = gen_bernoulli_matrix(m, n, s.derive(Purpose::Matrix, 0))?;
            let x = gen_signal(n, k, s.derive(Purpose::Signal, 0))?;
            let y = observe(&a, &x, channel, s.derive(Purpose::Noise, 0))?;
            let scores = correlation_scores(&a, &y)?;
            let total: f64 = scores.as_slice().iter().sum();
            let defective: f64 = x.support().iter().map(|&j| scores.as_slice()[j]).sum();
            Ok(defective / k as f64 - (total - defective) / (n - k) as f64)
        })
        .collect::<Result<_>>()?;

    let (measured, std_err) = mean_and_std_err(&gaps);
    let target = expected_score_gap(m, channel);
    let relative_error = (measured - target).abs() / target;
    Ok(ScoreGapReport {
        measured,
        target,
        std_err,
        relative_error,
        trials,
        within_tolerance: relative_error <= SCORE_GAP_TOLERANCE,
        sufficient_trials: trials >= 10_000,
    })
}

fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Measured `E[1 / max{A_1 x, 1}]` against `5/k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseCountReport {
    pub measured: f64,
    pub bound: f64,
    pub std_err: f64,
    pub trials: usize,
    /// `measured <= bound + 3 std_err`.
    pub holds: bool,
}

/// Sample mean and standard error of `1 / max{A_1 x, 1}` over fresh
/// Bernoulli(1/2) rows and uniform `k`-subsets. No restriction on `k`.
pub fn inverse_count_mean(n: usize, k: usize, trials: usize, seed: RandomSeed) -> Result<(f64, f64)> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got n = {n}, k = {k}"));
    }
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed.derive(Purpose::Trial, t);
            let row = gen_bernoulli_matrix(1, n, s.derive(Purpose::Matrix, 0))?;
            let x = gen_signal(n, k, s.derive(Purpose::Signal, 0))?;
            let count = row.mul_support(&x)?[0];
            Ok(1.0 / count.max(1) as f64)
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_std_err(&samples))
}

/// Checks `E[1 / max{S, 1}] <= 5/k` with three standard errors of slack.
/// Requires `k >= 32`, where the bound is meant to hold.
pub fn verify_inverse_count_assumption(
    n: usize,
    k: usize,
    trials: usize,
    seed: RandomSeed,
) -> Result<InverseCountReport> {
    if k < 32 {
        return invalid(format!("the 5/k bound is a large-k statement; need k >= 32, got {k}"));
    }
    let (measured, std_err) = inverse_count_mean(n, k, trials, seed)?;
    let bound = 5.0 / k as f64;
    Ok(InverseCountReport {
        measured,
        bound,
        std_err,
        trials,
        holds: measured <= bound + 3.0 * std_err,
    })
}

/// One batch or probe, flattened for CSV/JSON emission.
///
/// Field order is the column order. Wall time is kept out of serialized
/// output so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub model: String,
    pub decoder: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma2: Option<f64>,
    pub p: Option<f64>,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl BatchRecord {
    pub fn new(cfg: &ExperimentConfig, stats: &BatchStats) -> Self {
        BatchRecord {
            model: cfg.channel.name().to_string(),
            decoder: cfg.decoder.name().to_string(),
            n: cfg.n,
            k: cfg.k,
            m: cfg.m,
            sigma2: cfg.channel.sigma2(),
            p: cfg.channel.erasure(),
            trials: stats.trials,
            successes: stats.successes,
            rate: stats.success_rate,
            ci_lo: stats.wilson_ci_95.0,
            ci_hi: stats.wilson_ci_95.1,
            seed: cfg.master_seed.value(),
            wall_time_ms: stats.wall_time.as_secs_f64() * 1e3,
        }
    }
}

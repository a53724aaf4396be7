use serde::Serialize;

use qgt_core::bounds::{
    all_bounds, bound_gaussian_converse, bound_gaussian_linear, bound_gaussian_lse, bound_noiseless_linear,
    bound_zchannel_converse, bound_zchannel_linear, bound_zchannel_lse, c_p, sigma2_opt_bernoulli, BoundQuery,
    BoundValue,
};
use qgt_core::decoders::{DEFAULT_EXHAUSTIVE_BUDGET, DEFAULT_RESTARTS};
use qgt_core::experiments::{
    find_transition_capped, probe_seed, run_batch, verify_inverse_count_assumption, verify_score_gap, BatchRecord,
    DecoderKind, ExperimentConfig, DEFAULT_M_MAX, DEFAULT_PROBE_TRIALS, DEFAULT_THRESHOLD, DEFAULT_TRIALS,
};
use qgt_core::lemmas::{check_binomial_lemmas, Inequality, LemmaRanges};
use qgt_core::{ChannelModel, RandomSeed};

use crate::args::{Check, Command, DecoderName, Format, ModelName, Params};
use crate::output::{render, svg_chart};
use crate::CliError;

pub const SWEEP_HEADER: [&str; 13] = [
    "model", "decoder", "n", "k", "m", "sigma2", "p", "trials", "successes", "rate", "ci_lo", "ci_hi", "seed",
];
pub const TRANSITION_HEADER: [&str; 14] = [
    "model", "decoder", "n", "k", "m", "sigma2", "p", "trials", "successes", "rate", "ci_lo", "ci_hi", "seed",
    "m_star",
];
pub const BOUNDS_HEADER: [&str; 11] = [
    "model",
    "kind",
    "n",
    "k",
    "sigma2",
    "p",
    "log_base",
    "tests_real",
    "tests_ceil",
    "constant_caveat",
    "degenerate",
];
pub const VERIFY_HEADER: [&str; 6] = ["check", "case", "measured", "reference", "tolerance", "passed"];

/// Bytes produced by a command, before anything touches the filesystem.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub main: Vec<u8>,
    pub plot: Option<String>,
    /// Set when the command completed but a check it ran did not pass.
    pub failure: Option<String>,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn require<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.map_or_else(|| usage(format!("--{flag} is required")), Ok)
}

fn check_ranges(p: &Params) -> Result<(), CliError> {
    if let Some(s) = p.sigma2 {
        if !(s > 0.0 && s.is_finite()) {
            return usage(format!("--sigma2 must be positive and finite, got {s}"));
        }
    }
    if let Some(q) = p.p {
        if !(q > 0.0 && q < 1.0) {
            return usage(format!("--p must lie in (0, 1), got {q}"));
        }
    }
    if let Some(t) = p.threshold {
        if !(t > 0.0 && t < 1.0) {
            return usage(format!("--threshold must lie in (0, 1), got {t}"));
        }
    }
    Ok(())
}

fn channel(p: &Params) -> Result<ChannelModel, CliError> {
    match p.model.unwrap_or(ModelName::Noiseless) {
        ModelName::Noiseless => Ok(ChannelModel::Noiseless),
        ModelName::Gaussian => Ok(ChannelModel::gaussian(require(p.sigma2, "sigma2")?)?),
        ModelName::Zchannel => Ok(ChannelModel::zchannel(require(p.p, "p")?)?),
        ModelName::All => usage("--model all is only meaningful for `bounds`"),
    }
}

fn decoder(p: &Params) -> DecoderKind {
    match p.decoder.unwrap_or(DecoderName::Linear) {
        DecoderName::Linear => DecoderKind::Linear,
        DecoderName::LseExhaustive => DecoderKind::LseExhaustive,
        DecoderName::LseLocal => DecoderKind::LseLocal {
            restarts: p.restarts.unwrap_or(DEFAULT_RESTARTS),
        },
    }
}

/// Experiment template; `m` is 1 unless `--m` is given.
fn experiment(p: &Params) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(
        require(p.n, "n")?,
        require(p.k, "k")?,
        p.m.unwrap_or(1),
        channel(p)?,
        decoder(p),
    )
    .with_trials(p.trials.unwrap_or(DEFAULT_TRIALS))
    .with_seed(p.seed.unwrap_or(0));
    cfg.success_threshold = p.threshold.unwrap_or(DEFAULT_THRESHOLD);
    cfg.exhaustive_budget = p.budget.unwrap_or(DEFAULT_EXHAUSTIVE_BUDGET);
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `start:stop:step` into the inclusive progression.
pub fn parse_range(spec: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("--m-range expects start:stop:step, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if start == 0 || step == 0 || stop < start {
        return usage(format!("--m-range needs 1 <= start <= stop and step >= 1, got {spec:?}"));
    }
    Ok((start..=stop).step_by(step).collect())
}

fn sweep_points(p: &Params) -> Result<Vec<usize>, CliError> {
    let ms = match (&p.m_list, &p.m_range, p.m) {
        (Some(_), Some(_), _) => return usage("give either --m-list or --m-range, not both"),
        (Some(list), None, _) => list.clone(),
        (None, Some(r), _) => parse_range(r)?,
        (None, None, Some(m)) => vec![m],
        (None, None, None) => return usage("sweep needs --m-list, --m-range or --m"),
    };
    if ms.is_empty() || ms.contains(&0) {
        return usage("test counts must be positive");
    }
    Ok(ms)
}

/// One batch at `m` on the stream shared with transition probes at the same `m`.
fn batch_at(template: &ExperimentConfig, m: usize) -> Result<BatchRecord, CliError> {
    let mut cfg = template.with_m(m);
    cfg.master_seed = probe_seed(template, m);
    let stats = run_batch(&cfg)?;
    let mut rec = BatchRecord::new(&cfg, &stats);
    rec.seed = template.master_seed.value();
    Ok(rec)
}

fn plot_title(cfg: &ExperimentConfig) -> String {
    let mut t = format!("{} / {}: n = {}, k = {}", cfg.channel.name(), cfg.decoder, cfg.n, cfg.k);
    if let Some(s) = cfg.channel.sigma2() {
        t.push_str(&format!(", sigma2 = {s}"));
    }
    if let Some(p) = cfg.channel.erasure() {
        t.push_str(&format!(", p = {p}"));
    }
    t
}

fn sweep_outputs(p: &Params, ms: Vec<usize>) -> Result<Outputs, CliError> {
    let template = experiment(p)?;
    let rows = ms
        .into_iter()
        .map(|m| batch_at(&template, m))
        .collect::<Result<Vec<_>, _>>()?;
    let plot = p.plot.as_ref().map(|_| {
        let pts: Vec<(usize, f64)> = rows.iter().map(|r| (r.m, r.rate)).collect();
        svg_chart(&plot_title(&template), &pts)
    });
    Ok(Outputs {
        main: render(&rows, &SWEEP_HEADER, p.format.unwrap_or(Format::Csv))?,
        plot,
        failure: None,
    })
}

#[derive(Debug, Serialize)]
struct TransitionRow {
    model: String,
    decoder: String,
    n: usize,
    k: usize,
    m: usize,
    sigma2: Option<f64>,
    p: Option<f64>,
    trials: usize,
    successes: usize,
    rate: f64,
    ci_lo: f64,
    ci_hi: f64,
    seed: u64,
    m_star: usize,
}

fn transition_outputs(p: &Params) -> Result<Outputs, CliError> {
    let template = experiment(p)?;
    let threshold = p.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let t = find_transition_capped(
        &template,
        threshold,
        p.probe_trials.unwrap_or(DEFAULT_PROBE_TRIALS),
        p.m_max.unwrap_or(DEFAULT_M_MAX),
    )?;
    let rows: Vec<TransitionRow> = t
        .probes
        .iter()
        .map(|(m, stats)| {
            let r = BatchRecord::new(&template.with_m(*m), stats);
            TransitionRow {
                model: r.model,
                decoder: r.decoder,
                n: r.n,
                k: r.k,
                m: r.m,
                sigma2: r.sigma2,
                p: r.p,
                trials: r.trials,
                successes: r.successes,
                rate: r.rate,
                ci_lo: r.ci_lo,
                ci_hi: r.ci_hi,
                seed: template.master_seed.value(),
                m_star: t.m_star,
            }
        })
        .collect();
    let plot = p.plot.as_ref().map(|_| {
        let pts: Vec<(usize, f64)> = rows.iter().map(|r| (r.m, r.rate)).collect();
        svg_chart(&format!("{} (m* = {})", plot_title(&template), t.m_star), &pts)
    });
    Ok(Outputs {
        main: render(&rows, &TRANSITION_HEADER, p.format.unwrap_or(Format::Csv))?,
        plot,
        failure: None,
    })
}

#[derive(Debug, Serialize)]
struct BoundRow {
    model: String,
    kind: String,
    n: usize,
    k: usize,
    sigma2: Option<f64>,
    p: Option<f64>,
    log_base: f64,
    tests_real: f64,
    tests_ceil: Option<u64>,
    constant_caveat: bool,
    degenerate: bool,
}

fn bound_row(q: &BoundQuery, b: &BoundValue) -> BoundRow {
    use qgt_core::bounds::BoundModel;
    BoundRow {
        model: b.model.to_string(),
        kind: b.kind.to_string(),
        n: q.n,
        k: q.k,
        sigma2: if b.model == BoundModel::Gaussian { q.sigma2 } else { None },
        p: if b.model == BoundModel::ZChannel { q.p } else { None },
        log_base: b.log_base,
        tests_real: b.tests,
        tests_ceil: b.tests_ceil(),
        constant_caveat: b.constant_caveat,
        degenerate: b.degenerate,
    }
}

fn bounds_outputs(p: &Params) -> Result<Outputs, CliError> {
    let mut q = BoundQuery::<f64>::new(require(p.n, "n")?, require(p.k, "k")?)?;
    if let Some(s) = p.sigma2 {
        q = q.with_sigma2(s)?;
    }
    if let Some(v) = p.p {
        q = q.with_p(v)?;
    }
    if let Some(b) = p.log_base {
        q = q.with_log_base(b)?;
    }
    let values = match p.model.unwrap_or(ModelName::All) {
        ModelName::All => all_bounds(&q)?,
        ModelName::Noiseless => vec![bound_noiseless_linear(&q)?],
        ModelName::Gaussian => {
            require(q.sigma2, "sigma2")?;
            vec![bound_gaussian_lse(&q)?, bound_gaussian_converse(&q)?, bound_gaussian_linear(&q)?]
        }
        ModelName::Zchannel => {
            require(q.p, "p")?;
            vec![bound_zchannel_lse(&q)?, bound_zchannel_converse(&q)?, bound_zchannel_linear(&q)?]
        }
    };
    let rows: Vec<BoundRow> = values.iter().map(|b| bound_row(&q, b)).collect();
    Ok(Outputs {
        main: render(&rows, &BOUNDS_HEADER, p.format.unwrap_or(Format::Csv))?,
        plot: None,
        failure: None,
    })
}

#[derive(Debug, Serialize)]
pub(crate) struct VerifyRow {
    check: &'static str,
    case: String,
    measured: f64,
    reference: f64,
    tolerance: f64,
    passed: bool,
}

const CONTINUITY_STEP: f64 = 1e-6;
const CONTINUITY_TOL: f64 = 1e-4;

fn verify_continuity(rows: &mut Vec<VerifyRow>) -> Result<(), CliError> {
    let mut push = |case: String, measured: f64, reference: f64, tolerance: f64| {
        rows.push(VerifyRow {
            check: "continuity",
            case,
            measured,
            reference,
            tolerance,
            passed: (measured - reference).abs() <= tolerance,
        })
    };
    push("c_p(0.5)".into(), c_p(0.5)?, 0.5, 0.0);
    push("sigma2_opt(0.5)".into(), sigma2_opt_bernoulli(0.5)?, 0.25, 0.0);
    for d in [CONTINUITY_STEP, -CONTINUITY_STEP] {
        push(format!("c_p(0.5{d:+e})"), c_p(0.5 + d)?, 0.5, CONTINUITY_TOL);
        push(format!("sigma2_opt(0.5{d:+e})"), sigma2_opt_bernoulli(0.5 + d)?, 0.25, CONTINUITY_TOL);
    }
    Ok(())
}

fn verify_lemmas(rows: &mut Vec<VerifyRow>) {
    let ranges = LemmaRanges::default();
    let report = check_binomial_lemmas(ranges);
    for which in Inequality::ALL {
        let case = match which {
            Inequality::Subset => format!("C(N,M) <= (eN/M)^M, M <= N <= {}", ranges.subset_max_n),
            Inequality::Central => format!("C(2N,N) <= e 4^N / (pi sqrt(2N)), N <= {}", ranges.central_max_n),
            Inequality::Tail => format!("central binomial tail, b <= l <= {}", ranges.tail_max_l),
        };
        let violations = report.violations_of(which);
        rows.push(VerifyRow {
            check: "lemmas",
            case: format!("{case} ({} cases, {violations} violations)", report.checked(which)),
            measured: report.max_ratio(which),
            reference: 1.0,
            tolerance: 0.0,
            passed: violations == 0,
        });
    }
}

fn verify_gap(rows: &mut Vec<VerifyRow>, n: usize, k: usize, m: usize, ch: ChannelModel, trials: usize, seed: u64) -> Result<(), CliError> {
    let r = verify_score_gap(n, k, m, &ch, trials, RandomSeed::new(seed))?;
    let param = ch.erasure().map_or(String::new(), |p| format!(" p={p}"));
    rows.push(VerifyRow {
        check: "score-gap",
        case: format!("{}{param} n={n} k={k} m={m} trials={trials}", ch.name()),
        measured: r.measured,
        reference: r.target,
        tolerance: r.target * qgt_core::experiments::SCORE_GAP_TOLERANCE,
        passed: r.within_tolerance,
    });
    Ok(())
}

fn verify_inverse(rows: &mut Vec<VerifyRow>, n: usize, k: usize, trials: usize, seed: u64) -> Result<(), CliError> {
    let r = verify_inverse_count_assumption(n, k, trials, RandomSeed::new(seed))?;
    rows.push(VerifyRow {
        check: "inverse-count",
        case: format!("n={n} k={k} trials={trials}"),
        measured: r.measured,
        reference: r.bound,
        tolerance: 3.0 * r.std_err,
        passed: r.holds,
    });
    Ok(())
}

fn verify_outputs(p: &Params) -> Result<Outputs, CliError> {
    let check = require(p.check, "check")?;
    let seed = p.seed.unwrap_or(0);
    let mut rows = Vec::new();
    match check {
        Check::Continuity => verify_continuity(&mut rows)?,
        Check::Lemmas => verify_lemmas(&mut rows),
        Check::ScoreGap => {
            let ch = match p.model {
                None => ChannelModel::Noiseless,
                Some(_) => channel(p)?,
            };
            verify_gap(
                &mut rows,
                p.n.unwrap_or(100),
                p.k.unwrap_or(10),
                p.m.unwrap_or(50),
                ch,
                p.trials.unwrap_or(10_000),
                seed,
            )?;
        }
        Check::InverseCount => verify_inverse(
            &mut rows,
            p.n.unwrap_or(4096),
            p.k.unwrap_or(64),
            p.trials.unwrap_or(100_000),
            seed,
        )?,
        Check::All => {
            if p.n.is_some() || p.k.is_some() || p.m.is_some() || p.trials.is_some() || p.model.is_some() {
                return usage("--check all runs every check at its default size; drop --n/--k/--m/--trials/--model");
            }
            verify_lemmas(&mut rows);
            verify_continuity(&mut rows)?;
            for ch in [
                ChannelModel::Noiseless,
                ChannelModel::ZChannel { p: 0.1 },
                ChannelModel::ZChannel { p: 0.3 },
            ] {
                verify_gap(&mut rows, 100, 10, 50, ch, 10_000, seed)?;
            }
            verify_inverse(&mut rows, 4096, 64, 100_000, seed)?;
        }
    }
    let failed: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| format!("{}: {}", r.check, r.case)).collect();
    Ok(Outputs {
        main: render(&rows, &VERIFY_HEADER, p.format.unwrap_or(Format::Csv))?,
        plot: None,
        failure: (!failed.is_empty()).then(|| format!("check failed: {}", failed.join("; "))),
    })
}

/// Runs a fully merged command without touching the filesystem.
pub fn execute(cmd: &Command) -> Result<Outputs, CliError> {
    let p = cmd.params();
    check_ranges(p)?;
    if p.plot.is_some() && matches!(cmd, Command::Bounds(_) | Command::Verify(_)) {
        return usage(format!("--plot is not available for `{}`", cmd.name()));
    }
    match cmd {
        Command::Simulate(p) => sweep_outputs(p, vec![require(p.m, "m")?]),
        Command::Sweep(p) => sweep_outputs(p, sweep_points(p)?),
        Command::Transition(p) => transition_outputs(p),
        Command::Bounds(p) => bounds_outputs(p),
        Command::Verify(p) => verify_outputs(p),
    }
}

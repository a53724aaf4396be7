use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "qgt", version, about = "Quantitative group testing: simulations, phase transitions and bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one batch of recovery trials at a fixed number of tests.
    Simulate(Params),
    /// Run batches over a list or range of test counts.
    Sweep(Params),
    /// Locate the smallest test count reaching a success threshold.
    Transition(Params),
    /// Tabulate closed-form bounds on the number of tests.
    Bounds(Params),
    /// Run numerical self-checks (binomial inequalities, score gap, ...).
    Verify(Params),
}

impl Command {
    pub fn params(&self) -> &Params {
        match self {
            Command::Simulate(p)
            | Command::Sweep(p)
            | Command::Transition(p)
            | Command::Bounds(p)
            | Command::Verify(p) => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Transition(_) => "transition",
            Command::Bounds(_) => "bounds",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Noiseless,
    Gaussian,
    Zchannel,
    /// Every model whose parameters are given (bounds only).
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderName {
    Linear,
    #[value(alias = "lse_exhaustive")]
    #[serde(alias = "lse_exhaustive")]
    LseExhaustive,
    #[value(alias = "lse_local")]
    #[serde(alias = "lse_local")]
    LseLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Lemmas,
    ScoreGap,
    InverseCount,
    Continuity,
    All,
}

/// Flags shared by all subcommands. Every field is optional so a `--config`
/// file can fill gaps; flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Observation model.
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Gaussian noise variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Z-channel erasure probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of items.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of defectives.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of tests.
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated test counts for a sweep.
    #[arg(long, value_delimiter = ',', conflicts_with = "m_range")]
    pub m_list: Option<Vec<usize>>,
    /// Inclusive range `start:stop:step` of test counts for a sweep.
    #[arg(long)]
    pub m_range: Option<String>,
    /// Trials per batch.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub decoder: Option<DecoderName>,
    /// Local-search restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Maximum number of candidates the exhaustive decoder may enumerate.
    #[arg(long)]
    pub budget: Option<u128>,
    /// Success-rate threshold for the transition search.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Trials per transition probe.
    #[arg(long)]
    pub probe_trials: Option<usize>,
    /// Largest test count the transition search may probe.
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Base of the log(k(n-k)) factor in the bounds; natural log by default.
    #[arg(long)]
    pub log_base: Option<f64>,
    /// Which self-check to run.
    #[arg(long, value_enum)]
    pub check: Option<Check>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write an SVG chart of success rate against m to this path.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// JSON file with any of the above keys (kebab-case).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Params {
    /// Fills every unset field from `file`.
    pub fn merged_over(self, file: Params) -> Params {
        // A list or range on the command line replaces either one from the file.
        let (m_list, m_range) = if self.m_list.is_some() || self.m_range.is_some() {
            (self.m_list, self.m_range)
        } else {
            (file.m_list, file.m_range)
        };
        Params {
            model: self.model.or(file.model),
            sigma2: self.sigma2.or(file.sigma2),
            p: self.p.or(file.p),
            n: self.n.or(file.n),
            k: self.k.or(file.k),
            m: self.m.or(file.m),
            m_list,
            m_range,
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed),
            decoder: self.decoder.or(file.decoder),
            restarts: self.restarts.or(file.restarts),
            budget: self.budget.or(file.budget),
            threshold: self.threshold.or(file.threshold),
            probe_trials: self.probe_trials.or(file.probe_trials),
            m_max: self.m_max.or(file.m_max),
            log_base: self.log_base.or(file.log_base),
            check: self.check.or(file.check),
            output: self.output.or(file.output),
            format: self.format.or(file.format),
            plot: self.plot.or(file.plot),
            config: self.config,
        }
    }
}

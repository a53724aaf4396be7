//! Quantitative group testing: find the `k` defective items among `n` from `m`
//! pooled tests that report (noisy) counts of defectives.
//!
//! The crate covers the observation models (noiseless, additive Gaussian,
//! Z-channel), a linear correlation decoder and least-squares decoders,
//! closed-form sample-complexity bounds, and a Monte Carlo harness for
//! measuring empirical phase transitions.
//!
//! Numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64` and `*32`
//! aliases below fix the precision.

mod error;
mod scalar;
mod seed;

pub mod bounds;
pub mod decoders;
pub mod experiments;
pub mod lemmas;
pub mod model;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use seed::{mix64, Purpose, RandomSeed};

pub use bounds::{
    all_bounds, bound_gaussian_converse, bound_gaussian_linear, bound_gaussian_lse, bound_noiseless_linear,
    bound_zchannel_converse, bound_zchannel_linear, bound_zchannel_lse, c_p, sigma2_opt_bernoulli, BoundKind,
    BoundModel, BoundQuery, BoundValue,
};
pub use decoders::{
    correlation_scores, decode_linear, decode_lse_exhaustive, decode_lse_exhaustive_with_budget, decode_lse_local,
    lse_gain, lse_loss, top_k, DecodeResult, Method, ScoreVector,
};
pub use experiments::{
    find_transition, run_batch, run_trial, BatchStats, DecoderKind, ExperimentConfig, TransitionResult, TrialResult,
};
pub use lemmas::{check_binomial_lemmas, Inequality, LemmaRanges, LemmaReport};
pub use model::{
    gen_bernoulli_matrix, gen_signal, observe, observe_gaussian, observe_noiseless, observe_zchannel, ChannelModel,
    Observation, SparseSignal, TestMatrix,
};

pub type Observation64 = Observation<f64>;
pub type Observation32 = Observation<f32>;
pub type ScoreVector64 = ScoreVector<f64>;
pub type ScoreVector32 = ScoreVector<f32>;
pub type DecodeResult64 = DecodeResult<f64>;
pub type DecodeResult32 = DecodeResult<f32>;
pub type BoundQuery64 = BoundQuery<f64>;
pub type BoundQuery32 = BoundQuery<f32>;
pub type BoundValue64 = BoundValue<f64>;
pub type BoundValue32 = BoundValue<f32>;

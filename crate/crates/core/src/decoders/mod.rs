//! Support-recovery decoders: the correlation (linear) estimator and the
//! least-squares estimator in exhaustive and local-search form.

mod combinations;
mod linear;
mod lse;

pub use combinations::{binomial_u128, for_each_revolving_door};
pub use linear::{correlation_scores, decode_linear, top_k, ScoreVector};
pub use lse::{
    decode_lse_exhaustive, decode_lse_exhaustive_with_budget, decode_lse_local, expected_outcome,
    local_search_from, lse_gain, lse_loss, LocalSearchRun, DEFAULT_EXHAUSTIVE_BUDGET,
    DEFAULT_RESTARTS,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Which decoder produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Linear,
    LseExhaustive,
    LseLocal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Linear => "linear",
            Method::LseExhaustive => "lse_exhaustive",
            Method::LseLocal => "lse_local",
        })
    }
}

/// Estimated defective set.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult<T = f64> {
    /// Sorted, exactly `k` indices.
    pub support: Vec<usize>,
    pub method: Method,
    /// Final least-squares loss; `None` for the linear decoder.
    pub objective_value: Option<T>,
    /// Only exhaustive search can certify global optimality.
    pub certified_optimal: bool,
}

use std::cmp::Ordering;

use super::{DecodeResult, Method};
use crate::error::{invalid, Result};
use crate::model::{Observation, TestMatrix};
use crate::scalar::Scalar;

/// Correlation scores `S = A^T y`, one per item.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector<T = f64> {
    scores: Vec<T>,
}

impl<T: Scalar> ScoreVector<T> {
    pub fn new(scores: Vec<T>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return invalid("scores must be finite");
        }
        Ok(ScoreVector { scores })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// `S_j = sum_i a_ij y_i`.
///
/// Accumulates row by row over the set bits of each test, so integer-valued
/// outcomes produce exact integer scores.
pub fn correlation_scores<T: Scalar>(a: &TestMatrix, y: &Observation<T>) -> Result<ScoreVector<T>> {
    if y.len() != a.tests() {
        return invalid(format!(
            "observation has {} entries but the design has {} tests",
            y.len(),
            a.tests()
        ));
    }
    let mut scores = vec![T::zero(); a.items()];
    for (i, &yi) in y.values().iter().enumerate() {
        if yi == T::zero() {
            continue;
        }
        for j in a.row_items(i) {
            scores[j] = scores[j] + yi;
        }
    }
    ScoreVector::new(scores)
}

/// Indices of the `k` largest scores, ascending. Equal scores prefer the
/// smaller index.
pub fn top_k<T: Scalar>(s: &ScoreVector<T>, k: usize) -> Result<Vec<usize>> {
    let n = s.len();
    if k == 0 || k > n {
        return invalid(format!("k = {k} must satisfy 1 <= k <= n = {n}"));
    }
    let scores = s.as_slice();
    let rank = |&a: &usize, &b: &usize| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.select_nth_unstable_by(k - 1, rank);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// `TopK(A^T y, k)`.
pub fn decode_linear<T: Scalar>(a: &TestMatrix, y: &Observation<T>, k: usize) -> Result<DecodeResult<T>> {
    let s = correlation_scores(a, y)?;
    Ok(DecodeResult {
        support: top_k(&s, k)?,
        method: Method::Linear,
        objective_value: None,
        certified_optimal: false,
    })
}

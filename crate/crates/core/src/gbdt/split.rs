//! Sparsity-aware exact greedy split search.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::objective::split_gain;
use super::{GbdtError, TrainConfig};
use crate::features::SparseVector;
use crate::Scalar;

/// Row-major sparse training matrix. Absent entries are zeros and are
/// routed by each split's default direction.
#[derive(Debug, Clone, Copy)]
pub struct FeatureMatrix<'a, T> {
    rows: &'a [SparseVector<T>],
    n_features: usize,
}

impl<'a, T: Scalar> FeatureMatrix<'a, T> {
    pub fn new(rows: &'a [SparseVector<T>], n_features: usize) -> Result<Self, GbdtError> {
        for (i, row) in rows.iter().enumerate() {
            if row.entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(GbdtError::DimensionMismatch(format!("row {i}: indices not strictly increasing")));
            }
            if let Some(max) = row.max_index() {
                if max >= n_features {
                    return Err(GbdtError::DimensionMismatch(format!(
                        "row {i}: column {max} outside feature dimension {n_features}"
                    )));
                }
            }
            if row.entries.iter().any(|&(_, v)| !v.is_finite()) {
                return Err(GbdtError::DimensionMismatch(format!("row {i}: non-finite value")));
            }
        }
        Ok(Self { rows, n_features })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, instance: usize) -> &'a SparseVector<T> {
        &self.rows[instance]
    }

    pub fn value(&self, instance: usize, feature: usize) -> Option<T> {
        self.rows[instance].get(feature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo<T> {
    pub feature: usize,
    /// Present values strictly below the threshold go left.
    pub threshold: T,
    /// Side taken by instances with no entry for `feature`.
    pub default_left: bool,
    pub gain: T,
}

impl<T: Scalar> SplitInfo<T> {
    pub fn goes_left(&self, value: Option<T>) -> bool {
        match value {
            Some(v) => v < self.threshold,
            None => self.default_left,
        }
    }
}

/// Threshold separating `lo` from the next distinct value `hi`: their
/// midpoint, or `hi` itself when rounding collapses the midpoint onto `lo`.
pub fn midpoint_threshold<T: Scalar>(lo: T, hi: T) -> T {
    let mid = (lo + hi) * T::of(0.5);
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Best split of `instances` by exact enumeration.
///
/// For each feature, the node's present values are sorted. Candidate
/// thresholds are the smallest present value (every present instance goes
/// right, so only absent instances can go left) followed by the midpoint
/// between each pair of consecutive distinct values. Every candidate is
/// tried with absent instances sent left and then right. A candidate
/// qualifies when both children are non-empty, both hessian sums reach
/// `min_child_weight`, and the gain is positive. The first maximum in
/// (feature, threshold, default-left-first) order wins.
pub fn find_best_split<T: Scalar>(
    instances: &[usize],
    features: &FeatureMatrix<'_, T>,
    grad: &[T],
    hess: &[T],
    config: &TrainConfig,
) -> Option<SplitInfo<T>> {
    if instances.is_empty() {
        return None;
    }
    let lambda = T::of(config.lambda);
    let gamma = T::of(config.gamma);
    let min_child = T::of(config.min_child_weight);
    let n = instances.len();
    let g_total = instances.iter().fold(T::zero(), |acc, &i| acc + grad[i]);
    let h_total = instances.iter().fold(T::zero(), |acc, &i| acc + hess[i]);

    let mut entries: Vec<(usize, T, usize)> = Vec::new();
    for &i in instances {
        entries.extend(features.row(i).entries.iter().map(|&(f, v)| (f, v, i)));
    }
    entries.sort_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)).then_with(|| a.2.cmp(&b.2))
    });

    let mut best: Option<SplitInfo<T>> = None;
    let mut consider = |feature: usize, threshold: T, left: (usize, T, T), present: (usize, T, T)| {
        let (n_left_present, g_left_present, h_left_present) = left;
        let (n_present, g_present, h_present) = present;
        let n_missing = n - n_present;
        let (g_missing, h_missing) =
            if n_missing == 0 { (T::zero(), T::zero()) } else { (g_total - g_present, h_total - h_present) };
        let g_right_present = g_present - g_left_present;
        let h_right_present = h_present - h_left_present;

        for default_left in [true, false] {
            if !default_left && n_missing == 0 {
                // Same partition as default-left.
                continue;
            }
            let (n_left, gl, hl, gr, hr) = if default_left {
                (
                    n_left_present + n_missing,
                    g_left_present + g_missing,
                    h_left_present + h_missing,
                    g_right_present,
                    h_right_present,
                )
            } else {
                (
                    n_left_present,
                    g_left_present,
                    h_left_present,
                    g_right_present + g_missing,
                    h_right_present + h_missing,
                )
            };
            if n_left == 0 || n_left == n || hl < min_child || hr < min_child {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, lambda, gamma);
            if gain > T::zero() && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitInfo { feature, threshold, default_left, gain });
            }
        }
    };

    let mut start = 0;
    while start < entries.len() {
        let feature = entries[start].0;
        let end = start + entries[start..].iter().take_while(|e| e.0 == feature).count();
        let column = &entries[start..end];
        let present = (
            column.len(),
            column.iter().fold(T::zero(), |acc, e| acc + grad[e.2]),
            column.iter().fold(T::zero(), |acc, e| acc + hess[e.2]),
        );

        consider(feature, column[0].1, (0, T::zero(), T::zero()), present);
        let (mut g_left, mut h_left) = (T::zero(), T::zero());
        for (k, entry) in column.iter().enumerate() {
            g_left = g_left + grad[entry.2];
            h_left = h_left + hess[entry.2];
            if let Some(next) = column.get(k + 1) {
                if next.1 > entry.1 {
                    let threshold = midpoint_threshold(entry.1, next.1);
                    consider(feature, threshold, (k + 1, g_left, h_left), present);
                }
            }
        }
        start = end;
    }
    best
}

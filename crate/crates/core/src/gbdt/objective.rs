//! Softmax cross-entropy and the closed forms of the second-order objective.
//!
//! With a tree penalty of `gamma * leaves + lambda/2 * sum(w^2)`, expanding
//! the loss to second order around the current margins gives, per leaf with
//! gradient sum G and hessian sum H, the optimal weight `-G / (H + lambda)`
//! and the split gain below.

use serde::{Deserialize, Serialize};

use super::GbdtError;
use crate::Scalar;

/// Lower bound applied to every per-instance hessian.
pub const HESSIAN_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradHess<T> {
    pub g: T,
    pub h: T,
}

/// Numerically stable softmax (the maximum is subtracted before `exp`).
pub fn softmax<T: Scalar>(margins: &[T]) -> Vec<T> {
    let max = margins.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = margins.iter().map(|&m| (m - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln softmax(margins)[class]`, evaluated via log-sum-exp.
pub fn cross_entropy<T: Scalar>(margins: &[T], class: usize) -> T {
    let max = margins.iter().copied().fold(T::neg_infinity(), T::max);
    let sum = margins.iter().fold(T::zero(), |acc, &m| acc + (m - max).exp());
    sum.ln() + max - margins[class]
}

/// Per-class first and second derivatives of the weighted cross-entropy
/// with respect to each margin.
pub fn grad_hess_softmax<T: Scalar>(probs: &[T], true_class: usize, weight: T) -> Vec<GradHess<T>> {
    let floor = T::of(HESSIAN_FLOOR);
    probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let target = if k == true_class { T::one() } else { T::zero() };
            GradHess { g: weight * (p - target), h: (weight * p * (T::one() - p)).max(floor) }
        })
        .collect()
}

pub fn leaf_weight<T: Scalar>(grad_sum: T, hess_sum: T, lambda: T) -> Result<T, GbdtError> {
    let denom = hess_sum + lambda;
    if denom <= T::zero() {
        return Err(GbdtError::DegenerateLeaf);
    }
    Ok(-grad_sum / denom)
}

/// Reduction in the regularised objective from splitting a node into
/// (left, right), minus the per-leaf penalty `gamma`.
pub fn split_gain<T: Scalar>(gl: T, hl: T, gr: T, hr: T, lambda: T, gamma: T) -> T {
    let half = T::of(0.5);
    let score = |g: T, h: T| g * g / (h + lambda);
    half * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

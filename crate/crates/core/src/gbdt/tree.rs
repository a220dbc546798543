//! Regression trees grown depth-first on per-instance gradient statistics.

use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::objective::leaf_weight;
use super::split::{find_best_split, FeatureMatrix, SplitInfo};
use super::{GbdtError, TrainConfig};
use crate::features::SparseVector;
use crate::Scalar;

/// A node of a boosted regression tree.
///
/// Serialized as nested arrays: a leaf is its bare weight, an internal node
/// is `[feature, threshold, default_left, left, right]`.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode<T> {
    Leaf { weight: T },
    Split { feature: usize, threshold: T, default_left: bool, left: Box<TreeNode<T>>, right: Box<TreeNode<T>> },
}

impl<T: Scalar> TreeNode<T> {
    pub fn leaf(weight: T) -> Self {
        TreeNode::Leaf { weight }
    }

    /// Leaf value reached by `x`. Missing features follow the default side.
    pub fn predict(&self, x: &SparseVector<T>) -> T {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split { feature, threshold, default_left, left, right } => {
                    let go_left = match x.get(*feature) {
                        Some(v) => v < *threshold,
                        None => *default_left,
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { feature, left, right, .. } => {
                Some((*feature).max(left.max_feature().unwrap_or(0)).max(right.max_feature().unwrap_or(0)))
            }
        }
    }

    pub(crate) fn all_finite(&self) -> bool {
        match self {
            TreeNode::Leaf { weight } => weight.is_finite(),
            TreeNode::Split { threshold, left, right, .. } => {
                threshold.is_finite() && left.all_finite() && right.all_finite()
            }
        }
    }
}

impl<T: Scalar> Serialize for TreeNode<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TreeNode::Leaf { weight } => weight.serialize(serializer),
            TreeNode::Split { feature, threshold, default_left, left, right } => {
                let mut tup = serializer.serialize_tuple(5)?;
                tup.serialize_element(feature)?;
                tup.serialize_element(threshold)?;
                tup.serialize_element(default_left)?;
                tup.serialize_element(left.as_ref())?;
                tup.serialize_element(right.as_ref())?;
                tup.end()
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
enum NodeRepr<T> {
    Leaf(T),
    Split(usize, T, bool, Box<NodeRepr<T>>, Box<NodeRepr<T>>),
}

impl<T> From<NodeRepr<T>> for TreeNode<T> {
    fn from(repr: NodeRepr<T>) -> Self {
        match repr {
            NodeRepr::Leaf(weight) => TreeNode::Leaf { weight },
            NodeRepr::Split(feature, threshold, default_left, left, right) => TreeNode::Split {
                feature,
                threshold,
                default_left,
                left: Box::new((*left).into()),
                right: Box::new((*right).into()),
            },
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for TreeNode<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        NodeRepr::<T>::deserialize(deserializer).map(Into::into)
    }
}

/// Grows a tree over `instances`: split while a qualifying split exists and
/// the depth limit allows, otherwise emit a leaf of weight
/// `learning_rate * -G / (H + lambda)`.
pub fn build_tree<T: Scalar>(
    instances: &[usize],
    features: &FeatureMatrix<'_, T>,
    grad: &[T],
    hess: &[T],
    config: &TrainConfig,
) -> Result<TreeNode<T>, GbdtError> {
    grow(instances, 0, features, grad, hess, config)
}

fn grow<T: Scalar>(
    instances: &[usize],
    depth: usize,
    features: &FeatureMatrix<'_, T>,
    grad: &[T],
    hess: &[T],
    config: &TrainConfig,
) -> Result<TreeNode<T>, GbdtError> {
    if depth < config.max_depth {
        if let Some(split) = find_best_split(instances, features, grad, hess, config) {
            let (left, right) = partition(instances, features, &split);
            return Ok(TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                default_left: split.default_left,
                left: Box::new(grow(&left, depth + 1, features, grad, hess, config)?),
                right: Box::new(grow(&right, depth + 1, features, grad, hess, config)?),
            });
        }
    }
    let g = instances.iter().fold(T::zero(), |acc, &i| acc + grad[i]);
    let h = instances.iter().fold(T::zero(), |acc, &i| acc + hess[i]);
    let weight = leaf_weight(g, h, T::of(config.lambda))?;
    Ok(TreeNode::leaf(T::of(config.learning_rate) * weight))
}

fn partition<T: Scalar>(
    instances: &[usize],
    features: &FeatureMatrix<'_, T>,
    split: &SplitInfo<T>,
) -> (Vec<usize>, Vec<usize>) {
    instances.iter().partition(|&&i| split.goes_left(features.value(i, split.feature)))
}

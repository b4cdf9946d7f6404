//! CART classification tree over binary features.
//!
//! Splits are chosen greedily by Gini-impurity decrease. Gains are compared
//! exactly in integer arithmetic, so ties between features are genuine and
//! resolve to the lowest feature index. No pruning.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        counts: Vec<usize>,
    },
    /// `left` holds samples where the feature is 0, `right` where it is 1.
    Split {
        feature: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub n_features: usize,
    pub n_classes: usize,
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Gini decrease from splitting `parent` into `left` and `right`.
pub fn gini_gain(left: &[usize], right: &[usize]) -> f64 {
    let parent: Vec<usize> = left.iter().zip(right).map(|(a, b)| a + b).collect();
    let n: usize = parent.iter().sum();
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    gini(&parent) - (nl as f64 * gini(left) + nr as f64 * gini(right)) / n as f64
}

fn sum_squares(counts: &[usize]) -> u128 {
    counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
}

/// Split quality as the exact fraction `num / den` of
/// `Σ left² / n_left + Σ right² / n_right`; larger means more gain.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(left: &[usize], right: &[usize]) -> Self {
        let nl: usize = left.iter().sum();
        let nr: usize = right.iter().sum();
        Score {
            num: sum_squares(left) * nr as u128 + sum_squares(right) * nl as u128,
            den: nl as u128 * nr as u128,
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    /// Strictly lower weighted child impurity than the parent.
    fn improves_on(&self, parent: &[usize]) -> bool {
        let n: u128 = parent.iter().map(|&c| c as u128).sum();
        self.num * n > sum_squares(parent) * self.den
    }
}

fn class_counts(ys: &[usize], idx: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in idx {
        counts[ys[i]] += 1;
    }
    counts
}

struct Grower<'a> {
    xs: &'a [Vec<bool>],
    ys: &'a [usize],
    n_classes: usize,
    max_depth: Option<usize>,
}

impl Grower<'_> {
    /// Best feature for splitting `idx`, or `None` when no untested feature
    /// with two non-empty branches strictly reduces impurity.
    fn best_split(&self, idx: &[usize], used: &[bool]) -> Option<usize> {
        let parent = class_counts(self.ys, idx, self.n_classes);
        let mut best: Option<(usize, Score)> = None;
        for (f, _) in used.iter().enumerate().filter(|(_, &u)| !u) {
            let mut left = vec![0; self.n_classes];
            let mut right = vec![0; self.n_classes];
            for &i in idx {
                if self.xs[i][f] {
                    right[self.ys[i]] += 1;
                } else {
                    left[self.ys[i]] += 1;
                }
            }
            if left.iter().all(|&c| c == 0) || right.iter().all(|&c| c == 0) {
                continue;
            }
            let score = Score::new(&left, &right);
            if !score.improves_on(&parent) {
                continue;
            }
            match best {
                Some((_, b)) if score.cmp(&b) != Ordering::Greater => {}
                _ => best = Some((f, score)),
            }
        }
        best.map(|(f, _)| f)
    }

    fn grow(&self, idx: Vec<usize>, depth: usize, used: &mut [bool]) -> TreeNode {
        let counts = class_counts(self.ys, &idx, self.n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_hit = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_hit {
            return TreeNode::Leaf { counts };
        }
        let Some(feature) = self.best_split(&idx, used) else {
            return TreeNode::Leaf { counts };
        };
        let (right_idx, left_idx): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.xs[i][feature]);
        used[feature] = true;
        let left = self.grow(left_idx, depth + 1, used);
        let right = self.grow(right_idx, depth + 1, used);
        used[feature] = false;
        TreeNode::Split {
            feature,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

fn to_bits(x: &FeatureVector, sample: usize) -> Result<Vec<bool>> {
    x.iter()
        .enumerate()
        .map(|(feature, &value)| match value {
            v if v == 0.0 => Ok(false),
            v if v == 1.0 => Ok(true),
            value => Err(TriageError::NonBinary {
                sample,
                feature,
                value,
            }),
        })
        .collect()
}

/// Grows a tree to purity (or `max_depth`). The root is at depth 0.
pub fn train_tree(
    xs: &[FeatureVector],
    ys: &[usize],
    n_classes: usize,
    max_depth: Option<usize>,
) -> Result<DecisionTree> {
    if xs.is_empty() {
        return Err(TriageError::EmptyCorpus);
    }
    if xs.len() != ys.len() {
        return Err(TriageError::Dimension {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if let Some(&y) = ys.iter().find(|&&y| y >= n_classes) {
        return Err(TriageError::invalid(format!(
            "label {y} out of range for {n_classes} classes"
        )));
    }
    let n_features = xs[0].len();
    let bits = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if x.len() != n_features {
                return Err(TriageError::Dimension {
                    expected: n_features,
                    actual: x.len(),
                });
            }
            to_bits(x, i)
        })
        .collect::<Result<Vec<_>>>()?;
    let grower = Grower {
        xs: &bits,
        ys,
        n_classes,
        max_depth,
    };
    let mut used = vec![false; n_features];
    let root = grower.grow((0..xs.len()).collect(), 0, &mut used);
    Ok(DecisionTree {
        root,
        n_features,
        n_classes,
    })
}

impl DecisionTree {
    /// Majority class of the reached leaf and its share of the leaf.
    /// Ties go to the lowest class index.
    pub fn predict(&self, x: &FeatureVector) -> Result<(usize, f64)> {
        if x.len() != self.n_features {
            return Err(TriageError::Dimension {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let bits = to_bits(x, 0)?;
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Split {
                    feature,
                    left,
                    right,
                } => node = if bits[*feature] { right } else { left },
                TreeNode::Leaf { counts } => return Ok(leaf_vote(counts)),
            }
        }
    }

    pub fn root_feature(&self) -> Option<usize> {
        match &self.root {
            TreeNode::Split { feature, .. } => Some(*feature),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaves(&self) -> usize {
        self.root.leaves()
    }

    /// Checks the structural invariants of a deserialized tree.
    pub fn validate(&self) -> Result<()> {
        fn walk(node: &TreeNode, t: &DecisionTree, used: &mut Vec<usize>) -> Result<()> {
            match node {
                TreeNode::Leaf { counts } => {
                    if counts.len() != t.n_classes || counts.iter().sum::<usize>() == 0 {
                        return Err(TriageError::Artifact(
                            "parameters.root: leaf counts must cover every class with a positive total"
                                .into(),
                        ));
                    }
                }
                TreeNode::Split {
                    feature,
                    left,
                    right,
                } => {
                    if *feature >= t.n_features || used.contains(feature) {
                        return Err(TriageError::Artifact(format!(
                            "parameters.root: invalid split feature {feature}"
                        )));
                    }
                    used.push(*feature);
                    walk(left, t, used)?;
                    walk(right, t, used)?;
                    used.pop();
                }
            }
            Ok(())
        }
        walk(&self.root, self, &mut Vec::new())
    }
}

fn leaf_vote(counts: &[usize]) -> (usize, f64) {
    let total: usize = counts.iter().sum();
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    (best, counts[best] as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(bits: &[u8]) -> FeatureVector {
        FeatureVector::new(bits.iter().map(|&b| b as f64).collect())
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[2, 2]), 0.5);
        assert_eq!(gini(&[4, 0]), 0.0);
        assert!((gini(&[1, 1, 1]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(gini(&[]), 0.0);
    }

    #[test]
    fn single_class_is_single_leaf() {
        let xs = vec![fv(&[1, 0]), fv(&[0, 1]), fv(&[1, 1])];
        let t = train_tree(&xs, &[1, 1, 1], 3, None).unwrap();
        assert_eq!(t.root, TreeNode::Leaf { counts: vec![0, 3, 0] });
        assert_eq!(t.predict(&fv(&[0, 0])).unwrap(), (1, 1.0));
    }

    #[test]
    fn perfect_separator_at_root() {
        // Feature 0 separates the classes; feature 1 is noise.
        let xs = vec![fv(&[0, 0]), fv(&[0, 1]), fv(&[1, 0]), fv(&[1, 1])];
        let ys = [0, 0, 1, 1];
        assert_eq!(gini_gain(&[2, 0], &[0, 2]), 0.5);
        assert_eq!(gini_gain(&[1, 1], &[1, 1]), 0.0);
        let t = train_tree(&xs, &ys, 2, None).unwrap();
        assert_eq!(
            t.root,
            TreeNode::Split {
                feature: 0,
                left: Box::new(TreeNode::Leaf { counts: vec![2, 0] }),
                right: Box::new(TreeNode::Leaf { counts: vec![0, 2] }),
            }
        );
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(t.predict(x).unwrap(), (y, 1.0));
        }
    }

    #[test]
    fn equal_gains_pick_lowest_feature() {
        // Features 1 and 2 are identical separators; 0 is useless.
        let xs = vec![fv(&[0, 0, 0]), fv(&[1, 0, 0]), fv(&[0, 1, 1]), fv(&[1, 1, 1])];
        let t = train_tree(&xs, &[0, 0, 1, 1], 2, None).unwrap();
        assert_eq!(t.root_feature(), Some(1));
    }

    #[test]
    fn leaf_ties_go_to_lowest_class() {
        let t = DecisionTree {
            root: TreeNode::Leaf { counts: vec![1, 1, 0, 0, 0] },
            n_features: 2,
            n_classes: 5,
        };
        assert_eq!(t.predict(&fv(&[0, 1])).unwrap(), (0, 0.5));
    }

    #[test]
    fn depth_limit_and_conflicting_duplicates() {
        let xs = vec![fv(&[1, 0]), fv(&[1, 0]), fv(&[0, 1]), fv(&[0, 0])];
        let ys = [0, 1, 1, 0];
        let stump = train_tree(&xs, &ys, 2, Some(0)).unwrap();
        assert!(matches!(stump.root, TreeNode::Leaf { .. }));
        let full = train_tree(&xs, &ys, 2, None).unwrap();
        full.validate().unwrap();
        // Identical vectors with different labels cannot be separated.
        assert_eq!(full.predict(&fv(&[1, 0])).unwrap(), (0, 0.5));
    }

    #[test]
    fn rejects_non_binary_and_bad_dims() {
        let err = train_tree(&[fv(&[0, 1]), FeatureVector::new(vec![0.0, 2.0])], &[0, 1], 2, None)
            .unwrap_err();
        assert!(matches!(err, TriageError::NonBinary { sample: 1, feature: 1, .. }));
        let t = train_tree(&[fv(&[0, 1]), fv(&[1, 0])], &[0, 1], 2, None).unwrap();
        assert!(matches!(t.predict(&fv(&[1])), Err(TriageError::Dimension { .. })));
    }

    #[test]
    fn validate_catches_repeated_feature() {
        let leaf = || Box::new(TreeNode::Leaf { counts: vec![1, 0] });
        let t = DecisionTree {
            root: TreeNode::Split {
                feature: 0,
                left: Box::new(TreeNode::Split { feature: 0, left: leaf(), right: leaf() }),
                right: leaf(),
            },
            n_features: 2,
            n_classes: 2,
        };
        assert!(t.validate().is_err());
    }
}

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ForestError;

/// Gini impurity `1 - sum (c_i / total)^2`.
pub fn gini(class_counts: &[usize]) -> Result<f64, ForestError> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(ForestError::Invalid("gini of an empty histogram".into()));
    }
    let t = total as f64;
    Ok(1.0
        - class_counts
            .iter()
            .map(|&c| (c as f64 / t).powi(2))
            .sum::<f64>())
}

fn gini_from_sq(sum_sq: f64, n: f64) -> f64 {
    1.0 - sum_sq / (n * n)
}

/// A threshold split: samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Sample-weighted Gini impurity of the two children.
    pub impurity: f64,
}

const TIE_EPS: f64 = 1e-12;

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best Gini split over `features` (scanned in the given order) and every
/// midpoint between consecutive distinct values. Earlier features and lower
/// thresholds win ties. Returns `None` unless the split strictly lowers the
/// parent impurity.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[usize],
    samples: &[usize],
    features: &[usize],
    n_classes: usize,
) -> Option<Split> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mut parent = vec![0usize; n_classes];
    for &s in samples {
        parent[y[s]] += 1;
    }
    let parent_sq: f64 = parent.iter().map(|&c| (c * c) as f64).sum();
    let parent_gini = gini_from_sq(parent_sq, n as f64);

    let mut best: Option<Split> = None;
    let mut order: Vec<usize> = samples.to_vec();
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &f in features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&parent);
        let mut left_sq = 0.0;
        let mut right_sq = parent_sq;
        for i in 0..n - 1 {
            let c = y[order[i]];
            left_sq += (2 * left[c] + 1) as f64;
            left[c] += 1;
            right_sq -= (2 * right[c] - 1) as f64;
            right[c] -= 1;
            let (a, b) = (x[order[i]][f], x[order[i + 1]][f]);
            if a >= b {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = (n - i - 1) as f64;
            let impurity =
                (nl * gini_from_sq(left_sq, nl) + nr * gini_from_sq(right_sq, nr)) / n as f64;
            if best.is_none_or(|b| impurity < b.impurity - TIE_EPS) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(a, b),
                    impurity,
                });
            }
        }
    }
    best.filter(|b| b.impurity < parent_gini - TIE_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary classification tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(class: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { class }],
        }
    }

    pub fn predict(&self, features: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if features[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Where the random feature subset is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSampling {
    /// One subset per tree, shared by all its nodes.
    PerTree,
    /// A fresh subset at every node.
    #[default]
    PerNode,
}

#[derive(Debug, Clone, Copy)]
pub struct GrowOptions {
    pub subset_size: usize,
    pub sampling: FeatureSampling,
    pub max_depth: Option<usize>,
}

/// Majority class; ties go to the smallest class index.
pub fn majority(y: &[usize], samples: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &s in samples {
        counts[y[s]] += 1;
    }
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

/// Grows one tree: pure nodes become leaves of their label; empty nodes,
/// nodes constant on every candidate feature, and nodes with no
/// impurity-reducing split become majority leaves; otherwise the node splits
/// and both halves recurse.
pub fn tree_generate<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[usize],
    samples: &[usize],
    n_classes: usize,
    tree_features: &[usize],
    opts: &GrowOptions,
    rng: &mut R,
) -> DecisionTree {
    let n_features = x.first().map_or(0, Vec::len);
    let mut tree = DecisionTree { nodes: Vec::new() };
    let mut grower = Grower {
        x,
        y,
        n_classes,
        n_features,
        tree_features,
        opts,
        tree: &mut tree,
    };
    grower.grow(samples.to_vec(), 0, rng);
    tree
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    n_features: usize,
    tree_features: &'a [usize],
    opts: &'a GrowOptions,
    tree: &'a mut DecisionTree,
}

impl Grower<'_> {
    fn grow<R: Rng + ?Sized>(&mut self, samples: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let id = self.tree.nodes.len();
        if samples.is_empty() {
            self.tree.nodes.push(Node::Leaf { class: 0 });
            return id;
        }
        let first = self.y[samples[0]];
        if samples.iter().all(|&s| self.y[s] == first) {
            self.tree.nodes.push(Node::Leaf { class: first });
            return id;
        }
        let majority_leaf = Node::Leaf {
            class: majority(self.y, &samples, self.n_classes),
        };
        if self.opts.max_depth.is_some_and(|d| depth >= d) {
            self.tree.nodes.push(majority_leaf);
            return id;
        }
        let node_features;
        let features: &[usize] = match self.opts.sampling {
            FeatureSampling::PerTree => self.tree_features,
            FeatureSampling::PerNode => {
                node_features = draw_features(rng, self.n_features, self.opts.subset_size);
                &node_features
            }
        };
        let constant = features.iter().all(|&f| {
            let v = self.x[samples[0]][f];
            samples.iter().all(|&s| self.x[s][f] == v)
        });
        let split = if constant {
            None
        } else {
            best_split(self.x, self.y, &samples, features, self.n_classes)
        };
        let Some(split) = split else {
            self.tree.nodes.push(majority_leaf);
            return id;
        };
        self.tree.nodes.push(majority_leaf);
        let (d1, d2): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.x[s][split.feature] <= split.threshold);
        let left = self.grow(d1, depth + 1, rng);
        let right = self.grow(d2, depth + 1, rng);
        self.tree.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Sorted random subset of `k` feature indices out of `n`.
pub fn draw_features<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let k = k.clamp(1, n.max(1));
    let mut f = index::sample(rng, n, k).into_vec();
    f.sort_unstable();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4]).unwrap(), 0.0);
        assert_eq!(gini(&[2, 2]).unwrap(), 0.5);
        assert_eq!(gini(&[3, 1]).unwrap(), 0.375);
        assert!(gini(&[]).is_err());
        assert!(gini(&[0, 0]).is_err());
    }

    #[test]
    fn separable_split() {
        let x: Vec<Vec<f64>> = [1.0, 2.0, 8.0, 9.0].iter().map(|&v| vec![v]).collect();
        let y = [0, 0, 1, 1];
        let s = best_split(&x, &y, &[0, 1, 2, 3], &[0], 2).unwrap();
        assert!(s.threshold > 2.0 && s.threshold < 8.0);
        assert_eq!(s.impurity, 0.0);
    }

    #[test]
    fn constant_feature_has_no_split() {
        let x = vec![vec![3.0]; 4];
        assert!(best_split(&x, &[0, 1, 0, 1], &[0, 1, 2, 3], &[0], 2).is_none());
    }

    #[test]
    fn single_label_is_leaf() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y = [2; 5];
        let opts = GrowOptions {
            subset_size: 1,
            sampling: FeatureSampling::PerTree,
            max_depth: None,
        };
        let t = tree_generate(
            &x,
            &y,
            &[0, 1, 2, 3, 4],
            3,
            &[0],
            &opts,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(t, DecisionTree::leaf(2));
    }

    #[test]
    fn separable_is_depth_one() {
        let x: Vec<Vec<f64>> = [0.1, 0.4, 0.2, 5.0, 6.0]
            .iter()
            .map(|&v| vec![v, 1.0])
            .collect();
        let y = [0, 0, 0, 1, 1];
        let opts = GrowOptions {
            subset_size: 2,
            sampling: FeatureSampling::PerTree,
            max_depth: None,
        };
        let t = tree_generate(
            &x,
            &y,
            &[0, 1, 2, 3, 4],
            2,
            &[0, 1],
            &opts,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(t.depth(), 1);
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(t.predict(row), label);
        }
    }

    #[test]
    fn duplicated_points_get_majority_leaf() {
        // identical feature rows with conflicting labels, 2 vs 1
        let x = vec![vec![1.0], vec![1.0], vec![1.0], vec![4.0]];
        let y = [1, 1, 0, 2];
        let opts = GrowOptions {
            subset_size: 1,
            sampling: FeatureSampling::PerTree,
            max_depth: None,
        };
        let t = tree_generate(
            &x,
            &y,
            &[0, 1, 2, 3],
            3,
            &[0],
            &opts,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(t.predict(&[1.0]), 1);
        assert_eq!(t.predict(&[4.0]), 2);
    }

    #[test]
    fn majority_tie_prefers_smallest_class() {
        assert_eq!(majority(&[2, 1, 1, 2], &[0, 1, 2, 3], 3), 1);
    }

    #[test]
    fn max_depth_limits_growth() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..16).collect();
        let samples: Vec<usize> = (0..16).collect();
        let opts = GrowOptions {
            subset_size: 1,
            sampling: FeatureSampling::PerTree,
            max_depth: Some(2),
        };
        let t = tree_generate(
            &x,
            &y,
            &samples,
            16,
            &[0],
            &opts,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert!(t.depth() <= 2);
        let opts = GrowOptions {
            max_depth: None,
            ..opts
        };
        let t = tree_generate(
            &x,
            &y,
            &samples,
            16,
            &[0],
            &opts,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(t.n_leaves(), 16);
    }
}

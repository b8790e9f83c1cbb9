use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{draw_features, tree_generate, DecisionTree, FeatureSampling, GrowOptions};
use super::ForestError;
use crate::fingerprint::FingerprintBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    /// One class per reference point.
    Joint,
}

impl Axis {
    fn tag(self) -> u64 {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Joint => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_trees: usize,
    /// `None` means `ceil(sqrt(n_features))`.
    pub feature_subset_size: Option<usize>,
    pub feature_sampling: FeatureSampling,
    /// When false every tree sees the full training set once.
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            feature_subset_size: None,
            feature_sampling: FeatureSampling::PerNode,
            bootstrap: true,
            max_depth: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn subset_size(&self, n_features: usize) -> usize {
        self.feature_subset_size
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }
}

/// A trained classification forest whose classes map to `label_set` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<L> {
    pub axis: Axis,
    pub trees: Vec<DecisionTree>,
    /// Sorted ascending; class `i` stands for `label_set[i]`.
    pub label_set: Vec<L>,
    pub train_seed: u64,
    pub feature_subset_size: usize,
    pub n_features: usize,
}

pub type AxisModel = ForestModel<f64>;
pub type JointModel = ForestModel<[f64; 2]>;

/// The coordinate-separated pair `(M_x, M_y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrfModel {
    pub m_x: AxisModel,
    pub m_y: AxisModel,
}

/// Per-tree sub-training sets, kept for out-of-bag evaluation.
pub type Bags = Vec<Vec<usize>>;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream per (axis, tree) so parallel and serial training agree.
pub fn tree_seed(master: u64, axis: Axis, tree: usize) -> u64 {
    splitmix64(master ^ splitmix64((axis.tag() << 40) | tree as u64))
}

fn fit(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    axis: Axis,
    cfg: &TrainConfig,
) -> Result<(Vec<DecisionTree>, Bags, usize), ForestError> {
    if cfg.n_trees == 0 {
        return Err(ForestError::Invalid("need at least one tree".into()));
    }
    let n = x.len();
    let n_features = x.first().map_or(0, Vec::len);
    if n_features == 0 {
        return Err(ForestError::Invalid("no features".into()));
    }
    let k = cfg.subset_size(n_features);
    let opts = GrowOptions {
        subset_size: k,
        sampling: cfg.feature_sampling,
        max_depth: cfg.max_depth,
    };
    let grown: Vec<(DecisionTree, Vec<usize>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(cfg.seed, axis, t));
            let bag: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let features = draw_features(&mut rng, n_features, k);
            let tree = tree_generate(x, y, &bag, n_classes, &features, &opts, &mut rng);
            (tree, bag)
        })
        .collect();
    let (trees, bags) = grown.into_iter().unzip();
    Ok((trees, bags, k))
}

fn sorted_axis_labels(db: &FingerprintBase, axis: usize) -> Vec<f64> {
    let mut v: Vec<f64> = db.coordinate.iter().map(|c| c[axis]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    v
}

fn class_of(labels: &[f64], value: f64) -> usize {
    let i = labels.partition_point(|&l| l < value - 1e-9);
    i.min(labels.len() - 1)
}

fn check_db(db: &FingerprintBase) -> Result<(), ForestError> {
    db.validate()?;
    if db.n_rps() < 2 {
        return Err(ForestError::Degenerate(format!(
            "database has {} reference point(s); need at least 2",
            db.n_rps()
        )));
    }
    Ok(())
}

/// Trains a per-axis model and returns its bootstrap bags.
pub fn train_axis(
    db: &FingerprintBase,
    axis: Axis,
    cfg: &TrainConfig,
) -> Result<(AxisModel, Bags), ForestError> {
    check_db(db)?;
    let col = match axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Joint => {
            return Err(ForestError::Invalid(
                "use train_joint for joint models".into(),
            ))
        }
    };
    let labels = sorted_axis_labels(db, col);
    let y: Vec<usize> = db
        .coordinate
        .iter()
        .map(|c| class_of(&labels, c[col]))
        .collect();
    let (trees, bags, k) = fit(&db.fingerprint, &y, labels.len(), axis, cfg)?;
    Ok((
        ForestModel {
            axis,
            trees,
            label_set: labels,
            train_seed: cfg.seed,
            feature_subset_size: k,
            n_features: db.n_features(),
        },
        bags,
    ))
}

/// WRF training: one forest on the x labels and one on the y labels.
pub fn train(db: &FingerprintBase, cfg: &TrainConfig) -> Result<WrfModel, ForestError> {
    Ok(WrfModel {
        m_x: train_axis(db, Axis::X, cfg)?.0,
        m_y: train_axis(db, Axis::Y, cfg)?.0,
    })
}

/// Single forest over reference-point identities.
pub fn train_joint(db: &FingerprintBase, cfg: &TrainConfig) -> Result<JointModel, ForestError> {
    check_db(db)?;
    let mut order: Vec<usize> = (0..db.n_rps()).collect();
    let key = |i: usize| db.coordinate[i];
    order.sort_by(|&a, &b| {
        key(a)[0]
            .total_cmp(&key(b)[0])
            .then(key(a)[1].total_cmp(&key(b)[1]))
    });
    let mut y = vec![0; db.n_rps()];
    for (class, &row) in order.iter().enumerate() {
        y[row] = class;
    }
    let labels = order.iter().map(|&i| db.coordinate[i]).collect::<Vec<_>>();
    let (trees, _, k) = fit(&db.fingerprint, &y, labels.len(), Axis::Joint, cfg)?;
    Ok(ForestModel {
        axis: Axis::Joint,
        trees,
        label_set: labels,
        train_seed: cfg.seed,
        feature_subset_size: k,
        n_features: db.n_features(),
    })
}

/// Out-of-bag accuracy of a per-axis model, alongside the uniform-guess
/// baseline `1 / n_classes`. Samples that every tree saw are skipped.
pub fn oob_accuracy(
    db: &FingerprintBase,
    model: &AxisModel,
    bags: &Bags,
) -> Result<(f64, f64), ForestError> {
    let col = match model.axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Joint => {
            return Err(ForestError::Invalid(
                "joint models are not supported".into(),
            ))
        }
    };
    let n_classes = model.label_set.len();
    let mut correct = 0usize;
    let mut evaluated = 0usize;
    let mut in_bag = vec![false; db.n_rps()];
    for (i, row) in db.fingerprint.iter().enumerate() {
        let mut votes = vec![0usize; n_classes];
        let mut any = false;
        for (tree, bag) in model.trees.iter().zip(bags) {
            in_bag.iter_mut().for_each(|b| *b = false);
            bag.iter().for_each(|&s| in_bag[s] = true);
            if !in_bag[i] {
                votes[tree.predict(row)] += 1;
                any = true;
            }
        }
        if !any {
            continue;
        }
        evaluated += 1;
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        if best == class_of(&model.label_set, db.coordinate[i][col]) {
            correct += 1;
        }
    }
    if evaluated == 0 {
        return Err(ForestError::Degenerate("no out-of-bag samples".into()));
    }
    Ok((correct as f64 / evaluated as f64, 1.0 / n_classes as f64))
}

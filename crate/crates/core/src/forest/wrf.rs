use serde::{Deserialize, Serialize};

use super::model::{ForestModel, JointModel, WrfModel};
use super::ForestError;

/// A class label with its vote share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate<L> {
    pub value: L,
    /// Fraction of trees voting for this class.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    pub candidates_x: Vec<ScoredCandidate<f64>>,
    pub candidates_y: Vec<ScoredCandidate<f64>>,
}

impl PositionEstimate {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

fn check_query<L>(model: &ForestModel<L>, features: &[f64]) -> Result<(), ForestError> {
    if features.len() != model.n_features {
        return Err(ForestError::Schema(format!(
            "query has {} features, model expects {}",
            features.len(),
            model.n_features
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(ForestError::Invalid(
            "query contains non-finite features".into(),
        ));
    }
    Ok(())
}

/// Per-class vote counts over all trees.
pub fn votes<L>(model: &ForestModel<L>, features: &[f64]) -> Result<Vec<usize>, ForestError> {
    check_query(model, features)?;
    let mut v = vec![0usize; model.label_set.len()];
    for tree in &model.trees {
        let c = tree.predict(features);
        let slot = v.get_mut(c).ok_or_else(|| {
            ForestError::Internal(format!("tree predicted class {c} out of range"))
        })?;
        *slot += 1;
    }
    Ok(v)
}

/// The `k` classes with the highest vote share, best first. Ties go to the
/// smaller class index, so zero-vote classes fill in from the lowest label.
pub fn predict_scores<L: Copy>(
    model: &ForestModel<L>,
    features: &[f64],
    k: usize,
) -> Result<Vec<ScoredCandidate<L>>, ForestError> {
    if k == 0 || k > model.label_set.len() {
        return Err(ForestError::Invalid(format!(
            "k = {k} must lie in 1..={}",
            model.label_set.len()
        )));
    }
    let v = votes(model, features)?;
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].cmp(&v[a]).then(a.cmp(&b)));
    let n_trees = model.trees.len() as f64;
    Ok(order
        .into_iter()
        .take(k)
        .map(|c| ScoredCandidate {
            value: model.label_set[c],
            score: v[c] as f64 / n_trees,
        })
        .collect())
}

/// Score-weighted mean of the candidate values.
pub fn weighted_mean(candidates: &[ScoredCandidate<f64>]) -> Result<f64, ForestError> {
    let total: f64 = candidates.iter().map(|c| c.score).sum();
    if !(total > 0.0) {
        return Err(ForestError::Degenerate(
            "candidate scores sum to zero".into(),
        ));
    }
    Ok(candidates.iter().map(|c| c.score / total * c.value).sum())
}

/// Coordinate-separated estimate: each axis is the score-weighted mean of
/// its top-`k` labels.
pub fn estimate_position(
    model: &WrfModel,
    features: &[f64],
    k: usize,
) -> Result<PositionEstimate, ForestError> {
    let candidates_x = predict_scores(&model.m_x, features, k)?;
    let candidates_y = predict_scores(&model.m_y, features, k)?;
    Ok(PositionEstimate {
        x: weighted_mean(&candidates_x)?,
        y: weighted_mean(&candidates_y)?,
        candidates_x,
        candidates_y,
    })
}

/// Score-weighted mean of the top-`k` reference points of a joint model.
/// The candidate lists carry each RP's x and y with its score.
pub fn estimate_joint(
    model: &JointModel,
    features: &[f64],
    k: usize,
) -> Result<PositionEstimate, ForestError> {
    let c = predict_scores(model, features, k)?;
    let project = |axis: usize| -> Vec<ScoredCandidate<f64>> {
        c.iter()
            .map(|s| ScoredCandidate {
                value: s.value[axis],
                score: s.score,
            })
            .collect()
    };
    let (candidates_x, candidates_y) = (project(0), project(1));
    Ok(PositionEstimate {
        x: weighted_mean(&candidates_x)?,
        y: weighted_mean(&candidates_y)?,
        candidates_x,
        candidates_y,
    })
}

//! Gradient-boosted decision trees with second-order split gain, supporting
//! binary classification (logistic loss) and regression (squared loss).
//! Exact greedy splits, deterministic for a fixed seed.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::{Error, Result};

/// Prior clamp for the logistic base score, keeping log-odds finite on
/// one-class data.
const PRIOR_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Logistic,
    SquaredError,
}

/// Training controls. Defaults follow common library settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 regularizer on leaf weights.
    pub lambda: f64,
    /// Minimum gain required to keep a split.
    pub gamma: f64,
    /// Minimum hessian sum on each side of a split.
    pub min_child_weight: f64,
    /// Row fraction sampled per tree.
    pub subsample: f64,
    pub seed: u64,
    pub objective: Objective,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            seed: 0,
            objective: Objective::Logistic,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::InvalidInput(String::from("n_rounds must be >= 1")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidInput(String::from(
                "learning_rate must be in (0, 1]",
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidInput(String::from("max_depth must be >= 1")));
        }
        if self.lambda < 0.0 || self.gamma < 0.0 || self.min_child_weight < 0.0 {
            return Err(Error::InvalidInput(String::from(
                "lambda, gamma and min_child_weight must be >= 0",
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::InvalidInput(String::from(
                "subsample must be in (0, 1]",
            )));
        }
        Ok(())
    }
}

/// A tree node; children point into the owning tree's node vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Hessian sum of the training rows routed through this node.
        cover: f64,
    },
    Leaf {
        weight: f64,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }
}

/// One regression tree stored as a flat node vector, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Route a row to its leaf weight. Left branch takes values strictly
    /// below the threshold.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { weight, .. } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// A fitted boosted ensemble. Predictions add `base_score` (margin space)
/// to the summed leaf weights of every tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub base_score: f64,
    pub objective: Objective,
    pub feature_names: Vec<String>,
}

impl TreeEnsemble {
    fn check_row(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} features, ensemble expects {}",
                x.len(),
                self.feature_names.len()
            )));
        }
        Ok(())
    }

    pub fn predict_margin(&self, x: &[f64]) -> Result<f64> {
        self.check_row(x)?;
        let mut m = self.base_score;
        for tree in &self.trees {
            m += tree.predict_row(x);
        }
        Ok(m)
    }

    /// Sigmoid of the margin; logistic models only.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if self.objective != Objective::Logistic {
            return Err(Error::InvalidInput(String::from(
                "probabilities are only defined for the logistic objective",
            )));
        }
        Ok(sigmoid(self.predict_margin(x)?))
    }

    /// Thresholded class for logistic models: proba > 0.5.
    pub fn predict_class(&self, x: &[f64]) -> Result<bool> {
        Ok(self.predict_proba(x)? > 0.5)
    }

    /// Regression prediction (the raw margin).
    pub fn predict_value(&self, x: &[f64]) -> Result<f64> {
        self.predict_margin(x)
    }
}

pub fn sigmoid(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

/// Second-order gain of a split, already net of `gamma`.
pub fn split_gain(g_l: f64, h_l: f64, g_r: f64, h_r: f64, lambda: f64, gamma: f64) -> f64 {
    let part = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (part(g_l, h_l) + part(g_r, h_r) - part(g_l + g_r, h_l + h_r)) - gamma
}

/// Optimal leaf weight for accumulated gradient statistics, shrunk by the
/// learning rate.
pub fn leaf_weight(g: f64, h: f64, lambda: f64, learning_rate: f64) -> f64 {
    -learning_rate * g / (h + lambda)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Exact greedy scan over the node's rows. Ties on gain resolve to the
/// lowest feature index, then the lowest threshold, by visiting candidates
/// in that order and only accepting strict improvements.
fn best_split(
    x: &FeatureMatrix,
    rows: &[usize],
    g: &[f64],
    h: &[f64],
    params: &BoostParams,
) -> Option<BestSplit> {
    let g_total: f64 = rows.iter().map(|&r| g[r]).sum();
    let h_total: f64 = rows.iter().map(|&r| h[r]).sum();
    let mut best: Option<BestSplit> = None;

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for feature in 0..x.n_cols() {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (x.row(r)[feature], r)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut g_left = 0.0;
        let mut h_left = 0.0;
        for w in 0..sorted.len() - 1 {
            let (value, row) = sorted[w];
            g_left += g[row];
            h_left += h[row];
            let next = sorted[w + 1].0;
            if next <= value {
                continue;
            }
            let threshold = 0.5 * (value + next);
            // midpoint can collapse onto the lower value for adjacent floats
            if threshold <= value {
                continue;
            }
            let h_right = h_total - h_left;
            if h_left < params.min_child_weight || h_right < params.min_child_weight {
                continue;
            }
            let gain = split_gain(
                g_left,
                h_left,
                g_total - g_left,
                h_right,
                params.lambda,
                params.gamma,
            );
            if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

fn build_tree(
    x: &FeatureMatrix,
    rows: Vec<usize>,
    g: &[f64],
    h: &[f64],
    params: &BoostParams,
) -> Tree {
    let mut nodes: Vec<Node> = vec![Node::Leaf {
        weight: 0.0,
        cover: 0.0,
    }];
    let mut queue: VecDeque<(usize, Vec<usize>, usize)> = VecDeque::new();
    queue.push_back((0, rows, 0));

    while let Some((slot, rows, depth)) = queue.pop_front() {
        let g_sum: f64 = rows.iter().map(|&r| g[r]).sum();
        let cover: f64 = rows.iter().map(|&r| h[r]).sum();
        let split = if depth < params.max_depth {
            best_split(x, &rows, g, h, params)
        } else {
            None
        };
        match split {
            Some(s) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&r| x.row(r)[s.feature] < s.threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf {
                    weight: 0.0,
                    cover: 0.0,
                });
                let right = nodes.len();
                nodes.push(Node::Leaf {
                    weight: 0.0,
                    cover: 0.0,
                });
                nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                    cover,
                };
                queue.push_back((left, left_rows, depth + 1));
                queue.push_back((right, right_rows, depth + 1));
            }
            None => {
                nodes[slot] = Node::Leaf {
                    weight: leaf_weight(g_sum, cover, params.lambda, params.learning_rate),
                    cover,
                };
            }
        }
    }
    Tree { nodes }
}

/// Fit a boosted ensemble. Each round computes per-row gradients and
/// hessians at the current margin, optionally subsamples rows, grows one
/// tree level by level, and folds its predictions back into the margins.
pub fn fit(x: &FeatureMatrix, y: &[f64], params: &BoostParams) -> Result<TreeEnsemble> {
    params.validate()?;
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} rows",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidData(String::from(
            "training needs at least 2 rows",
        )));
    }
    if params.objective == Objective::Logistic
        && y.iter().any(|&v| v != 0.0 && v != 1.0)
    {
        return Err(Error::InvalidData(String::from(
            "logistic training labels must be 0 or 1",
        )));
    }

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let base_score = match params.objective {
        Objective::Logistic => {
            let p = mean_y.clamp(PRIOR_EPS, 1.0 - PRIOR_EPS);
            (p / (1.0 - p)).ln()
        }
        Objective::SquaredError => mean_y,
    };

    let mut margins = vec![base_score; n];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trees = Vec::with_capacity(params.n_rounds);

    for _ in 0..params.n_rounds {
        for i in 0..n {
            match params.objective {
                Objective::Logistic => {
                    let p = sigmoid(margins[i]);
                    g[i] = p - y[i];
                    h[i] = p * (1.0 - p);
                }
                Objective::SquaredError => {
                    g[i] = margins[i] - y[i];
                    h[i] = 1.0;
                }
            }
        }

        let rows: Vec<usize> = if params.subsample < 1.0 {
            let m = ((n as f64 * params.subsample) as usize).max(1);
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..m {
                let j = rng.gen_range(i..n);
                idx.swap(i, j);
            }
            idx.truncate(m);
            idx
        } else {
            (0..n).collect()
        };

        let tree = build_tree(x, rows, &g, &h, params);
        for i in 0..n {
            margins[i] += tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }

    Ok(TreeEnsemble {
        trees,
        base_score,
        objective: params.objective,
        feature_names: x.names().to_vec(),
    })
}

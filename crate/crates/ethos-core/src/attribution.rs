//! Exact feature attribution for tree ensembles: path-dependent TreeSHAP
//! with cover-fraction weighting, a brute-force Shapley oracle for small
//! feature counts, and global importance summaries.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::boosting::{Node, Tree, TreeEnsemble};
use crate::dataset::FeatureMatrix;
use crate::linalg::Matrix;
use crate::stats;
use crate::{Error, Result};

/// Per-row attribution in margin space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapAttribution {
    /// Credit per feature, aligned with the ensemble's feature order.
    pub phi: Vec<f64>,
    /// Cover-weighted expected margin of the ensemble.
    pub base_value: f64,
    /// The row's actual margin; equals base_value + sum(phi).
    pub prediction: f64,
}

#[derive(Clone)]
struct PathItem {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

fn extend_path(path: &mut Vec<PathItem>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathItem {
        feature,
        zero_fraction,
        one_fraction,
        pweight: if depth == 0 { 1.0 } else { 0.0 },
    });
    for i in (0..depth).rev() {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) as f64 / (depth + 1) as f64;
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) as f64 / (depth + 1) as f64;
    }
}

fn unwind_path(path: &mut Vec<PathItem>, path_index: usize) {
    let depth = path.len() - 1;
    let one_fraction = path[path_index].one_fraction;
    let zero_fraction = path[path_index].zero_fraction;
    let mut next_one_portion = path[depth].pweight;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight =
                next_one_portion * (depth + 1) as f64 / ((i + 1) as f64 * one_fraction);
            next_one_portion =
                tmp - path[i].pweight * zero_fraction * (depth - i) as f64 / (depth + 1) as f64;
        } else {
            path[i].pweight =
                path[i].pweight * (depth + 1) as f64 / (zero_fraction * (depth - i) as f64);
        }
    }
    for i in path_index..depth {
        let moved = path[i + 1].clone();
        let kept_weight = path[i].pweight;
        path[i] = PathItem {
            pweight: kept_weight,
            ..moved
        };
    }
    path.pop();
}

fn unwound_path_sum(path: &[PathItem], path_index: usize) -> f64 {
    let depth = path.len() - 1;
    let one_fraction = path[path_index].one_fraction;
    let zero_fraction = path[path_index].zero_fraction;
    let mut next_one_portion = path[depth].pweight;
    let mut total = 0.0;
    if one_fraction != 0.0 {
        for i in (0..depth).rev() {
            let tmp = next_one_portion / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i) as f64;
        }
    } else {
        for i in (0..depth).rev() {
            total += path[i].pweight / (zero_fraction * (depth - i) as f64);
        }
    }
    total * (depth + 1) as f64
}

fn shap_recurse(
    tree: &Tree,
    node: usize,
    x: &[f64],
    phi: &mut [f64],
    mut path: Vec<PathItem>,
    parent_zero: f64,
    parent_one: f64,
    parent_feature: Option<usize>,
) -> Result<()> {
    extend_path(&mut path, parent_zero, parent_one, parent_feature);
    match &tree.nodes[node] {
        Node::Leaf { weight, .. } => {
            for i in 1..path.len() {
                let w = unwound_path_sum(&path, i);
                let el = &path[i];
                phi[el.feature.expect("interior path items carry a feature")] +=
                    w * (el.one_fraction - el.zero_fraction) * weight;
            }
            Ok(())
        }
        Node::Split {
            feature,
            threshold,
            left,
            right,
            cover,
        } => {
            if *cover <= 0.0 {
                return Err(Error::InvalidData(String::from(
                    "zero cover at an internal node",
                )));
            }
            let (hot, cold) = if x[*feature] < *threshold {
                (*left, *right)
            } else {
                (*right, *left)
            };
            let hot_zero = tree.nodes[hot].cover() / cover;
            let cold_zero = tree.nodes[cold].cover() / cover;
            let mut incoming_zero = 1.0;
            let mut incoming_one = 1.0;
            // a repeated feature on the path is unwound and re-split here
            if let Some(k) = path.iter().position(|p| p.feature == Some(*feature)) {
                incoming_zero = path[k].zero_fraction;
                incoming_one = path[k].one_fraction;
                unwind_path(&mut path, k);
            }
            shap_recurse(
                tree,
                hot,
                x,
                phi,
                path.clone(),
                hot_zero * incoming_zero,
                incoming_one,
                Some(*feature),
            )?;
            shap_recurse(
                tree,
                cold,
                x,
                phi,
                path,
                cold_zero * incoming_zero,
                0.0,
                Some(*feature),
            )
        }
    }
}

/// Cover-weighted expected leaf value of one tree.
fn expected_value(tree: &Tree, node: usize) -> f64 {
    match &tree.nodes[node] {
        Node::Leaf { weight, .. } => *weight,
        Node::Split {
            left, right, cover, ..
        } => {
            let l = &tree.nodes[*left];
            let r = &tree.nodes[*right];
            (l.cover() * expected_value(tree, *left) + r.cover() * expected_value(tree, *right))
                / cover
        }
    }
}

/// Path-dependent TreeSHAP over the whole ensemble, in margin space.
pub fn tree_shap(e: &TreeEnsemble, x: &[f64]) -> Result<ShapAttribution> {
    let prediction = e.predict_margin(x)?;
    let mut phi = vec![0.0; x.len()];
    let mut base_value = e.base_score;
    for tree in &e.trees {
        shap_recurse(tree, 0, x, &mut phi, Vec::new(), 1.0, 1.0, None)?;
        base_value += expected_value(tree, 0);
    }
    Ok(ShapAttribution {
        phi,
        base_value,
        prediction,
    })
}

/// Margin of one tree with out-of-subset features marginalized by cover
/// fractions.
fn subset_value(tree: &Tree, node: usize, x: &[f64], mask: u32) -> f64 {
    match &tree.nodes[node] {
        Node::Leaf { weight, .. } => *weight,
        Node::Split {
            feature,
            threshold,
            left,
            right,
            cover,
        } => {
            if mask & (1 << feature) != 0 {
                let next = if x[*feature] < *threshold { *left } else { *right };
                subset_value(tree, next, x, mask)
            } else {
                let l = &tree.nodes[*left];
                let r = &tree.nodes[*right];
                (l.cover() * subset_value(tree, *left, x, mask)
                    + r.cover() * subset_value(tree, *right, x, mask))
                    / cover
            }
        }
    }
}

/// Exact Shapley values by enumerating every feature subset. Test oracle
/// only; capped at 15 features.
pub fn brute_force_shap(e: &TreeEnsemble, x: &[f64]) -> Result<Vec<f64>> {
    let m = x.len();
    if m != e.feature_names.len() {
        return Err(Error::DimensionMismatch(format!(
            "row has {m} features, ensemble expects {}",
            e.feature_names.len()
        )));
    }
    if m > 15 {
        return Err(Error::InvalidInput(format!(
            "brute force enumeration capped at 15 features, got {m}"
        )));
    }

    let n_masks: u32 = 1 << m;
    let mut value = vec![0.0; n_masks as usize];
    for mask in 0..n_masks {
        let mut v = e.base_score;
        for tree in &e.trees {
            v += subset_value(tree, 0, x, mask);
        }
        value[mask as usize] = v;
    }

    let mut factorial = vec![1.0; m + 1];
    for i in 1..=m {
        factorial[i] = factorial[i - 1] * i as f64;
    }

    let mut phi = vec![0.0; m];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1u32 << i;
        for mask in 0..n_masks {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = factorial[s] * factorial[m - s - 1] / factorial[m];
            *phi_i += weight * (value[(mask | bit) as usize] - value[mask as usize]);
        }
    }
    Ok(phi)
}

/// One feature's global summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean |phi| over the rows.
    pub mean_abs_phi: f64,
    /// Pearson correlation of (feature value, phi); absent when either side
    /// is constant.
    pub direction: Option<f64>,
}

/// Dataset-level attribution summary plus the per-row material the
/// beeswarm export draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    /// Sorted by mean |phi| descending, ties by feature name.
    pub features: Vec<FeatureImportance>,
    pub row_ids: Vec<String>,
    /// Feature order of the two matrices below (the ensemble's order).
    pub feature_names: Vec<String>,
    pub values: Matrix,
    pub phi: Matrix,
}

/// Mean |phi| per feature over all rows, with per-row detail retained.
pub fn global_importance(e: &TreeEnsemble, x: &FeatureMatrix) -> Result<GlobalImportance> {
    if x.n_rows() == 0 {
        return Err(Error::InvalidData(String::from("empty feature matrix")));
    }
    if x.names() != e.feature_names.as_slice() {
        return Err(Error::InvalidInput(String::from(
            "feature matrix columns do not match the ensemble",
        )));
    }
    let n = x.n_rows();
    let p = x.n_cols();
    let mut phi = Matrix::zeros(n, p);
    for i in 0..n {
        let attribution = tree_shap(e, x.row(i))?;
        for j in 0..p {
            phi[(i, j)] = attribution.phi[j];
        }
    }

    let mut features: Vec<FeatureImportance> = (0..p)
        .map(|j| {
            let phis = phi.column(j);
            let mean_abs = phis.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            let direction = stats::pearson(&x.column(j), &phis).ok();
            FeatureImportance {
                feature: x.names()[j].clone(),
                mean_abs_phi: mean_abs,
                direction,
            }
        })
        .collect();
    features.sort_by(|a, b| {
        b.mean_abs_phi
            .total_cmp(&a.mean_abs_phi)
            .then_with(|| a.feature.cmp(&b.feature))
    });

    Ok(GlobalImportance {
        features,
        row_ids: x.row_ids().to_vec(),
        feature_names: x.names().to_vec(),
        values: x.matrix().clone(),
        phi,
    })
}

/// One beeswarm point: a row's value (as a within-feature percentile) and
/// its phi for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmRecord {
    pub feature: String,
    pub row_id: String,
    pub value: f64,
    /// Mid-rank percentile of `value` within its feature, in (0, 1).
    pub value_percentile: f64,
    pub phi: f64,
}

/// Plot-ready beeswarm records for the `top_k` most important features,
/// in importance order.
pub fn beeswarm_export(g: &GlobalImportance, top_k: usize) -> Result<Vec<BeeswarmRecord>> {
    if top_k == 0 {
        return Err(Error::InvalidInput(String::from("top_k must be >= 1")));
    }
    let n = g.row_ids.len();
    let mut records = Vec::new();
    for fi in g.features.iter().take(top_k) {
        let j = g
            .feature_names
            .iter()
            .position(|name| name == &fi.feature)
            .expect("summary features come from feature_names");
        let col = g.values.column(j);
        let ranks = stats::mid_ranks(&col);
        for i in 0..n {
            records.push(BeeswarmRecord {
                feature: fi.feature.clone(),
                row_id: g.row_ids[i].clone(),
                value: col[i],
                value_percentile: (ranks[i] - 0.5) / n as f64,
                phi: g.phi[(i, j)],
            });
        }
    }
    Ok(records)
}

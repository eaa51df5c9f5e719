//! Preference-space embedding: genre vectors from the factor pattern, user
//! centroids, the generalist/specialist (GS) score, and rank-correlation
//! reports across survey variable groups.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Foundation, Gender, PoliticalParty, Respondent};
use crate::factors::FactorModel;
use crate::linalg::Matrix;
use crate::stats;
use crate::{Error, Result};

/// Norm below which a genre vector is treated as zero and excluded.
const ZERO_NORM: f64 = 1e-12;

/// Genre embeddings: one k-dimensional vector per genre, taken from the
/// rows of a factor pattern matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSpace {
    genres: Vec<String>,
    vectors: Matrix,
}

impl PreferenceSpace {
    pub fn new(genres: Vec<String>, vectors: Matrix) -> Result<Self> {
        if genres.len() != vectors.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} genre names for {} vectors",
                genres.len(),
                vectors.rows()
            )));
        }
        Ok(PreferenceSpace { genres, vectors })
    }

    /// Embed genres with the pattern rows of a fitted factor model.
    pub fn from_model(m: &FactorModel) -> Self {
        PreferenceSpace {
            genres: m.variables.clone(),
            vectors: m.pattern.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn genres(&self) -> &[String] {
        &self.genres
    }

    pub fn vector(&self, genre: &str) -> Option<&[f64]> {
        self.genres
            .iter()
            .position(|g| g == genre)
            .map(|i| self.vectors.row(i))
    }
}

/// How the GS weights are read off the survey ratings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightMode {
    /// w_j = the 1-5 rating of genre j (preference-weighted); the default.
    #[default]
    Rating,
    /// w_j = 1 for every rated genre (count-weighted).
    Presence,
}

/// Weights for one respondent under the chosen mode; unrated genres are
/// absent.
pub fn respondent_weights(r: &Respondent, mode: WeightMode) -> BTreeMap<String, f64> {
    r.genre_ratings
        .iter()
        .map(|(g, &v)| {
            let w = match mode {
                WeightMode::Rating => v as f64,
                WeightMode::Presence => 1.0,
            };
            (g.clone(), w)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Resolve weights against the space, dropping zero-norm vectors and
/// checking that something positive remains.
fn weighted_vectors<'a>(
    weights: &BTreeMap<String, f64>,
    space: &'a PreferenceSpace,
) -> Result<Vec<(f64, &'a [f64])>> {
    let mut kept = Vec::new();
    for (genre, &w) in weights {
        if w < 0.0 {
            return Err(Error::InvalidInput(format!(
                "negative weight {w} for genre {genre:?}"
            )));
        }
        if w == 0.0 {
            continue;
        }
        let v = space
            .vector(genre)
            .ok_or_else(|| Error::NotFound(format!("no vector for genre {genre:?}")))?;
        if norm(v) < ZERO_NORM {
            // all-zero loadings row carries no direction; leave it out
            continue;
        }
        kept.push((w, v));
    }
    if kept.is_empty() {
        return Err(Error::Unscorable(String::from(
            "no positively weighted genre with a nonzero vector",
        )));
    }
    Ok(kept)
}

/// Weighted mean of the rated genres' vectors.
pub fn user_centroid(
    weights: &BTreeMap<String, f64>,
    space: &PreferenceSpace,
) -> Result<Vec<f64>> {
    let kept = weighted_vectors(weights, space)?;
    let total: f64 = kept.iter().map(|(w, _)| w).sum();
    let mut ct = alloc::vec![0.0; space.dim()];
    for (w, v) in &kept {
        for (c, x) in ct.iter_mut().zip(*v) {
            *c += w * x;
        }
    }
    for c in &mut ct {
        *c /= total;
    }
    Ok(ct)
}

/// Generalist/specialist score: the weighted mean cosine between each rated
/// genre's vector and the user centroid. Not clipped; negative loadings can
/// push individual cosines negative.
pub fn gs_score(weights: &BTreeMap<String, f64>, space: &PreferenceSpace) -> Result<f64> {
    let kept = weighted_vectors(weights, space)?;
    let ct = user_centroid(weights, space)?;
    let ct_norm = norm(&ct);
    if ct_norm < ZERO_NORM {
        return Err(Error::Unscorable(String::from(
            "user centroid has zero norm; cosine undefined",
        )));
    }
    let total: f64 = kept.iter().map(|(w, _)| w).sum();
    let mut acc = 0.0;
    for (w, v) in &kept {
        acc += w * dot(v, &ct) / (norm(v) * ct_norm);
    }
    Ok(acc / total)
}

/// One respondent's place in the preference space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPreferenceProfile {
    pub weights: BTreeMap<String, f64>,
    pub centroid: Vec<f64>,
    pub gs: f64,
}

/// Centroid and GS score for one respondent.
pub fn profile(
    r: &Respondent,
    space: &PreferenceSpace,
    mode: WeightMode,
) -> Result<UserPreferenceProfile> {
    let weights = respondent_weights(r, mode);
    let centroid = user_centroid(&weights, space)?;
    let gs = gs_score(&weights, space)?;
    Ok(UserPreferenceProfile {
        weights,
        centroid,
        gs,
    })
}

/// GS score per respondent in dataset order. Fails on the first respondent
/// who cannot be scored, naming them.
pub fn gs_scores(d: &Dataset, space: &PreferenceSpace, mode: WeightMode) -> Result<Vec<f64>> {
    d.respondents
        .iter()
        .map(|r| {
            gs_score(&respondent_weights(r, mode), space).map_err(|e| match e {
                Error::Unscorable(msg) => {
                    Error::Unscorable(format!("respondent {}: {msg}", r.id))
                }
                other => other,
            })
        })
        .collect()
}

pub use crate::stats::spearman;

/// Survey variable groups selectable for the correlation report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableGroup {
    /// 13 genre ratings; unrated entries are missing, handled pairwise.
    Genres,
    /// Age, education (ordinal) plus gender and party indicators.
    Demographics,
    /// The five foundation scores.
    MoralFoundations,
    /// Individualizing and binding composites.
    SuperiorFoundations,
    /// Externally supplied GS column.
    GsScore,
}

/// One pairwise correlation. `rho` is absent when the pairwise-complete
/// subset is too small or a side is constant on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub var_a: String,
    pub var_b: String,
    pub rho: Option<f64>,
    pub n: usize,
}

fn report_columns(
    d: &Dataset,
    groups: &[VariableGroup],
    gs: Option<&[f64]>,
) -> Result<Vec<(String, Vec<Option<f64>>)>> {
    let mut cols: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for group in groups {
        match group {
            VariableGroup::Genres => {
                for genre in crate::dataset::GENRES {
                    cols.push((
                        genre.to_string(),
                        d.respondents
                            .iter()
                            .map(|r| r.rating(genre).map(f64::from))
                            .collect(),
                    ));
                }
            }
            VariableGroup::Demographics => {
                cols.push((
                    String::from("age"),
                    d.respondents
                        .iter()
                        .map(|r| Some(r.age.ordinal() as f64))
                        .collect(),
                ));
                cols.push((
                    String::from("education"),
                    d.respondents
                        .iter()
                        .map(|r| Some(r.education.ordinal() as f64))
                        .collect(),
                ));
                for g in Gender::ALL {
                    cols.push((
                        format!("gender_{}", g.label().to_lowercase()),
                        d.respondents
                            .iter()
                            .map(|r| Some(if r.gender == *g { 1.0 } else { 0.0 }))
                            .collect(),
                    ));
                }
                for p in PoliticalParty::ALL {
                    cols.push((
                        format!("party_{}", p.slug()),
                        d.respondents
                            .iter()
                            .map(|r| Some(if r.party == *p { 1.0 } else { 0.0 }))
                            .collect(),
                    ));
                }
            }
            VariableGroup::MoralFoundations => {
                for f in Foundation::ALL {
                    cols.push((
                        f.name().to_string(),
                        d.respondents
                            .iter()
                            .map(|r| Some(r.moral_scores.get(f)))
                            .collect(),
                    ));
                }
            }
            VariableGroup::SuperiorFoundations => {
                for (name, pick) in [
                    ("individualizing", 0usize),
                    ("binding", 1usize),
                ] {
                    cols.push((
                        String::from(name),
                        d.respondents
                            .iter()
                            .map(|r| {
                                let (ind, bind) =
                                    crate::dataset::derive_superior_foundations(&r.moral_scores);
                                Some(if pick == 0 { ind } else { bind })
                            })
                            .collect(),
                    ));
                }
            }
            VariableGroup::GsScore => {
                let gs = gs.ok_or_else(|| {
                    Error::InvalidInput(String::from(
                        "GS group selected but no GS column supplied",
                    ))
                })?;
                if gs.len() != d.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} GS values for {} respondents",
                        gs.len(),
                        d.len()
                    )));
                }
                cols.push((
                    String::from("gs_score"),
                    gs.iter().map(|&v| Some(v)).collect(),
                ));
            }
        }
    }
    Ok(cols)
}

/// All pairwise Spearman correlations across the selected variable groups,
/// computed on pairwise-complete rows, in a stable order.
pub fn correlation_report(
    d: &Dataset,
    groups: &[VariableGroup],
    gs: Option<&[f64]>,
) -> Result<Vec<CorrelationRow>> {
    if groups.is_empty() {
        return Err(Error::InvalidInput(String::from(
            "empty variable group selection",
        )));
    }
    if d.is_empty() {
        return Err(Error::InvalidData(String::from("empty dataset")));
    }
    let cols = report_columns(d, groups, gs)?;
    let mut rows = Vec::new();
    for i in 0..cols.len() {
        for j in i..cols.len() {
            let (ref name_a, ref col_a) = cols[i];
            let (ref name_b, ref col_b) = cols[j];
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (a, b) in col_a.iter().zip(col_b) {
                if let (Some(a), Some(b)) = (a, b) {
                    xs.push(*a);
                    ys.push(*b);
                }
            }
            let rho = stats::spearman(&xs, &ys).ok();
            rows.push(CorrelationRow {
                var_a: name_a.clone(),
                var_b: name_b.clone(),
                rho,
                n: xs.len(),
            });
        }
    }
    Ok(rows)
}

//! Synthetic survey generator with planted ground truth, plus the recovery
//! diagnostics (factor congruence, dominant groupings) used to validate the
//! pipeline end to end.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    AgeBracket, Dataset, Education, Foundation, Gender, MoralScores, PoliticalParty, Provenance,
    Respondent, GENRES,
};
use crate::linalg::{self, Matrix};
use crate::prefspace::{self, PreferenceSpace};
use crate::{Error, Result};

/// Linear generator for one foundation score. Weights apply to centered
/// inputs: ratings minus 3, demographic ordinals minus 3.5, and the
/// respondent's GS score on the planted preference space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundationModel {
    /// One weight per genre, in canonical genre order.
    pub genre_weights: Vec<f64>,
    pub age_weight: f64,
    pub education_weight: f64,
    pub gs_weight: f64,
}

impl FoundationModel {
    pub fn zero() -> Self {
        FoundationModel {
            genre_weights: vec![0.0; GENRES.len()],
            age_weight: 0.0,
            education_weight: 0.0,
            gs_weight: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.genre_weights.len() != GENRES.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} genre weights for {} genres",
                self.genre_weights.len(),
                GENRES.len()
            )));
        }
        Ok(())
    }
}

/// Per-foundation generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoralModel {
    pub care: FoundationModel,
    pub fairness: FoundationModel,
    pub loyalty: FoundationModel,
    pub authority: FoundationModel,
    pub purity: FoundationModel,
}

impl MoralModel {
    pub fn get(&self, f: Foundation) -> &FoundationModel {
        match f {
            Foundation::Care => &self.care,
            Foundation::Fairness => &self.fairness,
            Foundation::Loyalty => &self.loyalty,
            Foundation::Authority => &self.authority,
            Foundation::Purity => &self.purity,
        }
    }
}

/// Everything the generator plants: the factor structure behind the genre
/// ratings and the linear models behind the moral scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// True pattern loadings, one row per genre.
    pub true_loadings: Matrix,
    /// True factor correlations; positive definite with unit diagonal.
    pub true_phi: Matrix,
    pub moral_coefficients: MoralModel,
    /// Sd of the unique noise added to each standardized rating.
    pub noise_sd: f64,
    /// Sd of the noise added to each raw foundation score.
    pub score_noise_sd: f64,
    pub seed: u64,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        let k = self.true_loadings.cols();
        if self.true_loadings.rows() != GENRES.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} loading rows for {} genres",
                self.true_loadings.rows(),
                GENRES.len()
            )));
        }
        if self.true_phi.rows() != k || self.true_phi.cols() != k {
            return Err(Error::DimensionMismatch(String::from(
                "factor correlation shape does not match the loadings",
            )));
        }
        for i in 0..k {
            if (self.true_phi[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidData(String::from(
                    "factor correlations need a unit diagonal",
                )));
            }
        }
        linalg::cholesky(&self.true_phi)
            .map_err(|_| Error::InvalidData(String::from("factor correlations are not positive definite")))?;
        if !(self.noise_sd >= 0.0) || !(self.score_noise_sd >= 0.0) {
            return Err(Error::InvalidData(String::from("noise sds must be >= 0")));
        }
        self.moral_coefficients.care.validate()?;
        self.moral_coefficients.fairness.validate()?;
        self.moral_coefficients.loyalty.validate()?;
        self.moral_coefficients.authority.validate()?;
        self.moral_coefficients.purity.validate()
    }
}

/// Category counts for the sampled demographics, in each enum's canonical
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marginals {
    pub age: [u64; 6],
    pub gender: [u64; 2],
    pub education: [u64; 6],
    pub party: [u64; 6],
}

impl Marginals {
    /// The published sample's demographic counts.
    pub fn survey() -> Self {
        Marginals {
            age: [80, 154, 205, 205, 187, 203],
            gender: [588, 474],
            education: [35, 195, 154, 115, 349, 205],
            party: [328, 279, 184, 66, 56, 149],
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, total) in [
            ("age", self.age.iter().sum::<u64>()),
            ("gender", self.gender.iter().sum::<u64>()),
            ("education", self.education.iter().sum::<u64>()),
            ("party", self.party.iter().sum::<u64>()),
        ] {
            if total == 0 {
                return Err(Error::InvalidData(format!("{name} counts sum to zero")));
            }
        }
        Ok(())
    }
}

/// The five planted genre groupings: [jazz, classical, latin],
/// [punk, heavy metal, rap/hip-hop], [pop, R&B], [country, christian, folk],
/// [rock, alternative pop/rock]. Indices are positions in canonical genre
/// order; the paired values are the primary loadings.
const PLANTED_GROUPS: [&[(usize, f64)]; 5] = [
    &[(7, 0.85), (2, 0.80), (8, 0.75)],
    &[(10, 0.85), (5, 0.80), (6, 0.75)],
    &[(9, 0.85), (11, 0.80)],
    &[(3, 0.80), (1, 0.85), (4, 0.75)],
    &[(12, 0.85), (0, 0.80)],
];

const CHRISTIAN: usize = 1;
const COUNTRY: usize = 3;
const FOLK: usize = 4;
const JAZZ: usize = 7;
const CLASSICAL: usize = 2;

/// The default ground truth: five oblique factors matching the published
/// genre clusters, christian listening dominating the binding foundations,
/// fairness left as a zero-coefficient control, and purity additionally
/// anti-monotone in the GS score.
pub fn survey_like(seed: u64) -> GroundTruth {
    let k = PLANTED_GROUPS.len();
    let mut loadings = Matrix::zeros(GENRES.len(), k);
    for (factor, group) in PLANTED_GROUPS.iter().enumerate() {
        for &(genre, loading) in *group {
            loadings[(genre, factor)] = loading;
        }
    }
    let mut phi = Matrix::identity(k);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                phi[(i, j)] = 0.25;
            }
        }
    }

    let mut care = FoundationModel::zero();
    care.genre_weights[JAZZ] = 0.5;
    care.genre_weights[CLASSICAL] = 0.4;
    care.age_weight = 0.2;

    let fairness = FoundationModel::zero();

    let mut loyalty = FoundationModel::zero();
    loyalty.genre_weights[CHRISTIAN] = 1.8;
    loyalty.genre_weights[COUNTRY] = 0.4;

    let mut authority = FoundationModel::zero();
    authority.genre_weights[CHRISTIAN] = 1.8;
    authority.genre_weights[FOLK] = 0.3;

    // GS concentrates tightly when every genre is rated (sd about 0.016),
    // so a visible anti-monotone effect needs a large weight.
    let mut purity = FoundationModel::zero();
    purity.genre_weights[CHRISTIAN] = 1.8;
    purity.gs_weight = -30.0;

    GroundTruth {
        true_loadings: loadings,
        true_phi: phi,
        moral_coefficients: MoralModel {
            care,
            fairness,
            loyalty,
            authority,
            purity,
        },
        noise_sd: 0.5,
        score_noise_sd: 1.0,
        seed,
    }
}

/// Standard normal draw via Box-Muller; consumes exactly two uniforms.
fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
}

/// Categorical draw proportional to counts.
fn sample_index(counts: &[u64], rng: &mut ChaCha8Rng) -> usize {
    let total: u64 = counts.iter().sum();
    let draw = rng.gen::<f64>() * total as f64;
    let mut acc = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        acc += c as f64;
        if draw < acc {
            return i;
        }
    }
    counts.len() - 1
}

fn round_half_even(x: f64) -> f64 {
    let f = x.floor();
    let diff = x - f;
    if diff > 0.5 {
        f + 1.0
    } else if diff < 0.5 {
        f
    } else if (f as i64) % 2 == 0 {
        f
    } else {
        f + 1.0
    }
}

/// Standardized latent rating to the 1-5 scale: center 3, spread 1.2, clip,
/// round half to even.
fn likert_discretize(z: f64) -> u8 {
    round_half_even((3.0 + 1.2 * z).clamp(1.0, 5.0)) as u8
}

/// Raw score column to the 0-30 scale: z-score the batch, center 15, spread
/// 5, clip. A constant column maps to 15 everywhere.
fn rescale_scores(raw: &[f64]) -> Vec<f64> {
    let mean = crate::stats::mean(raw);
    let sd = crate::stats::std_dev(raw);
    raw.iter()
        .map(|&v| {
            if sd < 1e-12 {
                15.0
            } else {
                (15.0 + 5.0 * (v - mean) / sd).clamp(0.0, 30.0)
            }
        })
        .collect()
}

/// Generate a synthetic survey of `n` respondents from the planted truth.
/// Ratings come from oblique factors plus unique noise, discretized to the
/// Likert scale; demographics are sampled from the marginals; foundation
/// scores are linear in the planted inputs plus noise, rescaled into 0-30.
/// The ground truth is echoed back for sidecar serialization.
pub fn generate(
    g: &GroundTruth,
    n: usize,
    marginals: &Marginals,
) -> Result<(Dataset, GroundTruth)> {
    g.validate()?;
    marginals.validate()?;
    if n < 50 {
        return Err(Error::InvalidInput(format!(
            "{n} respondents is below the minimum of 50"
        )));
    }

    let k = g.true_loadings.cols();
    let chol = linalg::cholesky(&g.true_phi)?;
    // Standardizing denominator per genre: common variance plus unique noise.
    let common = g
        .true_loadings
        .matmul(&g.true_phi)?
        .matmul(&g.true_loadings.transpose())?;
    let scale: Vec<f64> = (0..GENRES.len())
        .map(|j| (common[(j, j)] + g.noise_sd * g.noise_sd).sqrt().max(1e-12))
        .collect();

    let true_space = PreferenceSpace::new(
        GENRES.iter().map(|s| s.to_string()).collect(),
        g.true_loadings.clone(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    struct Draft {
        age: AgeBracket,
        gender: Gender,
        education: Education,
        party: PoliticalParty,
        ratings: BTreeMap<String, u8>,
        gs: f64,
    }
    let mut drafts = Vec::with_capacity(n);
    for _ in 0..n {
        let age = AgeBracket::ALL[sample_index(&marginals.age, &mut rng)];
        let gender = Gender::ALL[sample_index(&marginals.gender, &mut rng)];
        let education = Education::ALL[sample_index(&marginals.education, &mut rng)];
        let party = PoliticalParty::ALL[sample_index(&marginals.party, &mut rng)];

        let z: Vec<f64> = (0..k).map(|_| sample_normal(&mut rng)).collect();
        let factors = chol.matvec(&z)?;
        let mut ratings = BTreeMap::new();
        for (j, genre) in GENRES.iter().enumerate() {
            let mut raw: f64 = (0..k).map(|f| g.true_loadings[(j, f)] * factors[f]).sum();
            raw += g.noise_sd * sample_normal(&mut rng);
            ratings.insert(genre.to_string(), likert_discretize(raw / scale[j]));
        }

        let weights = ratings
            .iter()
            .map(|(genre, &v)| (genre.clone(), v as f64))
            .collect();
        let gs = prefspace::gs_score(&weights, &true_space)?;
        drafts.push(Draft {
            age,
            gender,
            education,
            party,
            ratings,
            gs,
        });
    }

    let mut score_columns: BTreeMap<Foundation, Vec<f64>> = BTreeMap::new();
    for foundation in Foundation::ALL {
        let model = g.moral_coefficients.get(foundation);
        let raw: Vec<f64> = drafts
            .iter()
            .map(|d| {
                let mut v = 0.0;
                for (j, genre) in GENRES.iter().enumerate() {
                    v += model.genre_weights[j] * (d.ratings[*genre] as f64 - 3.0);
                }
                v += model.age_weight * (d.age.ordinal() as f64 - 3.5);
                v += model.education_weight * (d.education.ordinal() as f64 - 3.5);
                v += model.gs_weight * d.gs;
                v + g.score_noise_sd * sample_normal(&mut rng)
            })
            .collect();
        score_columns.insert(foundation, rescale_scores(&raw));
    }

    let respondents: Vec<Respondent> = drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| Respondent {
            id: format!("s{:05}", i + 1),
            age: d.age,
            gender: d.gender,
            education: d.education,
            party: d.party,
            genre_ratings: d.ratings,
            moral_scores: MoralScores {
                care: score_columns[&Foundation::Care][i],
                fairness: score_columns[&Foundation::Fairness][i],
                loyalty: score_columns[&Foundation::Loyalty][i],
                authority: score_columns[&Foundation::Authority][i],
                purity: score_columns[&Foundation::Purity][i],
            },
            catch_items: BTreeMap::new(),
        })
        .collect();

    let mut provenance = Provenance::new("synthetic");
    provenance.note(format!("generated {n} respondents from seed {}", g.seed));
    Ok((Dataset::new(respondents, provenance)?, g.clone()))
}

/// Tucker congruence between two loading columns.
fn tucker(a: &Matrix, ca: usize, b: &Matrix, cb: usize) -> Result<f64> {
    let mut num = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.rows() {
        num += a[(i, ca)] * b[(i, cb)];
        na += a[(i, ca)] * a[(i, ca)];
        nb += b[(i, cb)] * b[(i, cb)];
    }
    if na < 1e-24 || nb < 1e-24 {
        return Err(Error::InvalidData(String::from(
            "zero loading column has no congruence",
        )));
    }
    Ok(num / (na * nb).sqrt())
}

/// Factor recovery quality: greedily match estimated columns to true
/// columns by largest absolute Tucker congruence, then report the matched
/// coefficient per true factor (sign-aligned, so 1.0 is perfect recovery).
pub fn congruence(estimated: &Matrix, truth: &Matrix) -> Result<Vec<f64>> {
    if estimated.rows() != truth.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimated rows vs {} true rows",
            estimated.rows(),
            truth.rows()
        )));
    }
    if estimated.cols() != truth.cols() {
        return Err(Error::InvalidInput(format!(
            "{} estimated factors cannot be matched to {} true factors",
            estimated.cols(),
            truth.cols()
        )));
    }
    let k = truth.cols();
    let mut table = vec![vec![0.0; k]; k];
    for (i, row) in table.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = tucker(estimated, i, truth, j)?;
        }
    }

    let mut est_used = vec![false; k];
    let mut truth_used = vec![false; k];
    let mut result = vec![0.0; k];
    for _ in 0..k {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..k {
            if est_used[i] {
                continue;
            }
            for j in 0..k {
                if truth_used[j] {
                    continue;
                }
                let c = table[i][j].abs();
                if best.map_or(true, |(_, _, b)| c > b) {
                    best = Some((i, j, c));
                }
            }
        }
        let (i, j, c) = best.expect("unmatched factors remain");
        est_used[i] = true;
        truth_used[j] = true;
        result[j] = c;
    }
    Ok(result)
}

/// Group variables by the factor holding their largest absolute loading.
/// Comparing the recovered grouping against the planted one checks cluster
/// recovery without caring about factor order or sign.
pub fn dominant_groupings(
    loadings: &Matrix,
    names: &[&str],
) -> Result<BTreeSet<BTreeSet<String>>> {
    if names.len() != loadings.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} names for {} loading rows",
            names.len(),
            loadings.rows()
        )));
    }
    let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        let mut best = 0;
        for j in 1..loadings.cols() {
            if loadings[(i, j)].abs() > loadings[(i, best)].abs() {
                best = j;
            }
        }
        groups.entry(best).or_default().insert(name.to_string());
    }
    Ok(groups.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{encode_features, FeatureBlock, Target};
    use crate::factors::{fit_factor_model, FactorOptions};
    use crate::prefspace::WeightMode;
    use crate::stats::spearman;

    #[test]
    fn likert_mapping_is_centered_and_clipped() {
        assert_eq!(likert_discretize(0.0), 3);
        assert_eq!(likert_discretize(10.0), 5);
        assert_eq!(likert_discretize(-10.0), 1);
        // ties round to even: 3.5 -> 4, 2.5 -> 2
        assert_eq!(likert_discretize(0.5 / 1.2), 4);
        assert_eq!(likert_discretize(-0.5 / 1.2), 2);
        // 4.5 -> 4
        assert_eq!(likert_discretize(1.5 / 1.2), 4);
    }

    #[test]
    fn default_truth_validates_and_covers_every_genre() {
        let g = survey_like(1);
        g.validate().unwrap();
        let groups = dominant_groupings(&g.true_loadings, &GENRES).unwrap();
        assert_eq!(groups.len(), 5);
        let mut covered: BTreeSet<String> = BTreeSet::new();
        for group in &groups {
            covered.extend(group.iter().cloned());
        }
        assert_eq!(covered.len(), 13);
        let christian_group: BTreeSet<String> = ["christian", "country", "folk"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert!(groups.contains(&christian_group));
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let g = survey_like(11);
        let (a, _) = generate(&g, 80, &Marginals::survey()).unwrap();
        let (b, _) = generate(&g, 80, &Marginals::survey()).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());

        let g2 = survey_like(12);
        let (c, _) = generate(&g2, 80, &Marginals::survey()).unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn ratings_depend_only_on_seeded_factors_when_noiseless() {
        let mut g = survey_like(21);
        g.noise_sd = 0.0;
        g.score_noise_sd = 0.0;
        let (a, _) = generate(&g, 60, &Marginals::survey()).unwrap();
        let (b, _) = generate(&g, 60, &Marginals::survey()).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        for r in &a.respondents {
            for (_, &v) in &r.genre_ratings {
                assert!((1..=5).contains(&v));
            }
        }
    }

    #[test]
    fn demographic_marginals_are_respected() {
        let g = survey_like(31);
        let marginals = Marginals::survey();
        let n = 10_000usize;
        let (d, _) = generate(&g, n, &marginals).unwrap();

        let age_total: u64 = marginals.age.iter().sum();
        for (i, bracket) in AgeBracket::ALL.iter().enumerate() {
            let observed =
                d.respondents.iter().filter(|r| r.age == *bracket).count() as f64 / n as f64;
            let expected = marginals.age[i] as f64 / age_total as f64;
            assert!(
                (observed - expected).abs() <= 0.02,
                "age bracket {i}: {observed} vs {expected}"
            );
        }
        let party_total: u64 = marginals.party.iter().sum();
        for (i, party) in PoliticalParty::ALL.iter().enumerate() {
            let observed =
                d.respondents.iter().filter(|r| r.party == *party).count() as f64 / n as f64;
            let expected = marginals.party[i] as f64 / party_total as f64;
            assert!(
                (observed - expected).abs() <= 0.02,
                "party {i}: {observed} vs {expected}"
            );
        }
        let female = d
            .respondents
            .iter()
            .filter(|r| r.gender == Gender::Female)
            .count() as f64
            / n as f64;
        assert!((female - 588.0 / 1062.0).abs() <= 0.02);
    }

    #[test]
    fn scores_live_in_range_and_control_target_is_noise() {
        let g = survey_like(41);
        let (d, _) = generate(&g, 400, &Marginals::survey()).unwrap();
        for r in &d.respondents {
            for f in Foundation::ALL {
                let v = r.moral_scores.get(f);
                assert!((0.0..=30.0).contains(&v));
            }
        }
        // fairness has zero coefficients: it should not correlate with the
        // dominant binding driver
        let fairness: Vec<f64> = d.respondents.iter().map(|r| r.moral_scores.fairness).collect();
        let christian: Vec<f64> = d
            .respondents
            .iter()
            .map(|r| r.genre_ratings["christian"] as f64)
            .collect();
        let rho = spearman(&christian, &fairness).unwrap();
        assert!(rho.abs() < 0.15, "control target correlates: {rho}");
        let loyalty: Vec<f64> = d.respondents.iter().map(|r| r.moral_scores.loyalty).collect();
        let rho = spearman(&christian, &loyalty).unwrap();
        assert!(rho > 0.5, "planted target does not correlate: {rho}");
    }

    #[test]
    fn congruence_handles_identity_sign_flip_and_orthogonality() {
        let truth =
            Matrix::from_rows(&[vec![0.8, 0.0], vec![0.7, 0.1], vec![0.0, 0.9]]).unwrap();
        let same = congruence(&truth, &truth).unwrap();
        for c in same {
            assert!((c - 1.0).abs() < 1e-12);
        }

        // flip signs and swap columns: still perfect recovery
        let mut flipped = Matrix::zeros(3, 2);
        for i in 0..3 {
            flipped[(i, 0)] = -truth[(i, 1)];
            flipped[(i, 1)] = -truth[(i, 0)];
        }
        let matched = congruence(&flipped, &truth).unwrap();
        for c in matched {
            assert!((c - 1.0).abs() < 1e-12);
        }

        let est = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let orth = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let c = congruence(&est, &orth).unwrap();
        assert!(c[0].abs() < 1e-12);

        let wide = Matrix::zeros(3, 3);
        assert!(congruence(&wide, &truth).is_err());
    }

    #[test]
    fn pipeline_recovers_planted_structure() {
        let g = survey_like(51);
        let (d, _) = generate(&g, 1200, &Marginals::survey()).unwrap();
        let x = encode_features(&d, &[FeatureBlock::Genres], None).unwrap();
        let fm = fit_factor_model(&x, &FactorOptions::default()).unwrap();
        let cs = congruence(&fm.pattern, &g.true_loadings).unwrap();
        for (i, c) in cs.iter().enumerate() {
            assert!(*c >= 0.9, "factor {i} congruence {c}");
        }
        let recovered = dominant_groupings(&fm.pattern, &GENRES).unwrap();
        let planted = dominant_groupings(&g.true_loadings, &GENRES).unwrap();
        assert_eq!(recovered, planted);
    }

    #[test]
    fn purity_runs_against_the_gs_score() {
        let g = survey_like(61);
        let (d, _) = generate(&g, 1000, &Marginals::survey()).unwrap();
        let x = encode_features(&d, &[FeatureBlock::Genres], None).unwrap();
        let fm = fit_factor_model(&x, &FactorOptions::default()).unwrap();
        let space = PreferenceSpace::from_model(&fm);
        let gs = prefspace::gs_scores(&d, &space, WeightMode::Rating).unwrap();
        let purity: Vec<f64> = d.respondents.iter().map(|r| r.moral_scores.purity).collect();
        let rho = spearman(&gs, &purity).unwrap();
        assert!(rho < -0.1, "rho(gs, purity) = {rho}");
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let g = survey_like(71);
        assert!(generate(&g, 49, &Marginals::survey()).is_err());

        let mut bad = survey_like(72);
        bad.true_phi[(0, 1)] = 0.99;
        bad.true_phi[(1, 0)] = 0.99;
        bad.true_phi[(0, 2)] = -0.9;
        bad.true_phi[(2, 0)] = -0.9;
        bad.true_phi[(1, 2)] = 0.9;
        bad.true_phi[(2, 1)] = 0.9;
        assert!(bad.validate().is_err());

        let mut off = survey_like(73);
        off.true_phi[(0, 0)] = 1.5;
        assert!(off.validate().is_err());

        let mut short = survey_like(74);
        short.moral_coefficients.care.genre_weights.pop();
        assert!(short.validate().is_err());

        let zeroed = Marginals {
            age: [0; 6],
            gender: [1, 1],
            education: [1; 6],
            party: [1; 6],
        };
        assert!(generate(&survey_like(75), 60, &zeroed).is_err());
    }

    #[test]
    fn truth_serializes_round_trip() {
        let g = survey_like(81);
        let json = serde_json::to_string(&g).unwrap();
        let back: GroundTruth = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn planted_binding_signal_is_learnable() {
        use crate::experiments::{run_experiment, ExperimentId, ExperimentSpec, Task};
        let g = survey_like(91);
        let (d, _) = generate(&g, 600, &Marginals::survey()).unwrap();
        let mut spec = ExperimentSpec::standard(ExperimentId::Ex1, Task::Classification, 91);
        spec.boost_params.n_rounds = 40;
        spec.targets = vec![
            Target::Foundation(Foundation::Loyalty),
            Target::Foundation(Foundation::Fairness),
        ];
        let result = run_experiment(&d, &spec, None).unwrap();
        let loyalty = &result.rows[0];
        assert!(loyalty.mean >= 0.8, "loyalty AUROC {}", loyalty.mean);
        let fairness = &result.rows[1];
        assert!(
            (0.35..=0.65).contains(&fairness.mean),
            "control AUROC {}",
            fairness.mean
        );
    }
}

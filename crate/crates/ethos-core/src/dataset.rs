//! Canonical survey schema: respondents with demographics, 13 genre ratings
//! on a 1-5 Likert scale, and 5 moral-foundation scores, plus the encodings
//! that turn them into model-ready feature matrices and median-split labels.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::Matrix;
use crate::stats;
use crate::{Error, Result};

/// The 13 surveyed music genres, in canonical order.
pub const GENRES: [&str; 13] = [
    "alternative pop/rock",
    "christian",
    "classical",
    "country",
    "folk",
    "heavy metal",
    "rap/hip-hop",
    "jazz",
    "latin",
    "pop",
    "punk",
    "R&B",
    "rock",
];

/// CSV-safe column slugs, aligned with [`GENRES`].
pub const GENRE_SLUGS: [&str; 13] = [
    "alternative_pop_rock",
    "christian",
    "classical",
    "country",
    "folk",
    "heavy_metal",
    "rap_hip_hop",
    "jazz",
    "latin",
    "pop",
    "punk",
    "rnb",
    "rock",
];

/// Canonical genre name for a CSV slug.
pub fn genre_from_slug(slug: &str) -> Option<&'static str> {
    GENRE_SLUGS
        .iter()
        .position(|s| *s == slug)
        .map(|i| GENRES[i])
}

/// CSV slug for a canonical genre name.
pub fn genre_slug(genre: &str) -> Option<&'static str> {
    GENRES
        .iter()
        .position(|g| *g == genre)
        .map(|i| GENRE_SLUGS[i])
}

/// The five moral foundations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Foundation {
    Care,
    Fairness,
    Loyalty,
    Authority,
    Purity,
}

impl Foundation {
    pub const ALL: [Foundation; 5] = [
        Foundation::Care,
        Foundation::Fairness,
        Foundation::Loyalty,
        Foundation::Authority,
        Foundation::Purity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Foundation::Care => "care",
            Foundation::Fairness => "fairness",
            Foundation::Loyalty => "loyalty",
            Foundation::Authority => "authority",
            Foundation::Purity => "purity",
        }
    }

    pub fn from_name(name: &str) -> Option<Foundation> {
        Foundation::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A prediction target: one of the five foundations or one of the two
/// superior composites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    Foundation(Foundation),
    Individualizing,
    Binding,
}

impl Target {
    pub const ALL: [Target; 7] = [
        Target::Foundation(Foundation::Care),
        Target::Foundation(Foundation::Fairness),
        Target::Foundation(Foundation::Authority),
        Target::Foundation(Foundation::Purity),
        Target::Foundation(Foundation::Loyalty),
        Target::Individualizing,
        Target::Binding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Foundation(f) => f.name(),
            Target::Individualizing => "individualizing",
            Target::Binding => "binding",
        }
    }

    pub fn from_name(name: &str) -> Option<Target> {
        Target::ALL.into_iter().find(|t| t.name() == name)
    }
}

/// Scores on the five moral foundations. Holding them as named fields makes
/// the "exactly five, all present" invariant structural.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoralScores {
    pub care: f64,
    pub fairness: f64,
    pub loyalty: f64,
    pub authority: f64,
    pub purity: f64,
}

impl MoralScores {
    pub fn get(&self, f: Foundation) -> f64 {
        match f {
            Foundation::Care => self.care,
            Foundation::Fairness => self.fairness,
            Foundation::Loyalty => self.loyalty,
            Foundation::Authority => self.authority,
            Foundation::Purity => self.purity,
        }
    }

    /// Score for any target, deriving the superior composites on the fly.
    pub fn target_score(&self, t: Target) -> f64 {
        match t {
            Target::Foundation(f) => self.get(f),
            Target::Individualizing => derive_superior_foundations(self).0,
            Target::Binding => derive_superior_foundations(self).1,
        }
    }
}

/// Superior-foundation composites as unweighted means of their constituents:
/// individualizing from care and fairness, binding from loyalty, authority,
/// and purity.
pub fn derive_superior_foundations(m: &MoralScores) -> (f64, f64) {
    let individualizing = (m.care + m.fairness) / 2.0;
    let binding = (m.loyalty + m.authority + m.purity) / 3.0;
    (individualizing, binding)
}

macro_rules! labelled_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:expr),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            pub fn from_label(label: &str) -> Option<$name> {
                match label {
                    $($label => Some($name::$variant),)+
                    _ => None,
                }
            }

            /// 1-based position in declaration order.
            pub fn ordinal(self) -> u8 {
                Self::ALL.iter().position(|v| *v == self).unwrap() as u8 + 1
            }
        }
    };
}

labelled_enum! {
    /// Six age brackets in ascending order.
    AgeBracket {
        From18To24 => "18-24",
        From25To34 => "25-34",
        From35To44 => "35-44",
        From45To54 => "45-54",
        From55To64 => "55-64",
        Over65 => "65+",
    }
}

labelled_enum! {
    Gender {
        Female => "Female",
        Male => "Male",
    }
}

labelled_enum! {
    /// Six education levels in ascending order.
    Education {
        LessThanHighSchool => "Less than High School",
        HighSchoolGraduate => "High school graduate",
        SomeCollege => "Some College",
        TradeOrProfessional => "Trade or professional school",
        CollegeGraduate => "College Graduate",
        PostGraduate => "Post Graduate work or degree",
    }
}

labelled_enum! {
    PoliticalParty {
        Conservative => "Conservative",
        Liberal => "Liberal",
        NewDemocratic => "New Democratic Party",
        Green => "Green Party",
        Quebecois => "Party Quebecois",
        NoVote => "I don't vote",
    }
}

impl PoliticalParty {
    pub fn slug(self) -> &'static str {
        match self {
            PoliticalParty::Conservative => "conservative",
            PoliticalParty::Liberal => "liberal",
            PoliticalParty::NewDemocratic => "new_democratic",
            PoliticalParty::Green => "green",
            PoliticalParty::Quebecois => "quebecois",
            PoliticalParty::NoVote => "no_vote",
        }
    }
}

/// One cleaned survey row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub id: String,
    pub age: AgeBracket,
    pub gender: Gender,
    pub education: Education,
    pub party: PoliticalParty,
    /// Present ratings only; an absent genre means "not rated".
    pub genre_ratings: BTreeMap<String, u8>,
    pub moral_scores: MoralScores,
    pub catch_items: BTreeMap<String, String>,
}

impl Respondent {
    /// Check the schema invariants: genre keys drawn from the canonical
    /// list, every present rating in 1..=5.
    pub fn validate(&self) -> Result<()> {
        for (genre, rating) in &self.genre_ratings {
            if !GENRES.contains(&genre.as_str()) {
                return Err(Error::InvalidData(format!(
                    "respondent {}: unknown genre {genre:?}",
                    self.id
                )));
            }
            if !(1..=5).contains(rating) {
                return Err(Error::InvalidData(format!(
                    "respondent {}: rating {rating} for {genre:?} outside 1-5",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn rating(&self, genre: &str) -> Option<u8> {
        self.genre_ratings.get(genre).copied()
    }

    /// Mean of the present ratings; used as the imputation value when a
    /// genre column must be filled for model features.
    pub fn mean_rating(&self) -> Option<f64> {
        if self.genre_ratings.is_empty() {
            return None;
        }
        let sum: u32 = self.genre_ratings.values().map(|&r| r as u32).sum();
        Some(sum as f64 / self.genre_ratings.len() as f64)
    }
}

/// Ingestion and filtering history, emitted alongside every derived output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub log: Vec<String>,
}

impl Provenance {
    pub fn new(source: impl Into<String>) -> Self {
        Provenance {
            source: source.into(),
            log: Vec::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.log.push(line.into());
    }
}

/// An ordered collection of respondents plus how it came to be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub respondents: Vec<Respondent>,
    pub provenance: Provenance,
}

impl Dataset {
    /// Validates every respondent and rejects duplicate ids.
    pub fn new(respondents: Vec<Respondent>, provenance: Provenance) -> Result<Self> {
        let mut seen = alloc::collections::BTreeSet::new();
        for r in &respondents {
            r.validate()?;
            if !seen.insert(r.id.clone()) {
                return Err(Error::InvalidData(format!("duplicate respondent id {:?}", r.id)));
            }
        }
        Ok(Dataset {
            respondents,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.respondents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondents.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.respondents.iter().map(|r| r.id.clone()).collect()
    }

    /// Canonical byte encoding of the respondent content (provenance
    /// excluded), stable across reloads of the same data.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.respondents {
            out.extend_from_slice(r.id.as_bytes());
            out.push(b'|');
            out.extend_from_slice(r.age.label().as_bytes());
            out.push(b'|');
            out.extend_from_slice(r.gender.label().as_bytes());
            out.push(b'|');
            out.extend_from_slice(r.education.label().as_bytes());
            out.push(b'|');
            out.extend_from_slice(r.party.label().as_bytes());
            for (g, v) in &r.genre_ratings {
                out.push(b'|');
                out.extend_from_slice(g.as_bytes());
                out.push(b'=');
                out.extend_from_slice(v.to_string().as_bytes());
            }
            for f in Foundation::ALL {
                out.push(b'|');
                out.extend_from_slice(format!("{}", r.moral_scores.get(f)).as_bytes());
            }
            for (k, v) in &r.catch_items {
                out.push(b'|');
                out.extend_from_slice(k.as_bytes());
                out.push(b'=');
                out.extend_from_slice(v.as_bytes());
            }
            out.push(b'\n');
        }
        out
    }

    /// SHA-256 over [`canonical_bytes`](Self::canonical_bytes), hex-encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// How a feature column was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Likert,
    Ordinal,
    OneHot,
    Score,
}

/// Encoded model input: named numeric columns over the dataset's row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    row_ids: Vec<String>,
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    values: Matrix,
}

impl FeatureMatrix {
    pub fn new(
        row_ids: Vec<String>,
        names: Vec<String>,
        kinds: Vec<ColumnKind>,
        values: Matrix,
    ) -> Result<Self> {
        if names.len() != values.cols() || kinds.len() != names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names / {} kinds for {} columns",
                names.len(),
                kinds.len(),
                values.cols()
            )));
        }
        if row_ids.len() != values.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                values.rows()
            )));
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(Error::InvalidData(format!("duplicate feature name {n:?}")));
            }
        }
        if values.data().iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidData(String::from(
                "feature matrix contains NaN",
            )));
        }
        Ok(FeatureMatrix {
            row_ids,
            names,
            kinds,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn matrix(&self) -> &Matrix {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j)
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.values.column(j))
    }

    /// Restrict to a subset of rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.values.row(r));
            ids.push(self.row_ids[r].clone());
        }
        FeatureMatrix {
            row_ids: ids,
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            values: Matrix::from_vec(rows.len(), self.n_cols(), data).unwrap(),
        }
    }
}

/// Building blocks of the experiment feature sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureBlock {
    /// The 13 genre ratings as Likert columns.
    Genres,
    /// Factor scores from a fitted factor model (supplied externally).
    FactorScores,
    /// The generalist/specialist score (supplied externally).
    GsScore,
    /// Age bracket as an ordinal 1-6.
    Age,
    /// Gender as one-hot indicators.
    Gender,
    /// Education level as an ordinal 1-6.
    Education,
    /// Political party as one-hot indicators.
    Party,
}

/// Externally computed per-respondent columns that some feature blocks need.
#[derive(Debug, Clone, Default)]
pub struct DerivedColumns {
    /// Column names plus an n-by-k score matrix in dataset row order.
    pub factor_scores: Option<(Vec<String>, Matrix)>,
    /// GS score per respondent in dataset row order.
    pub gs_scores: Option<Vec<f64>>,
}

/// Encode the dataset into a numeric feature matrix.
///
/// Missing genre ratings are imputed with the respondent's own mean rating
/// so tree models see complete columns; a respondent with no ratings at all
/// cannot be encoded.
pub fn encode_features(
    d: &Dataset,
    blocks: &[FeatureBlock],
    derived: Option<&DerivedColumns>,
) -> Result<FeatureMatrix> {
    if blocks.is_empty() {
        return Err(Error::InvalidInput(String::from("empty feature block list")));
    }
    if d.is_empty() {
        return Err(Error::InvalidData(String::from("empty dataset")));
    }
    let n = d.len();
    let mut names: Vec<String> = Vec::new();
    let mut kinds: Vec<ColumnKind> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for block in blocks {
        match block {
            FeatureBlock::Genres => {
                let mut imputed: Vec<f64> = Vec::with_capacity(n);
                for r in &d.respondents {
                    imputed.push(r.mean_rating().ok_or_else(|| {
                        Error::Unscorable(format!("respondent {} rated no genres", r.id))
                    })?);
                }
                for genre in GENRES {
                    names.push(genre.to_string());
                    kinds.push(ColumnKind::Likert);
                    columns.push(
                        d.respondents
                            .iter()
                            .zip(&imputed)
                            .map(|(r, &m)| r.rating(genre).map_or(m, f64::from))
                            .collect(),
                    );
                }
            }
            FeatureBlock::FactorScores => {
                let (score_names, scores) = derived
                    .and_then(|x| x.factor_scores.as_ref())
                    .ok_or_else(|| {
                        Error::InvalidInput(String::from(
                            "feature set needs factor scores but none were provided",
                        ))
                    })?;
                if scores.rows() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "factor scores have {} rows, dataset has {n}",
                        scores.rows()
                    )));
                }
                for (k, name) in score_names.iter().enumerate() {
                    names.push(name.clone());
                    kinds.push(ColumnKind::Score);
                    columns.push(scores.column(k));
                }
            }
            FeatureBlock::GsScore => {
                let gs = derived.and_then(|x| x.gs_scores.as_ref()).ok_or_else(|| {
                    Error::InvalidInput(String::from(
                        "feature set needs GS scores but none were provided",
                    ))
                })?;
                if gs.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} GS scores for {n} respondents",
                        gs.len()
                    )));
                }
                names.push(String::from("gs_score"));
                kinds.push(ColumnKind::Score);
                columns.push(gs.clone());
            }
            FeatureBlock::Age => {
                names.push(String::from("age"));
                kinds.push(ColumnKind::Ordinal);
                columns.push(
                    d.respondents
                        .iter()
                        .map(|r| r.age.ordinal() as f64)
                        .collect(),
                );
            }
            FeatureBlock::Gender => {
                for g in Gender::ALL {
                    names.push(format!("gender_{}", g.label().to_lowercase()));
                    kinds.push(ColumnKind::OneHot);
                    columns.push(
                        d.respondents
                            .iter()
                            .map(|r| if r.gender == *g { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
            FeatureBlock::Education => {
                names.push(String::from("education"));
                kinds.push(ColumnKind::Ordinal);
                columns.push(
                    d.respondents
                        .iter()
                        .map(|r| r.education.ordinal() as f64)
                        .collect(),
                );
            }
            FeatureBlock::Party => {
                for p in PoliticalParty::ALL {
                    names.push(format!("party_{}", p.slug()));
                    kinds.push(ColumnKind::OneHot);
                    columns.push(
                        d.respondents
                            .iter()
                            .map(|r| if r.party == *p { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }

    let cols = columns.len();
    let mut data = vec![0.0; n * cols];
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * cols + j] = v;
        }
    }
    FeatureMatrix::new(d.ids(), names, kinds, Matrix::from_vec(n, cols, data)?)
}

/// Binary high/low labels for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub target: Target,
    /// `true` = high, aligned with dataset row order.
    pub labels: Vec<bool>,
    pub median_used: f64,
}

impl LabelVector {
    pub fn as_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect()
    }
}

/// Label each respondent high iff their target score strictly exceeds the
/// population median; ties at the median are low.
pub fn median_split_labels(d: &Dataset, target: Target) -> Result<LabelVector> {
    if d.is_empty() {
        return Err(Error::InvalidData(String::from(
            "median split over empty dataset",
        )));
    }
    let scores: Vec<f64> = d
        .respondents
        .iter()
        .map(|r| r.moral_scores.target_score(target))
        .collect();
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData(format!(
            "NaN {} score in dataset",
            target.name()
        )));
    }
    let median_used = stats::median(&scores)?;
    Ok(LabelVector {
        target,
        labels: scores.iter().map(|&s| s > median_used).collect(),
        median_used,
    })
}

/// A catch-item pass rule: the respondent's answer must be one of the
/// accepted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatchRule {
    pub item: String,
    pub pass_values: Vec<String>,
}

impl CatchRule {
    fn passes(&self, r: &Respondent) -> bool {
        r.catch_items
            .get(&self.item)
            .is_some_and(|v| self.pass_values.contains(v))
    }
}

/// Drop respondents failing any catch rule. A dataset with no catch items at
/// all passes through unchanged.
pub fn filter_catch_failures(d: &Dataset, rules: &[CatchRule]) -> Result<Dataset> {
    let mut out = d.clone();
    if rules.is_empty() {
        out.provenance.note("catch filter: no rules configured");
        return Ok(out);
    }
    let has_any_catch = d.respondents.iter().any(|r| !r.catch_items.is_empty());
    if !has_any_catch {
        out.provenance.note("catch filter: dataset has no catch items");
        return Ok(out);
    }
    for rule in rules {
        let known = d
            .respondents
            .iter()
            .any(|r| r.catch_items.contains_key(&rule.item));
        if !known {
            return Err(Error::NotFound(format!(
                "catch rule references unknown item {:?}",
                rule.item
            )));
        }
    }
    let before = d.len();
    out.respondents
        .retain(|r| rules.iter().all(|rule| rule.passes(r)));
    let removed = before - out.respondents.len();
    out.provenance.note(format!(
        "catch filter removed {removed} of {before} respondents"
    ));
    if out.respondents.is_empty() {
        out.provenance
            .note("warning: all respondents failed the catch rules");
    }
    Ok(out)
}

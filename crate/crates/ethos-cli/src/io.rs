//! Survey CSV ingestion and the export formats: survey CSV, GS scores,
//! correlation tables, SHAP matrices, and generic JSON documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ethos_core::attribution::GlobalImportance;
use ethos_core::dataset::{
    genre_from_slug, AgeBracket, Dataset, Education, Foundation, Gender, PoliticalParty,
    Provenance, Respondent, GENRES, GENRE_SLUGS,
};
use ethos_core::prefspace::CorrelationRow;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Column names of the survey CSV. Defaults match the emitted schema:
/// `id, age, gender, education, party, genre_<slug>..., mft_<foundation>...`
/// plus optional `catch_<item>` columns.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub id: String,
    pub age: String,
    pub gender: String,
    pub education: String,
    pub party: String,
    pub genre_prefix: String,
    pub mft_prefix: String,
    pub catch_prefix: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            id: "id".into(),
            age: "age".into(),
            gender: "gender".into(),
            education: "education".into(),
            party: "party".into(),
            genre_prefix: "genre_".into(),
            mft_prefix: "mft_".into(),
            catch_prefix: "catch_".into(),
        }
    }
}

struct ColumnMap {
    id: usize,
    age: usize,
    gender: usize,
    education: usize,
    party: usize,
    /// Genre column index per canonical genre name.
    genres: Vec<(String, usize)>,
    /// Foundation column index in Foundation::ALL order.
    foundations: Vec<usize>,
    /// (item name, column index) for catch columns.
    catches: Vec<(String, usize)>,
}

fn build_column_map(headers: &csv::StringRecord, schema: &CsvSchema) -> Result<ColumnMap> {
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("header is missing the {name:?} column"))
    };

    let mut genres = Vec::with_capacity(GENRES.len());
    for slug in GENRE_SLUGS {
        let column = format!("{}{slug}", schema.genre_prefix);
        let genre = genre_from_slug(slug).expect("slug table is aligned with the genre table");
        genres.push((genre.to_string(), find(&column)?));
    }
    let mut foundations = Vec::with_capacity(Foundation::ALL.len());
    for f in Foundation::ALL {
        foundations.push(find(&format!("{}{}", schema.mft_prefix, f.name()))?);
    }
    let catches = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.strip_prefix(schema.catch_prefix.as_str())
                .filter(|rest| !rest.is_empty())
                .map(|rest| (rest.to_string(), i))
        })
        .collect();

    Ok(ColumnMap {
        id: find(&schema.id)?,
        age: find(&schema.age)?,
        gender: find(&schema.gender)?,
        education: find(&schema.education)?,
        party: find(&schema.party)?,
        genres,
        foundations,
        catches,
    })
}

fn parse_row(record: &csv::StringRecord, map: &ColumnMap) -> std::result::Result<Respondent, String> {
    let field = |i: usize| record.get(i).unwrap_or("").trim();

    let id = field(map.id);
    if id.is_empty() {
        return Err("empty id".into());
    }
    let age = AgeBracket::from_label(field(map.age))
        .ok_or_else(|| format!("unknown age bracket {:?}", field(map.age)))?;
    let gender = Gender::from_label(field(map.gender))
        .ok_or_else(|| format!("unknown gender {:?}", field(map.gender)))?;
    let education = Education::from_label(field(map.education))
        .ok_or_else(|| format!("unknown education level {:?}", field(map.education)))?;
    let party = PoliticalParty::from_label(field(map.party))
        .ok_or_else(|| format!("unknown political party {:?}", field(map.party)))?;

    let mut genre_ratings = BTreeMap::new();
    for (genre, i) in &map.genres {
        let cell = field(*i);
        if cell.is_empty() {
            continue; // missing rating
        }
        let value: u8 = cell
            .parse()
            .map_err(|_| format!("genre {genre:?} rating {cell:?} is not an integer"))?;
        if !(1..=5).contains(&value) {
            return Err(format!("genre {genre:?} rating {value} outside 1-5"));
        }
        genre_ratings.insert(genre.clone(), value);
    }

    let mut scores = [0.0; 5];
    for (slot, (f, &i)) in scores
        .iter_mut()
        .zip(Foundation::ALL.iter().zip(&map.foundations))
    {
        let cell = field(i);
        *slot = cell
            .parse()
            .map_err(|_| format!("{} score {cell:?} is not a number", f.name()))?;
    }
    let [care, fairness, loyalty, authority, purity] = scores;

    let catch_items = map
        .catches
        .iter()
        .map(|(item, i)| (item.clone(), field(*i).to_string()))
        .collect();

    Ok(Respondent {
        id: id.to_string(),
        age,
        gender,
        education,
        party,
        genre_ratings,
        moral_scores: ethos_core::dataset::MoralScores {
            care,
            fairness,
            loyalty,
            authority,
            purity,
        },
        catch_items,
    })
}

/// Load a survey CSV. Rows whose required fields do not parse are dropped
/// and logged in the dataset provenance; a file yielding zero valid rows is
/// an error.
pub fn load_survey(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open survey file {}", path.display()))?;
    let map = build_column_map(reader.headers()?, schema)?;

    let mut provenance = Provenance::new(path.display().to_string());
    let mut respondents = Vec::new();
    let mut dropped = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                provenance.note(format!("dropped line {line}: {e}"));
                dropped += 1;
                continue;
            }
        };
        match parse_row(&record, &map) {
            Ok(r) => respondents.push(r),
            Err(reason) => {
                provenance.note(format!("dropped line {line}: {reason}"));
                dropped += 1;
            }
        }
    }
    if respondents.is_empty() {
        bail!("{} contains no valid survey rows", path.display());
    }
    provenance.note(format!(
        "loaded {} rows, dropped {dropped}",
        respondents.len()
    ));
    Dataset::new(respondents, provenance).map_err(Into::into)
}

/// Survey CSV text in the same schema `load_survey` reads. Catch columns
/// are the sorted union across respondents.
pub fn survey_to_csv(d: &Dataset) -> Result<String> {
    let catch_items: BTreeSet<&str> = d
        .respondents
        .iter()
        .flat_map(|r| r.catch_items.keys().map(String::as_str))
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec![
        "id".into(),
        "age".into(),
        "gender".into(),
        "education".into(),
        "party".into(),
    ];
    header.extend(GENRE_SLUGS.iter().map(|s| format!("genre_{s}")));
    header.extend(Foundation::ALL.iter().map(|f| format!("mft_{}", f.name())));
    header.extend(catch_items.iter().map(|c| format!("catch_{c}")));
    w.write_record(&header)?;

    for r in &d.respondents {
        let mut row: Vec<String> = vec![
            r.id.clone(),
            r.age.label().to_string(),
            r.gender.label().to_string(),
            r.education.label().to_string(),
            r.party.label().to_string(),
        ];
        for genre in GENRES {
            row.push(
                r.genre_ratings
                    .get(genre)
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            );
        }
        for f in Foundation::ALL {
            row.push(r.moral_scores.get(f).to_string());
        }
        for item in &catch_items {
            row.push(r.catch_items.get(*item).cloned().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// GS scores keyed by respondent id.
pub fn gs_to_csv(ids: &[String], scores: &[f64]) -> Result<String> {
    if ids.len() != scores.len() {
        bail!("{} ids for {} scores", ids.len(), scores.len());
    }
    let mut out = String::from("id,gs_score\n");
    for (id, score) in ids.iter().zip(scores) {
        out.push_str(&format!("{id},{score}\n"));
    }
    Ok(out)
}

/// Long-format correlation table. Unscorable pairs leave rho empty.
pub fn correlations_to_csv(rows: &[CorrelationRow]) -> String {
    let mut out = String::from("var_a,var_b,rho,n\n");
    for row in rows {
        let rho = row.rho.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{rho},{}\n", row.var_a, row.var_b, row.n));
    }
    out
}

/// Respondent-by-feature SHAP matrix.
pub fn shap_to_csv(g: &GlobalImportance) -> String {
    let mut out = String::from("id");
    for name in &g.feature_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, id) in g.row_ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..g.feature_names.len() {
            out.push_str(&format!(",{}", g.phi[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} is not valid JSON for this command", path.display()))
}

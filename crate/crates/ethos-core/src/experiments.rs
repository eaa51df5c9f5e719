//! The EX1-EX6 experiment grid: feature-set definitions, cross-validation,
//! per-target metric tables, and report rendering.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boosting::{self, BoostParams, Objective};
use crate::dataset::{
    encode_features, median_split_labels, Dataset, DerivedColumns, FeatureBlock, FeatureMatrix,
    Target,
};
use crate::factors::{self, FactorModel};
use crate::prefspace::{self, PreferenceSpace, WeightMode};
use crate::stats;
use crate::{Error, Result};

pub use crate::stats::{mae, weighted_auroc};

/// The published experiment grid plus an escape hatch for custom feature
/// sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
    Ex6,
    Custom,
}

impl ExperimentId {
    pub const STANDARD: [ExperimentId; 6] = [
        ExperimentId::Ex1,
        ExperimentId::Ex2,
        ExperimentId::Ex3,
        ExperimentId::Ex4,
        ExperimentId::Ex5,
        ExperimentId::Ex6,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ExperimentId::Ex1 => "EX1",
            ExperimentId::Ex2 => "EX2",
            ExperimentId::Ex3 => "EX3",
            ExperimentId::Ex4 => "EX4",
            ExperimentId::Ex5 => "EX5",
            ExperimentId::Ex6 => "EX6",
            ExperimentId::Custom => "custom",
        }
    }

    pub fn from_label(label: &str) -> Option<ExperimentId> {
        let upper = label.to_uppercase();
        ExperimentId::STANDARD
            .into_iter()
            .find(|id| id.label() == upper)
            .or(if label.eq_ignore_ascii_case("custom") {
                Some(ExperimentId::Custom)
            } else {
                None
            })
    }

    /// Feature blocks per the experiment definitions: EX1 genres only; EX2
    /// factor scores; EX3 the GS score; EX4-EX6 genres plus progressively
    /// more demographics.
    pub fn feature_blocks(self) -> Vec<FeatureBlock> {
        match self {
            ExperimentId::Ex1 => vec![FeatureBlock::Genres],
            ExperimentId::Ex2 => vec![FeatureBlock::FactorScores],
            ExperimentId::Ex3 => vec![FeatureBlock::GsScore],
            ExperimentId::Ex4 => vec![
                FeatureBlock::Genres,
                FeatureBlock::Age,
                FeatureBlock::Gender,
            ],
            ExperimentId::Ex5 => vec![
                FeatureBlock::Genres,
                FeatureBlock::Age,
                FeatureBlock::Gender,
                FeatureBlock::Education,
            ],
            ExperimentId::Ex6 => vec![
                FeatureBlock::Genres,
                FeatureBlock::Age,
                FeatureBlock::Gender,
                FeatureBlock::Education,
                FeatureBlock::Party,
            ],
            ExperimentId::Custom => vec![],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    pub fn objective(self) -> Objective {
        match self {
            Task::Classification => Objective::Logistic,
            Task::Regression => Objective::SquaredError,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        }
    }
}

/// Cross-validation layout. K-fold is the primary mode; the shuffle-split
/// alternative holds out a fixed fraction repeatedly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CvScheme {
    KFold { folds: usize },
    ShuffleSplit { train_fraction: f64, repeats: usize },
}

impl Default for CvScheme {
    fn default() -> Self {
        CvScheme::KFold { folds: 5 }
    }
}

/// One experiment to run: a feature set, the seven targets, and the
/// training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub feature_blocks: Vec<FeatureBlock>,
    pub targets: Vec<Target>,
    pub task: Task,
    pub cv: CvScheme,
    pub seed: u64,
    pub boost_params: BoostParams,
}

impl ExperimentSpec {
    /// The grid configuration: the id's feature blocks, all seven targets,
    /// 5-fold CV, default boosting parameters with the objective matching
    /// the task.
    pub fn standard(id: ExperimentId, task: Task, seed: u64) -> Self {
        ExperimentSpec {
            id,
            feature_blocks: id.feature_blocks(),
            targets: Target::ALL.to_vec(),
            task,
            cv: CvScheme::default(),
            seed,
            boost_params: BoostParams {
                objective: task.objective(),
                seed,
                ..BoostParams::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_blocks.is_empty() {
            return Err(Error::InvalidInput(String::from(
                "experiment has no feature blocks",
            )));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidInput(String::from(
                "experiment has no targets",
            )));
        }
        match self.cv {
            CvScheme::KFold { folds } if folds < 2 => {
                return Err(Error::InvalidInput(String::from("folds must be >= 2")));
            }
            CvScheme::ShuffleSplit {
                train_fraction,
                repeats,
            } if !(train_fraction > 0.0 && train_fraction < 1.0) || repeats == 0 => {
                return Err(Error::InvalidInput(String::from(
                    "shuffle split needs train_fraction in (0,1) and repeats >= 1",
                )));
            }
            _ => {}
        }
        if self.boost_params.objective != self.task.objective() {
            return Err(Error::InvalidInput(String::from(
                "boosting objective does not match the task",
            )));
        }
        self.boost_params.validate()
    }
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Deal shuffled indices round-robin into `folds` test sets. With labels
/// present, each class is dealt separately so fold class counts stay within
/// one respondent of proportional.
fn kfold_test_sets(
    n: usize,
    folds: usize,
    labels: Option<&[bool]>,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if n < folds {
        return Err(Error::InvalidData(format!(
            "{n} rows cannot fill {folds} folds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = shuffled(n, &mut rng);
    let mut sets = vec![Vec::new(); folds];
    match labels {
        Some(labels) => {
            let mut counter = 0usize;
            for &class in &[true, false] {
                for &i in order.iter().filter(|&&i| labels[i] == class) {
                    sets[counter % folds].push(i);
                    counter += 1;
                }
            }
        }
        None => {
            for (counter, &i) in order.iter().enumerate() {
                sets[counter % folds].push(i);
            }
        }
    }
    Ok(sets)
}

/// Train/test index pairs for the requested scheme.
fn cv_splits(
    n: usize,
    labels: Option<&[bool]>,
    cv: CvScheme,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    match cv {
        CvScheme::KFold { folds } => {
            let sets = kfold_test_sets(n, folds, labels, seed)?;
            Ok((0..folds)
                .map(|k| {
                    let test = sets[k].clone();
                    let train: Vec<usize> = (0..folds)
                        .filter(|&j| j != k)
                        .flat_map(|j| sets[j].iter().copied())
                        .collect();
                    (train, test)
                })
                .collect())
        }
        CvScheme::ShuffleSplit {
            train_fraction,
            repeats,
        } => {
            let n_train = ((n as f64 * train_fraction) as usize).clamp(1, n - 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..repeats)
                .map(|_| {
                    let order = shuffled(n, &mut rng);
                    let train = order[..n_train].to_vec();
                    let test = order[n_train..].to_vec();
                    (train, test)
                })
                .collect())
        }
    }
}

fn gather(y: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| y[i]).collect()
}

/// Per-split metric values: weighted AUROC for classification (labels must
/// be 0/1), MAE for regression. Splits are stratified for classification.
pub fn cross_validate(x: &FeatureMatrix, y: &[f64], spec: &ExperimentSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {n} rows",
            y.len()
        )));
    }

    let labels: Option<Vec<bool>> = match spec.task {
        Task::Classification => {
            if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidData(String::from(
                    "classification targets must be 0 or 1",
                )));
            }
            let labels: Vec<bool> = y.iter().map(|&v| v == 1.0).collect();
            let pos = labels.iter().filter(|&&l| l).count();
            if pos == 0 || pos == n {
                return Err(Error::InvalidData(String::from(
                    "classification needs both classes present",
                )));
            }
            Some(labels)
        }
        Task::Regression => None,
    };

    let splits = cv_splits(n, labels.as_deref(), spec.cv, spec.seed)?;
    let mut metrics = Vec::with_capacity(splits.len());
    for (fold, (train, test)) in splits.iter().enumerate() {
        let x_train = x.select_rows(train);
        let x_test = x.select_rows(test);
        let y_train = gather(y, train);
        let y_test = gather(y, test);

        match spec.task {
            Task::Classification => {
                let one = y_train.iter().filter(|&&v| v == 1.0).count();
                if one == 0 || one == y_train.len() {
                    return Err(Error::InvalidData(format!(
                        "fold {fold} training split has a single class"
                    )));
                }
                let model = boosting::fit(&x_train, &y_train, &spec.boost_params)?;
                let scores: Vec<f64> = (0..x_test.n_rows())
                    .map(|i| model.predict_proba(x_test.row(i)))
                    .collect::<Result<_>>()?;
                let test_labels: Vec<bool> = y_test.iter().map(|&v| v == 1.0).collect();
                metrics.push(stats::weighted_auroc(&scores, &test_labels)?);
            }
            Task::Regression => {
                let model = boosting::fit(&x_train, &y_train, &spec.boost_params)?;
                let preds: Vec<f64> = (0..x_test.n_rows())
                    .map(|i| model.predict_value(x_test.row(i)))
                    .collect::<Result<_>>()?;
                metrics.push(stats::mae(&preds, &y_test)?);
            }
        }
    }
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    WeightedAuroc,
    Mae,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::WeightedAuroc => "weighted AUROC",
            Metric::Mae => "MAE",
        }
    }

    /// Whether larger values are better (for best-cell marking).
    fn higher_is_better(self) -> bool {
        matches!(self, Metric::WeightedAuroc)
    }
}

/// One target's cross-validated outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub target: Target,
    pub mean: f64,
    /// Std of the fold values (population form).
    pub std: f64,
    pub folds: Vec<f64>,
}

/// Everything needed to reproduce a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub seed: u64,
    pub cv: CvScheme,
    pub boost_params: BoostParams,
    pub dataset_hash: String,
    pub feature_names: Vec<String>,
}

/// The outcome of one experiment over its targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: ExperimentId,
    pub task: Task,
    pub metric: Metric,
    pub rows: Vec<TargetResult>,
    pub provenance: RunProvenance,
}

fn annotate(e: Error, target: Target) -> Error {
    let wrap = |m: String| format!("target {}: {m}", target.name());
    match e {
        Error::InvalidData(m) => Error::InvalidData(wrap(m)),
        Error::InvalidInput(m) => Error::InvalidInput(wrap(m)),
        Error::SingularMatrix(m) => Error::SingularMatrix(wrap(m)),
        Error::ConstantColumn(m) => Error::ConstantColumn(wrap(m)),
        Error::DimensionMismatch(m) => Error::DimensionMismatch(wrap(m)),
        Error::NotFound(m) => Error::NotFound(wrap(m)),
        Error::Unscorable(m) => Error::Unscorable(wrap(m)),
    }
}

/// Derived columns (factor scores, GS) an experiment's feature blocks need,
/// computed from a fitted factor model.
pub fn derived_columns(
    d: &Dataset,
    blocks: &[FeatureBlock],
    fm: Option<&FactorModel>,
    weight_mode: WeightMode,
) -> Result<DerivedColumns> {
    let mut derived = DerivedColumns::default();
    let needs_factors = blocks.contains(&FeatureBlock::FactorScores);
    let needs_gs = blocks.contains(&FeatureBlock::GsScore);
    if !(needs_factors || needs_gs) {
        return Ok(derived);
    }
    let fm = fm.ok_or_else(|| {
        Error::InvalidInput(String::from(
            "experiment needs a factor model for derived columns",
        ))
    })?;
    if needs_factors {
        let genre_features = encode_features(d, &[FeatureBlock::Genres], None)?;
        let scores = factors::factor_scores(&genre_features, fm)?;
        let names = (1..=scores.cols()).map(|i| format!("factor_{i}")).collect();
        derived.factor_scores = Some((names, scores));
    }
    if needs_gs {
        let space = PreferenceSpace::from_model(fm);
        derived.gs_scores = Some(prefspace::gs_scores(d, &space, weight_mode)?);
    }
    Ok(derived)
}

/// Run one experiment across its targets: encode features, build labels
/// (median split) or raw scores, cross-validate, summarize.
pub fn run_experiment(
    d: &Dataset,
    spec: &ExperimentSpec,
    fm: Option<&FactorModel>,
) -> Result<ExperimentResult> {
    spec.validate()?;
    let derived = derived_columns(d, &spec.feature_blocks, fm, WeightMode::default())?;
    let x = encode_features(d, &spec.feature_blocks, Some(&derived))?;

    let mut rows = Vec::with_capacity(spec.targets.len());
    for &target in &spec.targets {
        let y: Vec<f64> = match spec.task {
            Task::Classification => median_split_labels(d, target)
                .map_err(|e| annotate(e, target))?
                .as_f64(),
            Task::Regression => d
                .respondents
                .iter()
                .map(|r| r.moral_scores.target_score(target))
                .collect(),
        };
        let folds = cross_validate(&x, &y, spec).map_err(|e| annotate(e, target))?;
        let mean = folds.iter().sum::<f64>() / folds.len() as f64;
        let std = stats::std_dev(&folds);
        rows.push(TargetResult {
            target,
            mean,
            std,
            folds,
        });
    }

    Ok(ExperimentResult {
        experiment: spec.id,
        task: spec.task,
        metric: match spec.task {
            Task::Classification => Metric::WeightedAuroc,
            Task::Regression => Metric::Mae,
        },
        rows,
        provenance: RunProvenance {
            seed: spec.seed,
            cv: spec.cv,
            boost_params: spec.boost_params,
            dataset_hash: d.content_hash(),
            feature_names: x.names().to_vec(),
        },
    })
}

/// Pick the best parameter set from a small grid by mean cross-validated
/// metric. Returns the winning index and its mean. Ties keep the earliest
/// entry.
pub fn grid_search(
    x: &FeatureMatrix,
    y: &[f64],
    spec: &ExperimentSpec,
    grid: &[BoostParams],
) -> Result<(usize, f64)> {
    if grid.is_empty() {
        return Err(Error::InvalidInput(String::from("empty parameter grid")));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, params) in grid.iter().enumerate() {
        let candidate = ExperimentSpec {
            boost_params: *params,
            ..spec.clone()
        };
        let folds = cross_validate(x, y, &candidate)?;
        let mean = folds.iter().sum::<f64>() / folds.len() as f64;
        let better = match best {
            None => true,
            Some((_, incumbent)) => match spec.task {
                Task::Classification => mean > incumbent,
                Task::Regression => mean < incumbent,
            },
        };
        if better {
            best = Some((i, mean));
        }
    }
    Ok(best.expect("grid is nonempty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

/// Column groups of the published result tables: the feature-engineering
/// comparison and the demographics ladder.
const GROUP_A: [ExperimentId; 3] = [ExperimentId::Ex1, ExperimentId::Ex2, ExperimentId::Ex3];
const GROUP_B: [ExperimentId; 4] = [
    ExperimentId::Ex1,
    ExperimentId::Ex4,
    ExperimentId::Ex5,
    ExperimentId::Ex6,
];

fn format_cell(row: &TargetResult) -> String {
    format!("{:.2} ({:.1})", row.mean, row.std * 100.0)
}

fn markdown_table(results: &[&ExperimentResult], columns: &[ExperimentId]) -> String {
    let included: Vec<&ExperimentResult> = columns
        .iter()
        .filter_map(|id| results.iter().find(|r| r.experiment == *id).copied())
        .collect();
    let targets: Vec<Target> = Target::ALL
        .into_iter()
        .filter(|t| included.iter().any(|r| r.rows.iter().any(|row| row.target == *t)))
        .collect();

    let mut out = String::new();
    out.push_str("| target |");
    for r in &included {
        out.push_str(&format!(" {} |", r.experiment.label()));
    }
    out.push('\n');
    out.push_str("| --- |");
    for _ in &included {
        out.push_str(" --- |");
    }
    out.push('\n');

    let metric = included[0].metric;
    for target in targets {
        out.push_str(&format!("| {} |", target.name()));
        let cells: Vec<Option<&TargetResult>> = included
            .iter()
            .map(|r| r.rows.iter().find(|row| row.target == target))
            .collect();
        let filled = cells.iter().flatten().count();
        let best = cells
            .iter()
            .flatten()
            .map(|row| row.mean)
            .fold(None::<f64>, |acc, m| {
                Some(match acc {
                    None => m,
                    Some(b) => {
                        if metric.higher_is_better() {
                            b.max(m)
                        } else {
                            b.min(m)
                        }
                    }
                })
            });
        for cell in cells {
            match cell {
                Some(row) => {
                    let text = format_cell(row);
                    if filled > 1 && Some(row.mean) == best {
                        out.push_str(&format!(" **{text}** |"));
                    } else {
                        out.push_str(&format!(" {text} |"));
                    }
                }
                None => out.push_str("  |"),
            }
        }
        out.push('\n');
    }
    out
}

fn markdown_report(results: &[ExperimentResult]) -> String {
    let mut out = String::new();
    for task in [Task::Classification, Task::Regression] {
        let task_results: Vec<&ExperimentResult> =
            results.iter().filter(|r| r.task == task).collect();
        if task_results.is_empty() {
            continue;
        }
        let metric = task_results[0].metric.label();
        out.push_str(&format!("## {} ({metric})\n\n", task.label()));

        let has = |ids: &[ExperimentId]| {
            task_results
                .iter()
                .any(|r| ids.contains(&r.experiment))
        };
        if has(&GROUP_A) {
            out.push_str(&markdown_table(&task_results, &GROUP_A));
            out.push('\n');
        }
        if has(&[ExperimentId::Ex4, ExperimentId::Ex5, ExperimentId::Ex6]) {
            out.push_str(&markdown_table(&task_results, &GROUP_B));
            out.push('\n');
        }
        if task_results
            .iter()
            .any(|r| r.experiment == ExperimentId::Custom)
        {
            out.push_str(&markdown_table(&task_results, &[ExperimentId::Custom]));
            out.push('\n');
        }
    }
    out
}

fn csv_report(results: &[ExperimentResult]) -> String {
    let mut out = String::from("task,experiment,metric,target,mean,std,folds\n");
    for r in results {
        for row in &r.rows {
            let folds: Vec<String> = row.folds.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.task.label(),
                r.experiment.label(),
                r.metric.label(),
                row.target.name(),
                row.mean,
                row.std,
                folds.join(";")
            ));
        }
    }
    out
}

/// Render a result set. JSON is the canonical lossless form; markdown
/// reproduces the published table layout with fold std shown as
/// "(std x 100)" and the best cell per row bolded.
pub fn report(results: &[ExperimentResult], format: ReportFormat) -> Result<String> {
    if results.is_empty() {
        return Err(Error::InvalidInput(String::from("no results to report")));
    }
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(results)
            .map_err(|e| Error::InvalidData(format!("serialization failed: {e}"))),
        ReportFormat::Csv => Ok(csv_report(results)),
        ReportFormat::Markdown => Ok(markdown_report(results)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        AgeBracket, ColumnKind, Education, Foundation, Gender, MoralScores, PoliticalParty,
        Provenance, Respondent,
    };
    use crate::linalg::Matrix;
    use alloc::collections::BTreeMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kfold_partitions_all_rows() {
        let sets = kfold_test_sets(100, 5, None, 7).unwrap();
        assert_eq!(sets.len(), 5);
        let mut seen = vec![false; 100];
        for set in &sets {
            assert_eq!(set.len(), 20);
            for &i in set {
                assert!(!seen[i], "row {i} in two folds");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<bool> = (0..103).map(|_| rng.gen::<f64>() < 0.31).collect();
        let n_pos = labels.iter().filter(|&&l| l).count();
        let sets = kfold_test_sets(labels.len(), 5, Some(&labels), 11).unwrap();
        for set in &sets {
            let pos = set.iter().filter(|&&i| labels[i]).count();
            let expected = n_pos as f64 * set.len() as f64 / labels.len() as f64;
            assert!(
                (pos as f64 - expected).abs() <= 1.0,
                "fold has {pos} positives, expected about {expected}"
            );
        }
    }

    #[test]
    fn folds_are_deterministic_per_seed() {
        let a = kfold_test_sets(50, 5, None, 9).unwrap();
        let b = kfold_test_sets(50, 5, None, 9).unwrap();
        let c = kfold_test_sets(50, 5, None, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    fn feature_matrix(cols: &[&[f64]]) -> FeatureMatrix {
        let n = cols[0].len();
        let p = cols.len();
        let mut data = vec![0.0; n * p];
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * p + j] = v;
            }
        }
        FeatureMatrix::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            (0..p).map(|j| format!("f{j}")).collect(),
            vec![ColumnKind::Score; p],
            Matrix::from_vec(n, p, data).unwrap(),
        )
        .unwrap()
    }

    fn quick_spec(task: Task, seed: u64) -> ExperimentSpec {
        let mut spec = ExperimentSpec::standard(ExperimentId::Custom, task, seed);
        spec.feature_blocks = vec![FeatureBlock::Genres]; // placeholder, bypassed in direct CV calls
        spec.boost_params.n_rounds = 25;
        spec
    }

    #[test]
    fn planted_signal_reaches_high_auroc() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 240;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x0
            .iter()
            .map(|&v| if v > 0.5 { 1.0 } else { 0.0 })
            .collect();
        let x = feature_matrix(&[&x0, &noise]);
        let folds = cross_validate(&x, &y, &quick_spec(Task::Classification, 2)).unwrap();
        let mean = folds.iter().sum::<f64>() / folds.len() as f64;
        assert!(mean >= 0.9, "mean AUROC {mean}");
        for v in &folds {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn permuted_labels_score_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 300;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let x1: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        // labels independent of features
        let y: Vec<f64> = (0..n).map(|_| if rng.gen::<f64>() < 0.5 { 1.0 } else { 0.0 }).collect();
        let x = feature_matrix(&[&x0, &x1]);
        let folds = cross_validate(&x, &y, &quick_spec(Task::Classification, 4)).unwrap();
        let mean = folds.iter().sum::<f64>() / folds.len() as f64;
        assert!((0.40..=0.60).contains(&mean), "null AUROC {mean}");
    }

    #[test]
    fn cross_validate_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 120;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x0.iter().map(|&v| if v > 0.4 { 1.0 } else { 0.0 }).collect();
        let x = feature_matrix(&[&x0]);
        let spec = quick_spec(Task::Classification, 77);
        assert_eq!(
            cross_validate(&x, &y, &spec).unwrap(),
            cross_validate(&x, &y, &spec).unwrap()
        );
    }

    #[test]
    fn regression_beats_median_baseline() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 300;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x0.iter().map(|&v| 10.0 * v + rng.gen::<f64>()).collect();
        let x = feature_matrix(&[&x0]);
        let folds = cross_validate(&x, &y, &quick_spec(Task::Regression, 8)).unwrap();
        let model_mae = folds.iter().sum::<f64>() / folds.len() as f64;
        let median = stats::median(&y).unwrap();
        let baseline: Vec<f64> = vec![median; n];
        let baseline_mae = stats::mae(&baseline, &y).unwrap();
        assert!(model_mae <= baseline_mae, "{model_mae} vs {baseline_mae}");
    }

    #[test]
    fn single_class_inputs_are_rejected() {
        let x = feature_matrix(&[&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]);
        let y = vec![1.0; 6];
        assert!(cross_validate(&x, &y, &quick_spec(Task::Classification, 1)).is_err());
    }

    #[test]
    fn shuffle_split_mode_works() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 200;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x0.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        let x = feature_matrix(&[&x0]);
        let mut spec = quick_spec(Task::Classification, 14);
        spec.cv = CvScheme::ShuffleSplit {
            train_fraction: 0.7,
            repeats: 4,
        };
        let folds = cross_validate(&x, &y, &spec).unwrap();
        assert_eq!(folds.len(), 4);
        let mean = folds.iter().sum::<f64>() / 4.0;
        assert!(mean > 0.9);
    }

    /// Survey rows whose care score tracks the christian rating and whose
    /// fairness score is pure noise.
    fn planted_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let respondents = (0..n)
            .map(|i| {
                let mut ratings = BTreeMap::new();
                for genre in crate::dataset::GENRES {
                    ratings.insert(genre.to_string(), rng.gen_range(1..=5));
                }
                let christian = ratings["christian"] as f64;
                Respondent {
                    id: format!("r{i}"),
                    age: AgeBracket::ALL[rng.gen_range(0..6)],
                    gender: if rng.gen::<f64>() < 0.5 {
                        Gender::Female
                    } else {
                        Gender::Male
                    },
                    education: Education::ALL[rng.gen_range(0..6)],
                    party: PoliticalParty::ALL[rng.gen_range(0..6)],
                    genre_ratings: ratings,
                    moral_scores: MoralScores {
                        care: 3.0 * christian + rng.gen::<f64>(),
                        fairness: rng.gen::<f64>() * 10.0,
                        loyalty: 2.0 * christian + rng.gen::<f64>(),
                        authority: 2.0 * christian + rng.gen::<f64>(),
                        purity: 2.0 * christian + rng.gen::<f64>(),
                    },
                    catch_items: BTreeMap::new(),
                }
            })
            .collect();
        Dataset::new(respondents, Provenance::new("planted")).unwrap()
    }

    fn fast_standard(id: ExperimentId, task: Task, seed: u64) -> ExperimentSpec {
        let mut spec = ExperimentSpec::standard(id, task, seed);
        spec.boost_params.n_rounds = 30;
        spec
    }

    #[test]
    fn ex1_classification_has_seven_rows_and_finds_signal() {
        let d = planted_dataset(220, 31);
        let spec = fast_standard(ExperimentId::Ex1, Task::Classification, 31);
        let result = run_experiment(&d, &spec, None).unwrap();
        assert_eq!(result.rows.len(), 7);
        assert_eq!(result.provenance.feature_names.len(), 13);
        assert_eq!(result.metric, Metric::WeightedAuroc);

        let care = result
            .rows
            .iter()
            .find(|r| r.target == Target::Foundation(Foundation::Care))
            .unwrap();
        assert!(care.mean > 0.8, "care AUROC {}", care.mean);
        let fairness = result
            .rows
            .iter()
            .find(|r| r.target == Target::Foundation(Foundation::Fairness))
            .unwrap();
        assert!(
            (0.40..=0.60).contains(&fairness.mean),
            "fairness AUROC {}",
            fairness.mean
        );
        // mean is the exact arithmetic mean of the folds
        for row in &result.rows {
            let mean = row.folds.iter().sum::<f64>() / row.folds.len() as f64;
            assert_eq!(row.mean, mean);
        }
    }

    #[test]
    fn ex3_requires_factor_model_and_has_one_column() {
        let d = planted_dataset(160, 37);
        let spec = fast_standard(ExperimentId::Ex3, Task::Classification, 37);
        assert!(matches!(
            run_experiment(&d, &spec, None),
            Err(Error::InvalidInput(_))
        ));

        let genre_features = encode_features(&d, &[FeatureBlock::Genres], None).unwrap();
        let fm = factors::fit_factor_model(&genre_features, &factors::FactorOptions::default())
            .unwrap();
        let result = run_experiment(&d, &spec, Some(&fm)).unwrap();
        assert_eq!(result.provenance.feature_names, vec![String::from("gs_score")]);
    }

    #[test]
    fn ex2_uses_five_factor_columns() {
        let d = planted_dataset(160, 41);
        let genre_features = encode_features(&d, &[FeatureBlock::Genres], None).unwrap();
        let fm = factors::fit_factor_model(&genre_features, &factors::FactorOptions::default())
            .unwrap();
        let spec = fast_standard(ExperimentId::Ex2, Task::Regression, 41);
        let result = run_experiment(&d, &spec, Some(&fm)).unwrap();
        assert_eq!(result.provenance.feature_names.len(), 5);
        assert_eq!(result.metric, Metric::Mae);
        for row in &result.rows {
            assert!(row.mean >= 0.0);
        }
    }

    #[test]
    fn run_is_reproducible_as_json() {
        let d = planted_dataset(140, 53);
        let spec = fast_standard(ExperimentId::Ex1, Task::Classification, 53);
        let a = run_experiment(&d, &spec, None).unwrap();
        let b = run_experiment(&d, &spec, None).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn grid_search_prefers_the_better_setting() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let n = 160;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let x1: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        // additive signal: a single one-feature stump cannot rank this
        // perfectly, so depth of training separates the grid entries
        let y: Vec<f64> = x0
            .iter()
            .zip(&x1)
            .map(|(&a, &b)| if a + b > 1.0 { 1.0 } else { 0.0 })
            .collect();
        let x = feature_matrix(&[&x0, &x1]);
        let spec = quick_spec(Task::Classification, 60);
        let grid = [
            BoostParams {
                n_rounds: 1,
                learning_rate: 0.01,
                max_depth: 1,
                ..BoostParams::default()
            },
            BoostParams {
                n_rounds: 40,
                ..BoostParams::default()
            },
        ];
        let (best, mean) = grid_search(&x, &y, &spec, &grid).unwrap();
        assert_eq!(best, 1);
        assert!(mean > 0.9);
    }

    fn fake_result(
        id: ExperimentId,
        task: Task,
        rows: &[(Target, f64, f64)],
    ) -> ExperimentResult {
        ExperimentResult {
            experiment: id,
            task,
            metric: match task {
                Task::Classification => Metric::WeightedAuroc,
                Task::Regression => Metric::Mae,
            },
            rows: rows
                .iter()
                .map(|&(target, mean, std)| TargetResult {
                    target,
                    mean,
                    std,
                    folds: vec![mean; 5],
                })
                .collect(),
            provenance: RunProvenance {
                seed: 0,
                cv: CvScheme::default(),
                boost_params: BoostParams::default(),
                dataset_hash: String::from("deadbeef"),
                feature_names: vec![],
            },
        }
    }

    #[test]
    fn markdown_report_bolds_best_and_formats_std() {
        let results = vec![
            fake_result(
                ExperimentId::Ex1,
                Task::Classification,
                &[(Target::Binding, 0.57, 0.037), (Target::Individualizing, 0.52, 0.02)],
            ),
            fake_result(
                ExperimentId::Ex2,
                Task::Classification,
                &[(Target::Binding, 0.61, 0.01), (Target::Individualizing, 0.50, 0.03)],
            ),
        ];
        let md = report(&results, ReportFormat::Markdown).unwrap();
        assert!(md.contains("| target | EX1 | EX2 |"), "{md}");
        assert!(md.contains("0.57 (3.7)"), "{md}");
        assert!(md.contains("**0.61 (1.0)**"), "{md}");
        // regression section absent when no regression results
        assert!(!md.contains("MAE"));
    }

    #[test]
    fn single_result_renders_single_column() {
        let results = vec![fake_result(
            ExperimentId::Ex1,
            Task::Regression,
            &[(Target::Binding, 3.4, 0.2)],
        )];
        let md = report(&results, ReportFormat::Markdown).unwrap();
        assert!(md.contains("| target | EX1 |"));
        assert_eq!(md.matches("| binding |").count(), 1);
        assert!(report(&[], ReportFormat::Markdown).is_err());
    }

    #[test]
    fn full_grid_renders_both_table_groups() {
        let rows: Vec<(Target, f64, f64)> = Target::ALL
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, 0.5 + i as f64 * 0.01, 0.01))
            .collect();
        let results: Vec<ExperimentResult> = ExperimentId::STANDARD
            .into_iter()
            .map(|id| fake_result(id, Task::Classification, &rows))
            .collect();
        let md = report(&results, ReportFormat::Markdown).unwrap();
        assert!(md.contains("| target | EX1 | EX2 | EX3 |"));
        assert!(md.contains("| target | EX1 | EX4 | EX5 | EX6 |"));
        // 7 target rows in each of the two tables
        assert_eq!(md.matches("| care |").count(), 2);
    }

    #[test]
    fn json_report_round_trips_fold_values() {
        let results = vec![fake_result(
            ExperimentId::Ex1,
            Task::Classification,
            &[(Target::Binding, 0.57, 0.037)],
        )];
        let json = report(&results, ReportFormat::Json).unwrap();
        let back: Vec<ExperimentResult> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, results);
        let csv = report(&results, ReportFormat::Csv).unwrap();
        assert!(csv.starts_with("task,experiment,metric,target,mean,std,folds"));
        assert!(csv.contains("classification,EX1,weighted AUROC,binding,0.57,0.037,"));
    }

    #[test]
    fn spec_validation_catches_mismatches() {
        let mut spec = ExperimentSpec::standard(ExperimentId::Ex1, Task::Classification, 1);
        spec.boost_params.objective = Objective::SquaredError;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::standard(ExperimentId::Custom, Task::Classification, 1);
        assert!(spec.validate().is_err()); // custom with no blocks
        spec.feature_blocks = vec![FeatureBlock::Age];
        spec.cv = CvScheme::KFold { folds: 1 };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn experiment_labels_round_trip() {
        for id in ExperimentId::STANDARD {
            assert_eq!(ExperimentId::from_label(id.label()), Some(id));
        }
        assert_eq!(ExperimentId::from_label("ex3"), Some(ExperimentId::Ex3));
        assert_eq!(ExperimentId::from_label("EX9"), None);
    }
}

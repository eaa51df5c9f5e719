//! The `ethos` command line: ingest survey CSVs, fit factor models, score
//! preference diversity, run the experiment grid, and export attributions
//! and synthetic data.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use ethos_cli::config::RunConfig;
use ethos_cli::io::{self, CsvSchema};
use ethos_core::attribution;
use ethos_core::boosting;
use ethos_core::dataset::{
    encode_features, filter_catch_failures, median_split_labels, CatchRule, Dataset, FeatureBlock,
    Target,
};
use ethos_core::experiments::{
    self, derived_columns, report, ExperimentId, ExperimentResult, ExperimentSpec, ReportFormat,
    Task,
};
use ethos_core::factors::{fit_factor_model, FactorModel, FactorOptions, Rotation};
use ethos_core::prefspace::{self, PreferenceSpace, VariableGroup, WeightMode};
use ethos_core::synth;

#[derive(Parser)]
#[command(
    name = "ethos",
    about = "Music-preference survey pipeline: factor embeddings, GS diversity, boosted-tree experiments, Shapley attribution"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a survey CSV, optionally apply catch-item filters, and emit the
    /// canonical dataset JSON.
    Ingest {
        /// Survey CSV path.
        input: PathBuf,
        /// Dataset JSON destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Catch rule as item=value[|value...]; repeatable.
        #[arg(long = "catch")]
        catch: Vec<String>,
    },
    /// Fit the factor model on the genre ratings and emit it as JSON.
    Factors {
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        factors: usize,
        /// promax, varimax, or none.
        #[arg(long, default_value = "promax")]
        rotation: String,
        /// Promax power; used only with --rotation promax.
        #[arg(long, default_value_t = 4)]
        kappa: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score every respondent's generalist-specialist (GS) diversity.
    Gs {
        input: PathBuf,
        /// Factor model JSON; fitted from the input when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// rating or presence.
        #[arg(long, default_value = "rating")]
        weights: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Spearman correlation table over genres, demographics, moral scores,
    /// and the GS score.
    Correlate {
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run experiments over the seven targets with cross-validation.
    Run {
        input: PathBuf,
        /// EX1..EX6 range, comma list (EX1,EX3), single id, or "all".
        #[arg(long = "spec", default_value = "all")]
        specs: String,
        /// clf or reg.
        #[arg(long, default_value = "clf")]
        task: String,
        /// Factor model JSON for EX2/EX3; fitted from the input when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// JSON config file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// json (canonical), csv, or md.
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train one model on the full data and export exact SHAP attributions.
    Shap {
        input: PathBuf,
        #[arg(long = "spec", default_value = "EX1")]
        spec: String,
        #[arg(long, default_value = "clf")]
        task: String,
        /// care, fairness, loyalty, authority, purity, individualizing, or
        /// binding.
        #[arg(long, default_value = "binding")]
        target: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Respondent-by-feature phi matrix CSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Beeswarm records JSON for the top features.
        #[arg(long)]
        beeswarm: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Trained ensemble JSON dump.
        #[arg(long)]
        ensemble_out: Option<PathBuf>,
    },
    /// Generate a synthetic survey with planted ground truth.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Ground truth JSON to generate from; the built-in default when
        /// omitted.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Survey CSV destination.
        #[arg(long)]
        output: PathBuf,
        /// Ground truth sidecar destination; <output>.truth.json when
        /// omitted.
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Re-render a results JSON file as json, csv, or md.
    Report {
        input: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_task(s: &str) -> Result<Task> {
    match s {
        "clf" | "classification" => Ok(Task::Classification),
        "reg" | "regression" => Ok(Task::Regression),
        other => bail!("unknown task {other:?}; expected clf or reg"),
    }
}

fn parse_format(s: &str) -> Result<ReportFormat> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        "md" | "markdown" => Ok(ReportFormat::Markdown),
        other => bail!("unknown format {other:?}; expected json, csv, or md"),
    }
}

fn parse_one_spec(s: &str) -> Result<ExperimentId> {
    ExperimentId::from_label(s)
        .filter(|id| *id != ExperimentId::Custom)
        .ok_or_else(|| anyhow!("unknown experiment {s:?}; expected EX1..EX6"))
}

/// "all", "EX2..EX5", "EX1,EX4", or a single id.
fn parse_specs(s: &str) -> Result<Vec<ExperimentId>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(ExperimentId::STANDARD.to_vec());
    }
    if let Some((lo, hi)) = s.split_once("..") {
        let lo = parse_one_spec(lo)?;
        let hi = parse_one_spec(hi)?;
        let all = ExperimentId::STANDARD;
        let i = all.iter().position(|id| *id == lo).unwrap();
        let j = all.iter().position(|id| *id == hi).unwrap();
        if i > j {
            bail!("empty experiment range {s:?}");
        }
        return Ok(all[i..=j].to_vec());
    }
    s.split(',').map(|part| parse_one_spec(part.trim())).collect()
}

fn parse_catch_rules(flags: &[String]) -> Result<Vec<CatchRule>> {
    flags
        .iter()
        .map(|flag| {
            let (item, values) = flag
                .split_once('=')
                .ok_or_else(|| anyhow!("catch rule {flag:?} is not item=value[|value...]"))?;
            if values.is_empty() {
                bail!("catch rule {flag:?} lists no passing values");
            }
            Ok(CatchRule {
                item: item.to_string(),
                pass_values: values.split('|').map(str::to_string).collect(),
            })
        })
        .collect()
}

fn parse_weight_mode(s: &str) -> Result<WeightMode> {
    match s {
        "rating" => Ok(WeightMode::Rating),
        "presence" => Ok(WeightMode::Presence),
        other => bail!("unknown weight mode {other:?}; expected rating or presence"),
    }
}

fn load_dataset(input: &Path) -> Result<Dataset> {
    io::load_survey(input, &CsvSchema::default())
}

fn factor_options(cfg: &RunConfig, rotation: Rotation) -> FactorOptions {
    FactorOptions {
        n_factors: cfg.factors.unwrap_or(5),
        rotation,
        ..FactorOptions::default()
    }
}

/// Load the model from disk or fit it on the input's genre ratings.
fn obtain_model(d: &Dataset, path: Option<&Path>, cfg: &RunConfig) -> Result<FactorModel> {
    match path {
        Some(p) => io::read_json(p),
        None => {
            let x = encode_features(d, &[FeatureBlock::Genres], None)?;
            let opts = factor_options(
                cfg,
                Rotation::Promax {
                    kappa: cfg.kappa.unwrap_or(4),
                },
            );
            Ok(fit_factor_model(&x, &opts)?)
        }
    }
}

fn needs_model(blocks: &[FeatureBlock]) -> bool {
    blocks.contains(&FeatureBlock::FactorScores) || blocks.contains(&FeatureBlock::GsScore)
}

fn merged_config(
    config: Option<&Path>,
    flags: RunConfig,
) -> Result<RunConfig> {
    let base = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(base.overridden_by(&flags))
}

fn cmd_ingest(input: &Path, output: Option<&Path>, catch: &[String]) -> Result<()> {
    let rules = parse_catch_rules(catch)?;
    let d = load_dataset(input)?;
    let d = filter_catch_failures(&d, &rules)?;
    if d.is_empty() {
        bail!("all respondents failed the catch rules");
    }
    let mut text = serde_json::to_string_pretty(&d)?;
    text.push('\n');
    write_output(output, &text)?;
    eprintln!(
        "ingested {} respondents from {} (hash {})",
        d.len(),
        input.display(),
        &d.content_hash()[..12]
    );
    Ok(())
}

fn cmd_factors(
    input: &Path,
    factors: usize,
    rotation: &str,
    kappa: u32,
    output: Option<&Path>,
) -> Result<()> {
    let rotation = match rotation {
        "promax" => Rotation::Promax { kappa },
        "varimax" => Rotation::Varimax,
        "none" => Rotation::None,
        other => bail!("unknown rotation {other:?}; expected promax, varimax, or none"),
    };
    let d = load_dataset(input)?;
    let x = encode_features(&d, &[FeatureBlock::Genres], None)?;
    let opts = FactorOptions {
        n_factors: factors,
        rotation,
        ..FactorOptions::default()
    };
    let model = fit_factor_model(&x, &opts)?;
    let mut text = serde_json::to_string_pretty(&model)?;
    text.push('\n');
    write_output(output, &text)?;
    eprintln!(
        "fitted {} factors on {} respondents: explained variance {:.3}, converged {}, {} capped communalities",
        model.n_factors(),
        d.len(),
        model.explained_variance,
        model.converged,
        model.heywood.len()
    );
    Ok(())
}

fn cmd_gs(
    input: &Path,
    model: Option<&Path>,
    weights: &str,
    output: Option<&Path>,
) -> Result<()> {
    let mode = parse_weight_mode(weights)?;
    let d = load_dataset(input)?;
    let fm = obtain_model(&d, model, &RunConfig::default())?;
    let space = PreferenceSpace::from_model(&fm);
    let scores = prefspace::gs_scores(&d, &space, mode)?;
    write_output(output, &io::gs_to_csv(&d.ids(), &scores)?)
}

fn cmd_correlate(
    input: &Path,
    model: Option<&Path>,
    format: &str,
    output: Option<&Path>,
) -> Result<()> {
    let d = load_dataset(input)?;
    let fm = obtain_model(&d, model, &RunConfig::default())?;
    let space = PreferenceSpace::from_model(&fm);
    let gs = prefspace::gs_scores(&d, &space, WeightMode::Rating)?;
    let rows = prefspace::correlation_report(
        &d,
        &[
            VariableGroup::Genres,
            VariableGroup::Demographics,
            VariableGroup::MoralFoundations,
            VariableGroup::SuperiorFoundations,
            VariableGroup::GsScore,
        ],
        Some(&gs),
    )?;
    let text = match format {
        "csv" => io::correlations_to_csv(&rows),
        "json" => {
            let mut t = serde_json::to_string_pretty(&rows)?;
            t.push('\n');
            t
        }
        other => bail!("unknown format {other:?}; expected csv or json"),
    };
    write_output(output, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    input: &Path,
    specs: &str,
    task: &str,
    model: Option<&Path>,
    cfg: RunConfig,
    format: &str,
    output: Option<&Path>,
) -> Result<()> {
    let ids = parse_specs(specs)?;
    let task = parse_task(task)?;
    let format = parse_format(format)?;
    let d = load_dataset(input)?;
    let seed = cfg.seed.unwrap_or(0);

    let model_needed = ids.iter().any(|id| needs_model(&id.feature_blocks()));
    let fm = if model_needed {
        Some(obtain_model(&d, model, &cfg)?)
    } else {
        None
    };

    let mut results: Vec<ExperimentResult> = Vec::with_capacity(ids.len());
    for id in ids {
        let mut spec = ExperimentSpec::standard(id, task, seed);
        cfg.apply_to_spec(&mut spec);
        let result = experiments::run_experiment(&d, &spec, fm.as_ref())
            .with_context(|| format!("experiment {} failed", id.label()))?;
        eprintln!(
            "{} {}: {} targets done",
            id.label(),
            task.label(),
            result.rows.len()
        );
        results.push(result);
    }
    write_output(output, &report(&results, format)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_shap(
    input: &Path,
    spec: &str,
    task: &str,
    target: &str,
    model: Option<&Path>,
    cfg: RunConfig,
    output: Option<&Path>,
    beeswarm: Option<&Path>,
    top_k: usize,
    ensemble_out: Option<&Path>,
) -> Result<()> {
    let id = parse_one_spec(spec)?;
    let task = parse_task(task)?;
    let target = Target::from_name(target)
        .ok_or_else(|| anyhow!("unknown target {target:?}"))?;
    let d = load_dataset(input)?;

    let blocks = id.feature_blocks();
    let fm = if needs_model(&blocks) {
        Some(obtain_model(&d, model, &cfg)?)
    } else {
        None
    };
    let derived = derived_columns(&d, &blocks, fm.as_ref(), WeightMode::default())?;
    let x = encode_features(&d, &blocks, Some(&derived))?;

    let y: Vec<f64> = match task {
        Task::Classification => median_split_labels(&d, target)?.as_f64(),
        Task::Regression => d
            .respondents
            .iter()
            .map(|r| r.moral_scores.target_score(target))
            .collect(),
    };

    let mut spec = ExperimentSpec::standard(id, task, cfg.seed.unwrap_or(0));
    cfg.apply_to_spec(&mut spec);
    let ensemble = boosting::fit(&x, &y, &spec.boost_params)?;
    let global = attribution::global_importance(&ensemble, &x)?;

    write_output(output, &io::shap_to_csv(&global))?;
    if let Some(p) = beeswarm {
        let records = attribution::beeswarm_export(&global, top_k)?;
        io::write_json(p, &records)?;
    }
    if let Some(p) = ensemble_out {
        io::write_json(p, &ensemble)?;
    }
    eprintln!(
        "{} {} on target {}: top features by mean |phi|",
        id.label(),
        task.label(),
        target.name()
    );
    for (rank, f) in global.features.iter().take(top_k).enumerate() {
        eprintln!("{:>3}. {} {:.6}", rank + 1, f.feature, f.mean_abs_phi);
    }
    Ok(())
}

fn cmd_synth(
    n: usize,
    seed: u64,
    truth: Option<&Path>,
    output: &Path,
    truth_out: Option<&Path>,
) -> Result<()> {
    let g = match truth {
        Some(p) => io::read_json(p)?,
        None => synth::survey_like(seed),
    };
    let (d, g) = synth::generate(&g, n, &synth::Marginals::survey())?;
    std::fs::write(output, io::survey_to_csv(&d)?)
        .with_context(|| format!("cannot write {}", output.display()))?;

    let sidecar = match truth_out {
        Some(p) => p.to_path_buf(),
        None => {
            let mut p = output.as_os_str().to_owned();
            p.push(".truth.json");
            PathBuf::from(p)
        }
    };
    io::write_json(&sidecar, &g)?;
    eprintln!(
        "wrote {} synthetic respondents to {} (truth sidecar {})",
        d.len(),
        output.display(),
        sidecar.display()
    );
    Ok(())
}

fn cmd_report(input: &Path, format: &str, output: Option<&Path>) -> Result<()> {
    let results: Vec<ExperimentResult> = io::read_json(input)?;
    write_output(output, &report(&results, parse_format(format)?)?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Ingest {
            input,
            output,
            catch,
        } => cmd_ingest(&input, output.as_deref(), &catch),
        Cmd::Factors {
            input,
            factors,
            rotation,
            kappa,
            output,
        } => cmd_factors(&input, factors, &rotation, kappa, output.as_deref()),
        Cmd::Gs {
            input,
            model,
            weights,
            output,
        } => cmd_gs(&input, model.as_deref(), &weights, output.as_deref()),
        Cmd::Correlate {
            input,
            model,
            format,
            output,
        } => cmd_correlate(&input, model.as_deref(), &format, output.as_deref()),
        Cmd::Run {
            input,
            specs,
            task,
            model,
            config,
            seed,
            folds,
            rounds,
            depth,
            lr,
            lambda,
            format,
            output,
        } => {
            let cfg = merged_config(
                config.as_deref(),
                RunConfig {
                    seed,
                    folds,
                    rounds,
                    depth,
                    lr,
                    lambda,
                    ..RunConfig::default()
                },
            )?;
            cmd_run(
                &input,
                &specs,
                &task,
                model.as_deref(),
                cfg,
                &format,
                output.as_deref(),
            )
        }
        Cmd::Shap {
            input,
            spec,
            task,
            target,
            model,
            config,
            seed,
            rounds,
            depth,
            lr,
            lambda,
            output,
            beeswarm,
            top_k,
            ensemble_out,
        } => {
            let cfg = merged_config(
                config.as_deref(),
                RunConfig {
                    seed,
                    rounds,
                    depth,
                    lr,
                    lambda,
                    ..RunConfig::default()
                },
            )?;
            cmd_shap(
                &input,
                &spec,
                &task,
                &target,
                model.as_deref(),
                cfg,
                output.as_deref(),
                beeswarm.as_deref(),
                top_k,
                ensemble_out.as_deref(),
            )
        }
        Cmd::Synth {
            n,
            seed,
            truth,
            output,
            truth_out,
        } => cmd_synth(n, seed, truth.as_deref(), &output, truth_out.as_deref()),
        Cmd::Report {
            input,
            format,
            output,
        } => cmd_report(&input, &format, output.as_deref()),
    }
}

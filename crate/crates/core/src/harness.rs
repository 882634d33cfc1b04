//! End-to-end benchmark: fit all three fusion models on each feature set,
//! select the coupling, score everything on the held-out half, and emit
//! CSV/JSON reports plus the fitted models.
//!
//! Feature sets are independent work units and may run on a thread pool;
//! results are assembled in manifest order, so output bytes do not depend
//! on the parallelism level.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    self, fit_multivariate, fit_naive_bayes, parameter_count, predict_coupled,
    predict_multivariate, predict_naive_bayes, select_coupling, CoupledFusionModel,
    CovarianceMode, Model, ModelKind, Posterior, ShrinkageTarget, VarianceMode,
};
use crate::dataset::{self, FeatureSetName, LabeledDataset, Manifest, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{
    generalized_mean, percent_correct, risk_profile, RiskProfile, TrueClassProbabilities,
};

/// Which half drives coupling selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectOn {
    Train,
    Test,
}

/// Everything that pins one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub split: SplitSpec,
    pub shrinkage: f64,
    pub select_on: SelectOn,
    pub kappa_grid: Vec<f64>,
    pub risk_grid: Vec<f64>,
    /// Probability floor for geometric means and Risk Profiles.
    pub floor: f64,
    pub variance_mode: VarianceMode,
    pub covariance_mode: CovarianceMode,
    /// Shrink toward `(tr S/d)·I` instead of the floored diagonal of `S`.
    pub scaled_identity_target: bool,
    /// Relative factor for the variance floor: `floor = factor · max_j
    /// Var(feature j)` computed over the full 2000-row matrix.
    pub variance_floor_factor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            split: SplitSpec::FIRST_HALF,
            shrinkage: 0.1,
            select_on: SelectOn::Train,
            kappa_grid: classifiers::default_kappa_grid(),
            risk_grid: crate::metrics::default_risk_grid(),
            floor: 1e-14,
            variance_mode: VarianceMode::Pooled,
            covariance_mode: CovarianceMode::Pooled,
            scaled_identity_target: false,
            variance_floor_factor: 1e-9,
        }
    }
}

impl ExperimentConfig {
    fn shrink_target(&self, variance_floor: f64) -> ShrinkageTarget {
        if self.scaled_identity_target {
            ShrinkageTarget::ScaledIdentity
        } else {
            ShrinkageTarget::Diagonal {
                floor: variance_floor,
            }
        }
    }
}

/// Scores of one model on one feature set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelScores {
    pub kind: ModelKind,
    pub parameter_count: u64,
    pub percent_correct: f64,
    /// Geometric mean of true-class probabilities at the configured floor.
    pub probability_accuracy: f64,
    /// Same, with no floor at all (zero if any report underflowed to zero).
    pub probability_accuracy_unfloored: f64,
    pub risk_profile: RiskProfile,
}

/// One grid point of the coupling sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub kappa: f64,
    pub score: f64,
}

/// Full results for one feature set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSetReport {
    pub name: FeatureSetName,
    pub dim: usize,
    pub selected_kappa: f64,
    pub selection_score: f64,
    pub sweep: Vec<SweepPoint>,
    pub models: Vec<ModelScores>,
}

/// The whole experiment: per-feature-set results plus the configuration
/// that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub feature_sets: Vec<FeatureSetReport>,
}

fn predict_all<F>(test: &LabeledDataset, mut f: F) -> Result<Vec<Posterior>>
where
    F: FnMut(&[f64]) -> Result<Posterior>,
{
    (0..test.len()).map(|i| f(test.features.row(i))).collect()
}

fn scores_for(
    kind: ModelKind,
    dim: usize,
    posteriors: &[Posterior],
    labels: &[usize],
    cfg: &ExperimentConfig,
) -> Result<ModelScores> {
    let tcp = TrueClassProbabilities::from_posteriors(posteriors, labels)?;
    Ok(ModelScores {
        kind,
        parameter_count: parameter_count(kind, dim),
        percent_correct: percent_correct(posteriors, labels)?,
        probability_accuracy: generalized_mean(&tcp, 0.0, cfg.floor),
        probability_accuracy_unfloored: generalized_mean(&tcp, 0.0, 0.0),
        risk_profile: risk_profile(&tcp, &cfg.risk_grid, cfg.floor)?,
    })
}

/// Runs one feature set end to end; returns its report and the three
/// fitted models in Table order.
pub fn run_feature_set(
    name: FeatureSetName,
    data: &LabeledDataset,
    cfg: &ExperimentConfig,
) -> Result<(FeatureSetReport, Vec<Model>)> {
    let dim = data.dim();
    // Variance floor from the full matrix, so both halves see one scale.
    let global_max_var = column_variance_max(data);
    let variance_floor = (cfg.variance_floor_factor * global_max_var).max(f64::MIN_POSITIVE);

    let (train, test) = dataset::split(data, &cfg.split)?;

    let nb = fit_naive_bayes(&train, variance_floor, cfg.variance_mode)?;
    let mv = fit_multivariate(
        &train,
        cfg.shrinkage,
        cfg.covariance_mode,
        cfg.shrink_target(variance_floor),
    )?;

    let selection_data = match cfg.select_on {
        SelectOn::Train => &train,
        SelectOn::Test => &test,
    };
    let mut sweep = Vec::with_capacity(cfg.kappa_grid.len());
    for &kv in &cfg.kappa_grid {
        if kv <= -2.0 {
            continue;
        }
        let model = CoupledFusionModel::new(nb.clone(), crate::Coupling::new(kv)?)?;
        let score = classifiers::score_coupled(&model, selection_data, cfg.floor)?;
        sweep.push(SweepPoint { kappa: kv, score });
    }
    let (selected, selection_score) =
        select_coupling(&nb, selection_data, &cfg.kappa_grid, cfg.floor)?;
    let coupled = CoupledFusionModel::new(nb.clone(), selected)?;

    let labels = &test.labels;
    let nb_posts = predict_all(&test, |x| predict_naive_bayes(&nb, x))?;
    let coupled_posts = predict_all(&test, |x| predict_coupled(&coupled, x))?;
    let mv_posts = predict_all(&test, |x| predict_multivariate(&mv, x))?;

    let models = vec![
        scores_for(ModelKind::NaiveBayes, dim, &nb_posts, labels, cfg)?,
        scores_for(ModelKind::Coupled, dim, &coupled_posts, labels, cfg)?,
        scores_for(ModelKind::Multivariate, dim, &mv_posts, labels, cfg)?,
    ];

    Ok((
        FeatureSetReport {
            name,
            dim,
            selected_kappa: selected.get(),
            selection_score,
            sweep,
            models,
        },
        vec![
            Model::NaiveBayes(nb),
            Model::Coupled(coupled),
            Model::Multivariate(mv),
        ],
    ))
}

fn column_variance_max(data: &LabeledDataset) -> f64 {
    let d = data.dim();
    let n = data.len() as f64;
    let mut mean = vec![0.0; d];
    for i in 0..data.len() {
        for (m, &x) in mean.iter_mut().zip(data.features.row(i)) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for i in 0..data.len() {
        for ((v, &m), &x) in var.iter_mut().zip(&mean).zip(data.features.row(i)) {
            let diff = x - m;
            *v += diff * diff;
        }
    }
    var.iter().map(|v| v / n).fold(0.0, f64::max)
}

/// Loads every manifest entry, runs all feature sets (optionally on a
/// thread pool) and assembles the report in manifest order.
pub fn run_experiment(
    manifest: &Manifest,
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<(ExperimentReport, Vec<(FeatureSetName, Vec<Model>)>)> {
    let mut loaded = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let matrix = dataset::load_feature_file(&entry.path, entry.dim)?;
        let labeled = LabeledDataset::new(matrix, dataset::mfeat_labels(), dataset::MFEAT_CLASSES)?;
        loaded.push((entry.name, labeled));
    }

    let results: Vec<Result<(FeatureSetReport, Vec<Model>)>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            loaded
                .par_iter()
                .map(|(name, data)| run_feature_set(*name, data, cfg))
                .collect()
        })
    } else {
        loaded
            .iter()
            .map(|(name, data)| run_feature_set(*name, data, cfg))
            .collect()
    };

    let mut feature_sets = Vec::with_capacity(results.len());
    let mut models = Vec::with_capacity(results.len());
    for ((name, _), result) in loaded.iter().zip(results) {
        let (report, fitted) = result?;
        feature_sets.push(report);
        models.push((*name, fitted));
    }
    Ok((
        ExperimentReport {
            config: cfg.clone(),
            feature_sets,
        },
        models,
    ))
}

fn fmt_float(v: f64) -> String {
    // Shortest representation that round-trips; deterministic across runs.
    format!("{v}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `table1.csv`, `fig2.csv`, `fig3a.csv`, one `fig3b_<feature>.csv`
/// per feature set, `report.json`, gnuplot scripts, and the fitted models.
/// Returns the paths written.
pub fn emit_report(
    report: &ExperimentReport,
    models: &[(FeatureSetName, Vec<Model>)],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let mut table1 = String::from("feature,model,params,pct_correct,prob_accuracy\n");
    let mut fig2 = String::from("feature,model,params,prob_accuracy\n");
    for fs_report in &report.feature_sets {
        for m in &fs_report.models {
            let _ = writeln!(
                table1,
                "{},{},{},{},{}",
                fs_report.name,
                m.kind,
                m.parameter_count,
                fmt_float(m.percent_correct),
                fmt_float(m.probability_accuracy)
            );
            let _ = writeln!(
                fig2,
                "{},{},{},{}",
                fs_report.name,
                m.kind,
                m.parameter_count,
                fmt_float(m.probability_accuracy)
            );
        }
    }
    let p = out_dir.join("table1.csv");
    write_file(&p, &table1)?;
    written.push(p);
    let p = out_dir.join("fig2.csv");
    write_file(&p, &fig2)?;
    written.push(p);

    let mut fig3a = String::from("feature,selected_kappa,kappa,score\n");
    for fs_report in &report.feature_sets {
        for pt in &fs_report.sweep {
            let _ = writeln!(
                fig3a,
                "{},{},{},{}",
                fs_report.name,
                fmt_float(fs_report.selected_kappa),
                fmt_float(pt.kappa),
                fmt_float(pt.score)
            );
        }
    }
    let p = out_dir.join("fig3a.csv");
    write_file(&p, &fig3a)?;
    written.push(p);

    for fs_report in &report.feature_sets {
        let mut fig3b = String::from("risk,naive-bayes,coupled,multivariate\n");
        let grid = &fs_report.models[0].risk_profile.grid;
        for (i, &r) in grid.iter().enumerate() {
            let _ = writeln!(
                fig3b,
                "{},{},{},{}",
                fmt_float(r),
                fmt_float(fs_report.models[0].risk_profile.accuracy[i]),
                fmt_float(fs_report.models[1].risk_profile.accuracy[i]),
                fmt_float(fs_report.models[2].risk_profile.accuracy[i]),
            );
        }
        let p = out_dir.join(format!("fig3b_{}.csv", fs_report.name));
        write_file(&p, &fig3b)?;
        written.push(p);
    }

    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Numeric(format!("report serialization: {e}")))?;
    let p = out_dir.join("report.json");
    write_file(&p, &json)?;
    written.push(p);

    let models_dir = out_dir.join("models");
    fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
    for (name, fitted) in models {
        for model in fitted {
            let p = models_dir.join(format!("{}_{}.model", name, model.kind()));
            classifiers::save_model(model, &p)?;
            written.push(p);
        }
    }

    let p = out_dir.join("plot_fig2.gnuplot");
    write_file(
        &p,
        "set datafile separator ','\n\
         set logscale x\n\
         set xlabel 'parameters'\n\
         set ylabel 'probability accuracy (geometric mean)'\n\
         plot 'fig2.csv' using 3:4 with points pt 7 title 'models'\n",
    )?;
    written.push(p);
    let p = out_dir.join("plot_fig3b.gnuplot");
    write_file(
        &p,
        "set datafile separator ','\n\
         set xlabel 'risk bias'\n\
         set ylabel 'generalized-mean accuracy'\n\
         plot 'fig3b_pixel.csv' using 1:2 with lines title 'naive Bayes', \\\n\
              '' using 1:3 with lines title 'coupled', \\\n\
              '' using 1:4 with lines title 'multivariate'\n",
    )?;
    written.push(p);

    Ok(written)
}

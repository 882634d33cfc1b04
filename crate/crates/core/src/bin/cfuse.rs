use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use coupled_fusion::classifiers::{CovarianceMode, VarianceMode};
use coupled_fusion::dataset::{Manifest, SplitMode, SplitSpec};
use coupled_fusion::harness::{emit_report, run_experiment, ExperimentConfig, SelectOn};
use coupled_fusion::metrics::{
    generalized_mean, percent_correct, risk_profile, TrueClassProbabilities,
};

#[derive(Parser)]
#[command(
    name = "cfuse",
    version,
    about = "Coupled-product fusion benchmark over the UCI handwritten-numeral feature sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    #[value(name = "first-half")]
    FirstHalf,
    #[value(name = "shuffle")]
    Shuffle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SelectOnArg {
    Train,
    Test,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Pooled,
    #[value(name = "per-class")]
    PerClass,
}

#[derive(Args, Debug)]
struct CommonConfig {
    /// Manifest file mapping feature-set names to data files.
    #[arg(long)]
    manifest: PathBuf,
    /// Train/test split rule.
    #[arg(long, value_enum, default_value = "first-half")]
    split: SplitArg,
    /// Seed for the shuffle split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Covariance shrinkage weight λ in [0, 1].
    #[arg(long, default_value_t = 0.1)]
    shrinkage: f64,
    /// Which half the coupling sweep is scored on.
    #[arg(long, value_enum, default_value = "train")]
    select_on: SelectOnArg,
    /// Coupling grid start:step:end, e.g. 0:-0.05:-2.
    #[arg(long, default_value = "0:-0.05:-2", allow_hyphen_values = true)]
    kappa_grid: String,
    /// Risk-bias grid start:step:end for Risk Profiles.
    #[arg(long, default_value = "-2:0.1:2", allow_hyphen_values = true)]
    risk_grid: String,
    /// Probability floor for geometric means.
    #[arg(long, default_value_t = 1e-14)]
    floor: f64,
    /// Per-feature variance estimation for the naive-Bayes base.
    #[arg(long, value_enum, default_value = "pooled")]
    variance: ModeArg,
    /// Covariance estimation for the multivariate model.
    #[arg(long, value_enum, default_value = "pooled")]
    covariance: ModeArg,
    /// Shrink toward (tr S/d)·I instead of the diagonal of S.
    #[arg(long)]
    scaled_identity: bool,
    /// Worker threads for the feature-set sweep (1 = sequential).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Commands {
    /// Run the full experiment and write reports.
    Run {
        #[command(flatten)]
        common: CommonConfig,
        /// Output directory for the report files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run only the coupling sweep and print the selection per feature set.
    Sweep {
        #[command(flatten)]
        common: CommonConfig,
    },
    /// Risk Profile of a stored model on a feature file.
    Profile {
        /// Model file written by `run` (out/models/*.model).
        #[arg(long)]
        model: PathBuf,
        /// Feature matrix in the source layout (2000 rows, block labels).
        #[arg(long)]
        features: PathBuf,
        /// Score the train or test half of the split.
        #[arg(long, value_enum, default_value = "test")]
        half: SelectOnArg,
        #[arg(long, value_enum, default_value = "first-half")]
        split: SplitArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "-2:0.1:2", allow_hyphen_values = true)]
        risk_grid: String,
        #[arg(long, default_value_t = 1e-14)]
        floor: f64,
    },
    /// Metrics over an external probability file
    /// (per line: true label, then one probability per class).
    Score {
        /// Probability file.
        input: PathBuf,
        #[arg(long, default_value = "-2:0.1:2", allow_hyphen_values = true)]
        risk_grid: String,
        #[arg(long, default_value_t = 1e-14)]
        floor: f64,
    },
}

fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must be start:step:end, got {spec:?}");
    }
    let start: f64 = parts[0].parse().context("bad grid start")?;
    let step: f64 = parts[1].parse().context("bad grid step")?;
    let end: f64 = parts[2].parse().context("bad grid end")?;
    if step == 0.0 || !step.is_finite() {
        bail!("grid step must be nonzero and finite");
    }
    if (end - start) * step < 0.0 {
        bail!("grid step points away from end");
    }
    let count = ((end - start) / step).round() as i64;
    let grid: Vec<f64> = (0..=count).map(|i| start + step * i as f64).collect();
    Ok(grid)
}

impl CommonConfig {
    fn to_experiment_config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut kappa_grid = parse_grid(&self.kappa_grid)?;
        // Round to the grid's own precision so e.g. 0.05*3 prints as -0.15.
        for k in kappa_grid.iter_mut() {
            *k = (*k * 1e12).round() / 1e12;
        }
        let mut risk_grid = parse_grid(&self.risk_grid)?;
        for r in risk_grid.iter_mut() {
            *r = (*r * 1e12).round() / 1e12;
        }
        risk_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(ExperimentConfig {
            split: match self.split {
                SplitArg::FirstHalf => SplitSpec::FIRST_HALF,
                SplitArg::Shuffle => SplitSpec::shuffle(self.seed),
            },
            shrinkage: self.shrinkage,
            select_on: match self.select_on {
                SelectOnArg::Train => SelectOn::Train,
                SelectOnArg::Test => SelectOn::Test,
            },
            kappa_grid,
            risk_grid,
            floor: self.floor,
            variance_mode: match self.variance {
                ModeArg::Pooled => VarianceMode::Pooled,
                ModeArg::PerClass => VarianceMode::PerClass,
            },
            covariance_mode: match self.covariance {
                ModeArg::Pooled => CovarianceMode::Pooled,
                ModeArg::PerClass => CovarianceMode::PerClass,
            },
            scaled_identity_target: self.scaled_identity,
            variance_floor_factor: 1e-9,
        })
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Commands::Run { common, out } => {
            let manifest = Manifest::load(&common.manifest)?;
            let cfg = common.to_experiment_config()?;
            let (report, models) = run_experiment(&manifest, &cfg, common.threads)?;
            emit_report(&report, &models, &out)?;
            println!(
                "{:<22} {:<13} {:>8} {:>12} {:>14}",
                "feature", "model", "params", "pct_correct", "prob_accuracy"
            );
            for fs_report in &report.feature_sets {
                for m in &fs_report.models {
                    println!(
                        "{:<22} {:<13} {:>8} {:>12.4} {:>14.4}",
                        fs_report.name.to_string(),
                        m.kind.to_string(),
                        m.parameter_count,
                        m.percent_correct,
                        m.probability_accuracy
                    );
                }
            }
            println!("reports written to {}", out.display());
        }
        Commands::Sweep { common } => {
            let manifest = Manifest::load(&common.manifest)?;
            let cfg = common.to_experiment_config()?;
            let (report, _) = run_experiment(&manifest, &cfg, common.threads)?;
            println!("{:<22} {:>14} {:>16}", "feature", "selected_kappa", "geo_mean_score");
            for fs_report in &report.feature_sets {
                println!(
                    "{:<22} {:>14.4} {:>16.6}",
                    fs_report.name.to_string(),
                    fs_report.selected_kappa,
                    fs_report.selection_score
                );
            }
        }
        Commands::Profile {
            model,
            features,
            half,
            split,
            seed,
            risk_grid,
            floor,
        } => {
            let model = coupled_fusion::classifiers::load_model(&model)?;
            let matrix = coupled_fusion::dataset::load_feature_file(&features, model.dim())?;
            let labeled = coupled_fusion::dataset::LabeledDataset::new(
                matrix,
                coupled_fusion::dataset::mfeat_labels(),
                coupled_fusion::dataset::MFEAT_CLASSES,
            )?;
            let spec = match split {
                SplitArg::FirstHalf => SplitSpec {
                    mode: SplitMode::FirstHalf,
                    seed: 0,
                },
                SplitArg::Shuffle => SplitSpec::shuffle(seed),
            };
            let (train, test) = coupled_fusion::dataset::split(&labeled, &spec)?;
            let data = match half {
                SelectOnArg::Train => train,
                SelectOnArg::Test => test,
            };
            let mut posts = Vec::with_capacity(data.len());
            for i in 0..data.len() {
                posts.push(model.predict(data.features.row(i))?);
            }
            let tcp = TrueClassProbabilities::from_posteriors(&posts, &data.labels)?;
            let grid = parse_grid(&risk_grid)?;
            let profile = risk_profile(&tcp, &grid, floor)?;
            println!("pct_correct {:.6}", percent_correct(&posts, &data.labels)?);
            println!("geo_mean {:.6}", generalized_mean(&tcp, 0.0, floor));
            println!("risk,accuracy");
            for (r, a) in profile.grid.iter().zip(&profile.accuracy) {
                println!("{r},{a}");
            }
        }
        Commands::Score {
            input,
            risk_grid,
            floor,
        } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let mut values = Vec::new();
            let mut correct = 0usize;
            let mut total = 0usize;
            for (line_no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let mut toks = line.split_whitespace();
                let label: usize = toks
                    .next()
                    .context("missing label")?
                    .parse()
                    .with_context(|| format!("bad label on line {}", line_no + 1))?;
                let probs: Vec<f64> = toks
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .with_context(|| format!("bad probability on line {}", line_no + 1))?;
                if label >= probs.len() {
                    bail!("label {label} out of range on line {}", line_no + 1);
                }
                let argmax = probs
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .unwrap();
                if argmax == label {
                    correct += 1;
                }
                total += 1;
                values.push(probs[label].clamp(0.0, 1.0));
            }
            if total == 0 {
                bail!("no samples in {}", input.display());
            }
            let tcp = TrueClassProbabilities::new(values)?;
            let grid = parse_grid(&risk_grid)?;
            let profile = risk_profile(&tcp, &grid, floor)?;
            println!("samples {total}");
            println!("pct_correct {:.6}", correct as f64 / total as f64);
            println!("geo_mean {:.6}", generalized_mean(&tcp, 0.0, floor));
            println!("risk,accuracy");
            for (r, a) in profile.grid.iter().zip(&profile.accuracy) {
                println!("{r},{a}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<coupled_fusion::Error>()
                .map(|e| e.exit_code())
                .unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}

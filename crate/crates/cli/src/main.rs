use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rmclass::dists::Distribution;
use rmclass::eval::{confusion_metrics, mardia_skewness, Measure, POSITIVE_CLASS};
use rmclass::harness::csv_io::{
    emit_bootstrap_csv, emit_results_csv, emit_roc_points_csv, emit_summary_csv, fmt_sig6, load_long_csv,
    write_bootstrap_table, write_summary_csv,
};
use rmclass::harness::{fit_classifier, run_bootstrap, run_scenario, ClassifierKind, FittedClassifier, ScenarioConfig, ToolConfig};
use rmclass::robust::TrimMethod;
use rmclass::scenarios::Preset;

#[derive(Parser)]
#[command(name = "rmclass", version, about = "Linear classifiers for multivariate repeated-measures data")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config file.
    #[arg(long, global = true, env = "RMCLASS_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replicates (simulate) or bootstrap resamples (bootstrap).
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "rmclass-out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo simulation of a scenario: per-replicate results, ROC points and a summary.
    Simulate {
        /// Preset scenario when no config file is given (dataset1, dataset2, dataset3).
        #[arg(long)]
        preset: Option<String>,
        /// normal, lognormal or truncnorm; overrides the config file.
        #[arg(long)]
        distribution: Option<String>,
    },
    /// .632+ bootstrap table for a long-format CSV.
    Bootstrap {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated classifiers; overrides the config file.
        #[arg(long, value_delimiter = ',')]
        classifiers: Vec<String>,
        /// Comma-separated trimming methods (none, mve, mcd); overrides the config file.
        #[arg(long, value_delimiter = ',')]
        trimming: Vec<String>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Mardia's multivariate skewness test per group.
    Mardia {
        #[arg(long)]
        data: PathBuf,
    },
    /// Fits one classifier and writes it as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        classifier: String,
        /// Output model file (default: <out-dir>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Trimming method applied to the training data before fitting.
        #[arg(long, default_value = "none")]
        trimming: String,
        #[arg(long, default_value_t = 0.9)]
        keep_fraction: f64,
    },
    /// Labels a long-format CSV with a fitted model and reports the metrics.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Simulate { ref preset, ref distribution } => {
            simulate(&cli.common, preset.as_deref(), distribution.as_deref())
        }
        Command::Bootstrap { ref data, ref classifiers, ref trimming, alpha } => {
            bootstrap(&cli.common, data, classifiers, trimming, alpha)
        }
        Command::Mardia { ref data } => mardia(&cli.common, data),
        Command::Fit { ref data, ref classifier, ref model, ref trimming, keep_fraction } => {
            fit(&cli.common, data, classifier, model.as_deref(), trimming, keep_fraction)
        }
        Command::Predict { ref model, ref data } => predict(&cli.common, model, data),
    }
}

fn out_dir(common: &Common) -> Result<&Path> {
    fs::create_dir_all(&common.out_dir)
        .with_context(|| format!("creating {}", common.out_dir.display()))?;
    Ok(&common.out_dir)
}

fn tool_config(common: &Common) -> Result<ToolConfig> {
    let mut cfg = match &common.config {
        Some(p) => ToolConfig::from_path(p).with_context(|| format!("reading {}", p.display()))?,
        None => ToolConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.bootstrap.seed = s;
    }
    if let Some(r) = common.replicates {
        cfg.bootstrap.b = r;
    }
    Ok(cfg)
}

fn parse_trim(s: &str) -> Result<TrimMethod> {
    TrimMethod::parse(s).ok_or_else(|| anyhow!("unknown trimming method '{s}'"))
}

fn simulate(common: &Common, preset: Option<&str>, distribution: Option<&str>) -> Result<()> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::from_path(p).with_context(|| format!("reading {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(p) = preset {
        cfg.preset = Some(match p {
            "dataset1" => Preset::Dataset1,
            "dataset2" => Preset::Dataset2,
            "dataset3" => Preset::Dataset3,
            _ => bail!("unknown preset '{p}'"),
        });
        cfg.params = None;
    }
    if let Some(d) = distribution {
        cfg.distribution = match d {
            "normal" => Distribution::Normal,
            "lognormal" => Distribution::Lognormal,
            "truncnorm" => Distribution::Truncnorm,
            _ => bail!("unknown distribution '{d}'"),
        };
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    let out = run_scenario(&cfg)?;
    let dir = out_dir(common)?;
    emit_results_csv(&out.rows, &dir.join("results.csv"))?;
    emit_roc_points_csv(&out.rows, &dir.join("roc_points.csv"))?;
    emit_summary_csv(&out.summary, &dir.join("summary.csv"))?;
    eprintln!("{}: {} replicates, outputs in {}", cfg.label(), cfg.replicates, dir.display());
    write_summary_csv(&out.summary, std::io::stdout().lock())?;
    Ok(())
}

fn bootstrap(
    common: &Common,
    data: &Path,
    classifiers: &[String],
    trimming: &[String],
    alpha: Option<f64>,
) -> Result<()> {
    let mut cfg = tool_config(common)?;
    if !classifiers.is_empty() {
        cfg.bootstrap.classifiers = classifiers.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    }
    if !trimming.is_empty() {
        cfg.bootstrap.trimming = trimming.iter().map(|s| parse_trim(s)).collect::<Result<_>>()?;
    }
    if let Some(a) = alpha {
        cfg.bootstrap.alpha = a;
    }
    let ds = load_long_csv(data)?;
    let cells = run_bootstrap(&ds, &cfg.bootstrap, &cfg.settings())?;
    let dir = out_dir(common)?;
    emit_bootstrap_csv(&cells, &dir.join("bootstrap_long.csv"))?;
    let table = fs::File::create(dir.join("bootstrap_table.csv"))?;
    write_bootstrap_table(&cells, table)?;
    write_bootstrap_table(&cells, std::io::stdout().lock())?;
    Ok(())
}

fn mardia(common: &Common, data: &Path) -> Result<()> {
    let ds = load_long_csv(data)?;
    let mut text = String::from("group,n,d,b1p,chi2,df,pvalue\n");
    for g in [0u8, 1] {
        let x = ds.class_matrix(g);
        let m = mardia_skewness(&x).with_context(|| format!("group {g}"))?;
        text.push_str(&format!(
            "{g},{},{},{},{},{},{}\n",
            x.nrows(),
            ds.dim(),
            fmt_sig6(m.b1p),
            fmt_sig6(m.chi2),
            m.df,
            fmt_sig6(m.pvalue)
        ));
    }
    fs::write(out_dir(common)?.join("mardia.csv"), &text)?;
    print!("{text}");
    Ok(())
}

fn fit(
    common: &Common,
    data: &Path,
    classifier: &str,
    model: Option<&Path>,
    trimming: &str,
    keep_fraction: f64,
) -> Result<()> {
    let cfg = tool_config(common)?;
    let kind: ClassifierKind = classifier.parse()?;
    let ds = load_long_csv(data)?;
    let seed = cfg.bootstrap.seed;
    let train = rmclass::robust::trim_dataset(&ds, keep_fraction, parse_trim(trimming)?, seed)?;
    let fitted = fit_classifier(kind, &train, &cfg.settings(), seed)?;
    let path = match model {
        Some(p) => p.to_path_buf(),
        None => out_dir(common)?.join("model.json"),
    };
    fs::write(&path, serde_json::to_string_pretty(&fitted)?).with_context(|| format!("writing {}", path.display()))?;
    eprintln!(
        "fitted {} on {} subjects ({} kept), converged={}, model in {}",
        kind.name(),
        ds.n(),
        train.n(),
        fitted.converged,
        path.display()
    );
    Ok(())
}

fn predict(common: &Common, model: &Path, data: &Path) -> Result<()> {
    let text = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    let fitted: FittedClassifier = serde_json::from_str(&text)?;
    let ds = load_long_csv(data)?;
    let pred = fitted.predict_dataset(&ds)?;
    let mut out = String::from("subject,group,predicted\n");
    for (j, &g) in pred.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", j + 1, ds.labels[j], g));
    }
    fs::write(out_dir(common)?.join("predictions.csv"), out)?;
    let m = confusion_metrics(&ds.labels, &pred, POSITIVE_CLASS)?;
    println!("measure,value");
    for measure in Measure::ALL {
        println!("{},{}", measure.name(), fmt_sig6(measure.of(&m)));
    }
    Ok(())
}

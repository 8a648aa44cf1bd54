//! `dtsurv`: command-line driver for the discrete-time survival pipeline.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dtsurv::cohort::{generate_synthetic, write_cohort, write_schema, write_truth, SyntheticSpec};
use dtsurv::config::RunConfig;
use dtsurv::pipeline::{self, AtStage, Stage};

#[derive(Parser)]
#[command(name = "dtsurv", version, about = "Discrete-time survival analysis pipeline")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort with known risk.
    Synth(SynthArgs),
    /// Split the cohort and fit preprocessing on the training part.
    Prep(RunArgs),
    /// Score clinical variables on the training split.
    Select(RunArgs),
    /// Train one experiment's network and write its checkpoint.
    Train(ExperimentArgs),
    /// Evaluate a trained run directory on its test split.
    Eval(EvalArgs),
    /// Train and evaluate one experiment.
    Experiment(ExperimentArgs),
    /// Run the experiment matrix on a shared split.
    Matrix(RunArgs),
    /// Print the summary of a run or matrix directory.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Informative,
    Null,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator spec file; overrides --preset.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "informative")]
    preset: Preset,
    #[arg(long)]
    seed: u64,
    /// Output cohort CSV.
    #[arg(long)]
    out: PathBuf,
    /// True-risk sidecar (default: `<out>.truth.csv`).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Schema file (default: `<out>.schema`).
    #[arg(long)]
    schema_out: Option<PathBuf>,
}

/// One optional flag per configuration key.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    cohort: Option<String>,
    #[arg(long)]
    schema: Option<String>,
    #[arg(long = "out_dir", visible_alias = "out-dir")]
    out_dir: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    experiments: Option<String>,
    #[arg(long)]
    parallel: Option<String>,
    #[arg(long)]
    fractions: Option<String>,
    #[arg(long = "n_intervals", visible_alias = "n-intervals")]
    n_intervals: Option<String>,
    #[arg(long = "max_time", visible_alias = "max-time")]
    max_time: Option<String>,
    #[arg(long = "points_per_interval", visible_alias = "points-per-interval")]
    points_per_interval: Option<String>,
    #[arg(long = "max_epochs", visible_alias = "max-epochs")]
    max_epochs: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long = "learning_rate", visible_alias = "learning-rate")]
    learning_rate: Option<String>,
    #[arg(long = "batch_size", visible_alias = "batch-size")]
    batch_size: Option<String>,
    #[arg(long = "lr_finder", visible_alias = "lr-finder")]
    lr_finder: Option<String>,
    #[arg(long = "n_trees", visible_alias = "n-trees")]
    n_trees: Option<String>,
    #[arg(long = "spearman_thresholds", visible_alias = "spearman-thresholds")]
    spearman_thresholds: Option<String>,
    #[arg(long = "importance_thresholds", visible_alias = "importance-thresholds")]
    importance_thresholds: Option<String>,
    #[arg(long = "censored_eval", visible_alias = "censored-eval")]
    censored_eval: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        let fields: [(&str, Option<String>); 19] = [
            ("cohort", self.cohort.clone()),
            ("schema", self.schema.clone()),
            ("out_dir", self.out_dir.clone()),
            ("seed", self.seed.map(|s| s.to_string())),
            ("experiments", self.experiments.clone()),
            ("parallel", self.parallel.clone()),
            ("fractions", self.fractions.clone()),
            ("n_intervals", self.n_intervals.clone()),
            ("max_time", self.max_time.clone()),
            ("points_per_interval", self.points_per_interval.clone()),
            ("max_epochs", self.max_epochs.clone()),
            ("patience", self.patience.clone()),
            ("learning_rate", self.learning_rate.clone()),
            ("batch_size", self.batch_size.clone()),
            ("lr_finder", self.lr_finder.clone()),
            ("n_trees", self.n_trees.clone()),
            ("spearman_thresholds", self.spearman_thresholds.clone()),
            ("importance_thresholds", self.importance_thresholds.clone()),
            ("censored_eval", self.censored_eval.clone()),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect()
    }
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (INI-style `key = value` with sections).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl RunArgs {
    fn resolve(&self) -> pipeline::StageResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path).at(Stage::Config)?,
            None => RunConfig::default(),
        };
        for (k, v) in self.overrides.pairs() {
            cfg.set(&k, &v).at(Stage::Config)?;
        }
        cfg.validate().at(Stage::Config)?;
        Ok(cfg)
    }

    fn resolve_seeded(&self, command: &str) -> anyhow::Result<(RunConfig, u64)> {
        let Some(seed) = self.overrides.seed else {
            bail!("[config] --seed is required for `{command}`");
        };
        Ok((self.resolve()?, seed))
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Experiment id (1-9 canonical, 10+ custom entries of `experiments`).
    #[arg(long)]
    experiment: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Run directory written by `train` or `experiment`.
    #[arg(long = "run_dir", visible_alias = "run-dir")]
    run_dir: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// Matrix output directory or single run directory.
    dir: PathBuf,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("[synth] reading {}", path.display()))?;
            SyntheticSpec::from_ini_str(&text).map_err(|e| anyhow!("[synth] {e}"))?
        }
        None => match args.preset {
            Preset::Informative => SyntheticSpec::informative(),
            Preset::Null => SyntheticSpec::informative().null(),
        },
    };
    let synth = generate_synthetic(&spec, args.seed).map_err(|e| anyhow!("[synth] {e}"))?;
    let truth = args.truth.clone().unwrap_or_else(|| sibling(&args.out, ".truth.csv"));
    let schema = args.schema_out.clone().unwrap_or_else(|| sibling(&args.out, ".schema"));
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("[write] creating {}", dir.display()))?;
    }
    write_cohort(&synth.cohort, &args.out).map_err(|e| anyhow!("[write] {e}"))?;
    write_truth(&synth, &truth).map_err(|e| anyhow!("[write] {e}"))?;
    write_schema(&synth.cohort.schema, &schema).map_err(|e| anyhow!("[write] {e}"))?;
    println!(
        "wrote {} patients ({} deaths) to {}",
        synth.cohort.len(),
        synth.cohort.n_events(),
        args.out.display()
    );
    Ok(())
}

fn prep(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let seed = cfg.require_seed().at(Stage::Config)?;
    let cohort = pipeline::load_input(&cfg)?;
    let (split, state, parts) = pipeline::prepare_split(&cfg, &cohort, seed)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("[write] creating {}", dir.display()))?;
    let write = |name: &str, text: String| {
        fs::write(dir.join(name), text).with_context(|| format!("[write] {}", dir.join(name).display()))
    };
    write("config.resolved", cfg.to_resolved())?;
    write("preprocess.json", state.to_json().at(Stage::Write)?)?;
    for (name, raw, part) in [
        ("train", &split.train, &parts[0]),
        ("val", &split.val, &parts[1]),
        ("test", &split.test, &parts[2]),
    ] {
        write(&format!("split_{name}.txt"), raw.ids().iter().map(|id| format!("{id}\n")).collect())?;
        write_cohort(part, dir.join(format!("{name}.csv"))).at(Stage::Write)?;
        println!("{name}: {} patients, {} deaths", part.len(), part.n_events());
    }
    Ok(())
}

fn select(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let seed = cfg.require_seed().at(Stage::Config)?;
    let cohort = pipeline::load_input(&cfg)?;
    let prepared = pipeline::prepare(&cfg, &cohort, seed)?;
    pipeline::write_shared(&cfg.out_dir, &cfg, &prepared)?;
    println!("{:<24} {:>10} {:>10}", "variable", "s_score", "i_score");
    for s in &prepared.scores {
        println!("{:<24} {:>10.4} {:>10.4}", s.variable, s.s_score, s.i_score);
    }
    Ok(())
}

fn train(args: &ExperimentArgs) -> anyhow::Result<()> {
    let (cfg, seed) = args.run.resolve_seeded("train")?;
    let exp = pipeline::find_experiment(&cfg, args.experiment).at(Stage::Config)?;
    let cohort = pipeline::load_input(&cfg)?;
    let prepared = pipeline::prepare(&cfg, &cohort, seed)?;
    let dir = pipeline::experiment_dir(&cfg.out_dir, exp.id);
    let trained = pipeline::train_experiment(&cfg, &prepared, &exp, &dir, seed)?;
    println!(
        "{exp}: best epoch {} of {}, validation loss {:.6}; checkpoint in {}",
        trained.history.best_epoch,
        trained.history.stopped_epoch,
        trained.history.best_val_loss(),
        dir.display()
    );
    Ok(())
}

fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let outcome = pipeline::evaluate_run_dir(&args.run_dir, &args.overrides.pairs())?;
    emit(&fs::read_to_string(outcome.dir.join("report.txt")).context("[write] reading report")?)?;
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> anyhow::Result<()> {
    let (cfg, _) = args.run.resolve_seeded("experiment")?;
    let outcome = pipeline::run_experiment(&cfg, args.experiment)?;
    emit(&fs::read_to_string(outcome.dir.join("report.txt")).context("[write] reading report")?)?;
    Ok(())
}

fn matrix(args: &RunArgs) -> anyhow::Result<()> {
    let (cfg, _) = args.resolve_seeded("matrix")?;
    let summary = pipeline::run_matrix(&cfg)?;
    emit(&summary.to_csv())?;
    let failed = summary.rows.iter().filter(|r| r.result.is_none()).count();
    if failed > 0 {
        bail!("[matrix] {failed} of {} experiments failed; see failures.txt", summary.rows.len());
    }
    Ok(())
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn report(args: &ReportArgs) -> anyhow::Result<()> {
    let summary = args.dir.join("summary.csv");
    if summary.exists() {
        let text = fs::read_to_string(&summary).with_context(|| format!("[report] reading {}", summary.display()))?;
        let mut table = String::new();
        for line in text.lines() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                bail!("[report] malformed summary line `{line}`");
            }
            table.push_str(&format!("{:<12} {:>20} {:>22} {:>22}\n", cells[0], cells[1], cells[2], cells[3]));
        }
        return emit(&table);
    }
    let report = args.dir.join("report.txt");
    let text = fs::read_to_string(&report)
        .with_context(|| format!("[report] {} has neither summary.csv nor report.txt", args.dir.display()))?;
    emit(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Prep(a) => prep(a),
        Command::Select(a) => select(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Matrix(a) => matrix(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! End-to-end runs: split, preprocess, score, train, evaluate and write a
//! self-describing run directory per experiment.
//!
//! Run directory contents:
//!
//! | file | contents |
//! |---|---|
//! | `config.resolved` | every configuration key |
//! | `split_{train,val,test}.txt` | patient ids per split |
//! | `preprocess.json` | normalization state fitted on the training split |
//! | `selection_inputs.txt` | ids the selection scores were computed from |
//! | `scores.csv`, `selection.txt` | variable scores and the chosen subset |
//! | `manifest.txt` | design-matrix columns |
//! | `model.ckpt`, `history.csv`, `train_summary.csv` | trained network |
//! | `report.csv`, `report.txt` | metrics |
//! | `curves.csv`, `violin.csv`, `violin.svg` | test curves and violins |

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::cohort::{
    apply_preprocess, fit_preprocess, load_cohort, load_cohort_inferred, read_schema, stratified_split, Cohort,
    PreprocessState, Split, CLINICAL_PREFIX, FEATURE_PREFIX,
};
use crate::config::{MaxTime, RunConfig};
use crate::curves::{
    render_violin_svg, violin_data, write_curves_csv, write_violin_csv, CensoredAt, SurvivalCurve, ViolinPatient,
    ViolinSummary,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metrics::{c_td, curve_auc, default_eval_times, AucCurve, Concordance};
use crate::select::{design_from_columns, score_variables, write_scores, ExperimentConfig, ForestParams, VariableScore};
use crate::survnet::{
    lr_range_test, read_checkpoint, train, write_checkpoint, Checkpoint, NetworkConfig, SurvivalNetwork, TrainConfig,
    TrainData, TrainHistory,
};
use crate::timegrid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Split,
    Preprocess,
    Select,
    Design,
    Train,
    Evaluate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Split => "split",
            Stage::Preprocess => "preprocess",
            Stage::Select => "select",
            Stage::Design => "design",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
        })
    }
}

/// An error tagged with the pipeline stage it came from.
#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {error}")]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|error| StageError { stage, error })
    }
}

const NOTE_ZSCORE: &str = "continuous clinical variables and image features are z-scored with the population standard deviation of the training split; categorical variables enter as integer codes in lexicographic category order";
const NOTE_CENSORING: &str = "variable selection regresses on observed time and ignores the event flag, so censored times are treated as death times";

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> StageResult<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e)).at(Stage::Write)
}

fn id_list<'a>(ids: impl IntoIterator<Item = &'a str>) -> String {
    let mut s = String::new();
    for id in ids {
        s.push_str(id);
        s.push('\n');
    }
    s
}

pub fn read_ids(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

/// Patients of `cohort` with the given ids, in the listed order.
pub fn select_ids(cohort: &Cohort, ids: &[String]) -> Result<Cohort> {
    let index: HashMap<&str, usize> = cohort.ids().into_iter().enumerate().map(|(i, id)| (id, i)).collect();
    let rows = ids
        .iter()
        .map(|id| index.get(id.as_str()).copied().ok_or_else(|| Error::invalid(format!("unknown patient id `{id}`"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(cohort.subset(&rows))
}

pub fn load_input(cfg: &RunConfig) -> StageResult<Cohort> {
    let path = cfg
        .cohort
        .as_ref()
        .ok_or_else(|| Error::Config("no cohort given (set `cohort` or pass --cohort)".into()))
        .at(Stage::Config)?;
    match &cfg.schema {
        Some(schema) => {
            let schema = read_schema(schema).at(Stage::Load)?;
            load_cohort(path, &schema).at(Stage::Load)
        }
        None => load_cohort_inferred(path).at(Stage::Load),
    }
}

/// Everything shared by the experiments of one run: the split, the
/// preprocessing fitted on its training part, selection scores and the grid.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: Split,
    pub state: PreprocessState,
    pub train: Cohort,
    pub val: Cohort,
    pub test: Cohort,
    pub scores: Vec<VariableScore>,
    pub grid: TimeGrid,
}

pub fn prepare_split(cfg: &RunConfig, cohort: &Cohort, seed: u64) -> StageResult<(Split, PreprocessState, [Cohort; 3])> {
    let split = stratified_split(cohort, cfg.fractions, seed).at(Stage::Split)?;
    let state = fit_preprocess(&split.train).at(Stage::Preprocess)?;
    let parts = [&split.train, &split.val, &split.test].map(|c| apply_preprocess(c, &state));
    let [train, val, test] = parts;
    let parts = [train.at(Stage::Preprocess)?, val.at(Stage::Preprocess)?, test.at(Stage::Preprocess)?];
    for col in state.degenerate_columns() {
        log::warn!("column `{col}` is constant on the training split; its z-scores are 0");
    }
    Ok((split, state, parts))
}

pub fn grid_for(cfg: &RunConfig, train_raw: &Cohort) -> Result<TimeGrid> {
    let max_time = match cfg.max_time {
        MaxTime::Fixed(m) => m,
        MaxTime::Auto => train_raw.max_time().ok_or_else(|| Error::invalid("empty training split"))?,
    };
    TimeGrid::new(max_time, cfg.n_intervals)
}

pub fn prepare(cfg: &RunConfig, cohort: &Cohort, seed: u64) -> StageResult<Prepared> {
    cfg.validate().at(Stage::Config)?;
    let (split, state, [train, val, test]) = prepare_split(cfg, cohort, seed)?;
    let scores = if train.schema.is_empty() {
        Vec::new()
    } else {
        let params = ForestParams {
            n_trees: cfg.n_trees,
            ..ForestParams::default()
        };
        score_variables(&train, &params, seed, cfg.exec()).at(Stage::Select)?
    };
    let grid = grid_for(cfg, &split.train).at(Stage::Config)?;
    Ok(Prepared {
        split,
        state,
        train,
        val,
        test,
        scores,
        grid,
    })
}

/// Split manifests, preprocessing state and selection inputs/scores.
pub fn write_shared(dir: &Path, cfg: &RunConfig, prepared: &Prepared) -> StageResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)).at(Stage::Write)?;
    write_file(&dir.join("config.resolved"), cfg.to_resolved())?;
    for (name, part) in [
        ("split_train.txt", &prepared.split.train),
        ("split_val.txt", &prepared.split.val),
        ("split_test.txt", &prepared.split.test),
    ] {
        write_file(&dir.join(name), id_list(part.ids()))?;
    }
    write_file(&dir.join("preprocess.json"), prepared.state.to_json().at(Stage::Write)?)?;
    write_file(&dir.join("selection_inputs.txt"), id_list(prepared.train.ids()))?;
    write_scores(&prepared.scores, dir.join("scores.csv")).at(Stage::Write)
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub experiment: ExperimentConfig,
    pub selected: Vec<String>,
    pub columns: Vec<String>,
    pub network: SurvivalNetwork,
    pub history: TrainHistory,
    pub learning_rate: f64,
}

impl Trained {
    pub fn n_clinical_selected(&self) -> usize {
        self.selected.len()
    }
}

/// Design, train and checkpoint one experiment on prepared data.
pub fn train_experiment(cfg: &RunConfig, prepared: &Prepared, exp: &ExperimentConfig, dir: &Path, seed: u64) -> StageResult<Trained> {
    write_shared(dir, cfg, prepared)?;
    let selected = exp.selected_clinical(&prepared.train, Some(&prepared.scores)).at(Stage::Design)?;
    if selected.is_empty() && !matches!(exp.clinical, crate::select::ClinicalMode::None) {
        log::warn!("Exp{}: no clinical variable passed the threshold; using image features only", exp.id);
    }
    write_file(&dir.join("selection.txt"), id_list(selected.iter().map(String::as_str)))?;
    let design = |c: &Cohort| design_from_columns(c, exp.use_image_features, &selected).at(Stage::Design);
    let (d_train, d_val) = (design(&prepared.train)?, design(&prepared.val)?);
    write_file(&dir.join("manifest.txt"), d_train.manifest())?;

    let grid = &prepared.grid;
    let data = |x: Array2<f64>, c: &Cohort| TrainData::new(x, &c.times(), &c.events(), grid).at(Stage::Train);
    let train_data = data(d_train.x, &prepared.train)?;
    let val_data = data(d_val.x, &prepared.val)?;
    let net = SurvivalNetwork::init(NetworkConfig::standard(d_train.columns.len(), grid.n_intervals()), seed)
        .at(Stage::Train)?;
    let mut tc = TrainConfig::new(seed);
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.batch_size = cfg.batch_size;
    tc.learning_rate = cfg.learning_rate;
    if cfg.lr_finder {
        let sweep = lr_range_test(&net, &train_data, 1e-5, 1.0, 100, cfg.batch_size, seed).at(Stage::Train)?;
        log::info!("Exp{}: learning-rate finder suggests {}", exp.id, sweep.suggested);
        tc.learning_rate = sweep.suggested;
    }
    let (network, history) = train(net, &train_data, &val_data, &tc).at(Stage::Train)?;

    let ckpt = Checkpoint {
        network: network.clone(),
        grid_max_time: grid.max_time(),
        columns: d_train.columns.clone(),
        preprocess_sha256: prepared.state.fingerprint(),
    };
    write_checkpoint(&ckpt, dir.join("model.ckpt")).at(Stage::Write)?;
    write_file(&dir.join("history.csv"), history.to_csv())?;
    let trained = Trained {
        experiment: exp.clone(),
        selected,
        columns: d_train.columns,
        network,
        history,
        learning_rate: tc.learning_rate,
    };
    write_file(&dir.join("train_summary.csv"), TrainSummary::of(&trained).to_csv())?;
    Ok(trained)
}

/// Training facts carried into reports (also readable back from a run
/// directory for stand-alone evaluation).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub experiment_id: usize,
    pub label: String,
    pub n_clinical_selected: usize,
    pub learning_rate: f64,
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainSummary {
    pub fn of(t: &Trained) -> Self {
        TrainSummary {
            experiment_id: t.experiment.id,
            label: t.experiment.to_string(),
            n_clinical_selected: t.n_clinical_selected(),
            learning_rate: t.learning_rate,
            best_epoch: t.history.best_epoch,
            stopped_epoch: t.history.stopped_epoch,
            best_val_loss: t.history.best_val_loss(),
        }
    }

    fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", format!("Exp{}", self.experiment_id)),
            ("label", self.label.clone()),
            ("n_clinical_selected", self.n_clinical_selected.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("best_epoch", self.best_epoch.to_string()),
            ("stopped_epoch", self.stopped_epoch.to_string()),
            ("best_val_loss", self.best_val_loss.to_string()),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        for (k, v) in self.rows() {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let map: HashMap<&str, &str> = text.lines().skip(1).filter_map(|l| l.split_once(',')).collect();
        let get = |k: &str| map.get(k).copied().ok_or_else(|| Error::invalid(format!("train summary lacks `{k}`")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::invalid(format!("bad `{k}`"))) };
        let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| Error::invalid(format!("bad `{k}`"))) };
        Ok(TrainSummary {
            experiment_id: get("experiment")?
                .trim_start_matches("Exp")
                .parse()
                .map_err(|_| Error::invalid("bad `experiment`"))?,
            label: get("label")?.to_string(),
            n_clinical_selected: int("n_clinical_selected")?,
            learning_rate: num("learning_rate")?,
            best_epoch: int("best_epoch")?,
            stopped_epoch: int("stopped_epoch")?,
            best_val_loss: num("best_val_loss")?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub test_ids: Vec<String>,
    pub n_test_events: usize,
    pub curves: Vec<SurvivalCurve>,
    pub concordance: Concordance,
    pub auc: AucCurve,
    pub violins: Vec<ViolinSummary>,
    pub notes: Vec<String>,
}

fn predict_curves(net: &SurvivalNetwork, x: &Array2<f64>, grid: &TimeGrid, ppi: usize) -> Result<Vec<SurvivalCurve>> {
    let pred = net.predict(x.view())?;
    pred.rows()
        .into_iter()
        .map(|row| SurvivalCurve::from_conditional(grid, &row.to_vec(), ppi))
        .collect()
}

/// Test-set metrics plus train/test violin summaries for a trained network.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    net: &SurvivalNetwork,
    grid: &TimeGrid,
    points_per_interval: usize,
    train: (&Cohort, &Array2<f64>),
    test: (&Cohort, &Array2<f64>),
    censored_at: CensoredAt,
    exec: Exec,
) -> Result<Evaluation> {
    let (train_c, train_x) = train;
    let (test_c, test_x) = test;
    let test_curves = predict_curves(net, test_x, grid, points_per_interval)?;
    let train_curves = predict_curves(net, train_x, grid, points_per_interval)?;
    let (times, events) = (test_c.times(), test_c.events());
    let concordance = c_td(&test_curves, &times, &events, exec)?;
    let eval_times = default_eval_times(grid.interior(), &times, &events);
    let auc = curve_auc(&test_curves, &times, &events, &eval_times, exec)?;

    let mut notes = vec![NOTE_ZSCORE.to_string(), NOTE_CENSORING.to_string()];
    if !auc.dropped.is_empty() {
        let list: Vec<String> = auc.dropped.iter().map(f64::to_string).collect();
        notes.push(format!("AUC evaluation times dropped for lack of cases or controls: {}", list.join(", ")));
    }
    let patients: Vec<ViolinPatient<'_>> = [(test_c, &test_curves, true), (train_c, &train_curves, false)]
        .into_iter()
        .flat_map(|(c, curves, is_test)| {
            c.patients.iter().zip(curves.iter()).map(move |(p, curve)| ViolinPatient {
                id: &p.id,
                curve,
                time: p.time,
                event: p.event,
                is_test,
            })
        })
        .collect();
    let (violins, violin_notes) = violin_data(&patients, censored_at);
    notes.extend(violin_notes);
    Ok(Evaluation {
        test_ids: test_c.ids().into_iter().map(str::to_string).collect(),
        n_test_events: test_c.n_events(),
        curves: test_curves,
        concordance,
        auc,
        violins,
        notes,
    })
}

pub fn report_csv(summary: &TrainSummary, grid: &TimeGrid, eval: &Evaluation) -> String {
    let mut s = String::from("# summary\nmetric,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(s, "{k},{v}");
    };
    for (k, v) in summary.rows() {
        if k != "label" {
            row(k, v);
        }
    }
    row("max_time", grid.max_time().to_string());
    row("n_intervals", grid.n_intervals().to_string());
    row("n_test", eval.test_ids.len().to_string());
    row("n_test_events", eval.n_test_events.to_string());
    row("c_td", eval.concordance.c_td.to_string());
    row("n_comparable_pairs", eval.concordance.n_comparable.to_string());
    row("integrated_auc", eval.auc.integrated.to_string());
    s.push_str("\n# auc_curve\nt,auc,n_cases,n_controls\n");
    for p in &eval.auc.points {
        let _ = writeln!(s, "{},{},{},{}", p.t, p.auc, p.n_cases, p.n_controls);
    }
    s.push_str("\n# violin\ngroup,n,q1,median,q3,bandwidth\n");
    for v in &eval.violins {
        let _ = writeln!(s, "{},{},{},{},{},{}", v.group, v.raw.len(), v.q1, v.median, v.q3, v.bandwidth);
    }
    s
}

pub fn report_text(summary: &TrainSummary, grid: &TimeGrid, eval: &Evaluation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", summary.label);
    let _ = writeln!(s, "clinical variables selected: {}", summary.n_clinical_selected);
    let _ = writeln!(s, "time grid: {} intervals up to {}", grid.n_intervals(), grid.max_time());
    let _ = writeln!(
        s,
        "training: best epoch {} of {}, learning rate {}, best validation loss {:.6}",
        summary.best_epoch, summary.stopped_epoch, summary.learning_rate, summary.best_val_loss
    );
    let _ = writeln!(s, "test patients: {} ({} deaths)", eval.test_ids.len(), eval.n_test_events);
    let _ = writeln!(
        s,
        "C^td: {:.4} over {} comparable pairs",
        eval.concordance.c_td, eval.concordance.n_comparable
    );
    let _ = writeln!(
        s,
        "integrated AUC: {:.4} over {} evaluation times",
        eval.auc.integrated,
        eval.auc.points.len()
    );
    for v in &eval.violins {
        let _ = writeln!(
            s,
            "{:<15} n={:<4} median {:.4} (IQR {:.4}-{:.4})",
            v.group.to_string(),
            v.raw.len(),
            v.median,
            v.q1,
            v.q3
        );
    }
    s.push_str("notes:\n");
    for n in &eval.notes {
        let _ = writeln!(s, "- {n}");
    }
    s
}

pub fn write_evaluation(dir: &Path, summary: &TrainSummary, grid: &TimeGrid, eval: &Evaluation) -> StageResult<()> {
    write_file(&dir.join("report.csv"), report_csv(summary, grid, eval))?;
    write_file(&dir.join("report.txt"), report_text(summary, grid, eval))?;
    let mut curves = Vec::new();
    write_curves_csv(&mut curves, &eval.test_ids, &eval.curves).at(Stage::Write)?;
    write_file(&dir.join("curves.csv"), curves)?;
    let mut violin = Vec::new();
    write_violin_csv(&mut violin, &eval.violins).at(Stage::Write)?;
    write_file(&dir.join("violin.csv"), violin)?;
    write_file(&dir.join("violin.svg"), render_violin_svg(&eval.violins))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub summary: TrainSummary,
    pub evaluation: Evaluation,
}

fn design_pair(prepared: &Prepared, trained: &Trained) -> StageResult<(Array2<f64>, Array2<f64>)> {
    let d = |c: &Cohort| {
        design_from_columns(c, trained.experiment.use_image_features, &trained.selected)
            .map(|d| d.x)
            .at(Stage::Design)
    };
    Ok((d(&prepared.train)?, d(&prepared.test)?))
}

/// Trains and evaluates one experiment on prepared data inside `dir`.
pub fn run_prepared(cfg: &RunConfig, prepared: &Prepared, exp: &ExperimentConfig, dir: &Path, seed: u64) -> StageResult<ExperimentOutcome> {
    let trained = train_experiment(cfg, prepared, exp, dir, seed)?;
    let (x_train, x_test) = design_pair(prepared, &trained)?;
    let evaluation = evaluate(
        &trained.network,
        &prepared.grid,
        cfg.points_per_interval,
        (&prepared.train, &x_train),
        (&prepared.test, &x_test),
        cfg.censored_eval,
        cfg.exec(),
    )
    .at(Stage::Evaluate)?;
    let summary = TrainSummary::of(&trained);
    write_evaluation(dir, &summary, &prepared.grid, &evaluation)?;
    Ok(ExperimentOutcome {
        dir: dir.to_path_buf(),
        summary,
        evaluation,
    })
}

pub fn experiment_dir(out_dir: &Path, id: usize) -> PathBuf {
    out_dir.join(format!("exp{id}"))
}

/// The experiment with `id` from the configured list, or the canonical one.
pub fn find_experiment(cfg: &RunConfig, id: usize) -> Result<ExperimentConfig> {
    match cfg.experiment_list()?.into_iter().find(|e| e.id == id) {
        Some(e) => Ok(e),
        None => ExperimentConfig::canonical_with_thresholds(id, &cfg.spearman_thresholds, &cfg.importance_thresholds),
    }
}

pub fn run_experiment(cfg: &RunConfig, id: usize) -> StageResult<ExperimentOutcome> {
    let seed = cfg.require_seed().at(Stage::Config)?;
    let exp = find_experiment(cfg, id).at(Stage::Config)?;
    let cohort = load_input(cfg)?;
    let prepared = prepare(cfg, &cohort, seed)?;
    run_prepared(cfg, &prepared, &exp, &experiment_dir(&cfg.out_dir, id), seed)
}

/// Re-evaluates a trained run directory from its checkpoint and manifests,
/// rewriting its report files.
pub fn evaluate_run_dir(dir: &Path, overrides: &[(String, String)]) -> StageResult<ExperimentOutcome> {
    let mut cfg = RunConfig::from_file(dir.join("config.resolved")).at(Stage::Config)?;
    for (k, v) in overrides {
        cfg.set(k, v).at(Stage::Config)?;
    }
    let cohort = load_input(&cfg)?;
    let ids = |name: &str| read_ids(&dir.join(name)).and_then(|ids| select_ids(&cohort, &ids)).at(Stage::Load);
    let (train_raw, test_raw) = (ids("split_train.txt")?, ids("split_test.txt")?);
    let text = fs::read_to_string(dir.join("preprocess.json"))
        .map_err(|e| Error::io(dir.join("preprocess.json"), e))
        .at(Stage::Load)?;
    let state = PreprocessState::from_json(&text).at(Stage::Load)?;
    let ckpt = read_checkpoint(dir.join("model.ckpt")).at(Stage::Load)?;
    if ckpt.preprocess_sha256 != state.fingerprint() {
        return Err(Error::Checkpoint("checkpoint was trained with a different preprocessing state".into()))
            .at(Stage::Load);
    }
    let summary_text = fs::read_to_string(dir.join("train_summary.csv"))
        .map_err(|e| Error::io(dir.join("train_summary.csv"), e))
        .at(Stage::Load)?;
    let summary = TrainSummary::from_csv(&summary_text).at(Stage::Load)?;
    let train_c = apply_preprocess(&train_raw, &state).at(Stage::Preprocess)?;
    let test_c = apply_preprocess(&test_raw, &state).at(Stage::Preprocess)?;
    let use_features = ckpt.columns.iter().any(|c| c.starts_with(FEATURE_PREFIX));
    let clinical: Vec<String> = ckpt
        .columns
        .iter()
        .filter_map(|c| c.strip_prefix(CLINICAL_PREFIX).map(str::to_string))
        .collect();
    let design = |c: &Cohort| -> StageResult<Array2<f64>> {
        let d = design_from_columns(c, use_features, &clinical).at(Stage::Design)?;
        if d.columns != ckpt.columns {
            return Err(Error::Checkpoint("design columns do not match the checkpoint".into())).at(Stage::Design);
        }
        Ok(d.x)
    };
    let (x_train, x_test) = (design(&train_c)?, design(&test_c)?);
    let grid = TimeGrid::new(ckpt.grid_max_time, ckpt.network.n_intervals()).at(Stage::Load)?;
    let evaluation = evaluate(
        &ckpt.network,
        &grid,
        cfg.points_per_interval,
        (&train_c, &x_train),
        (&test_c, &x_test),
        cfg.censored_eval,
        cfg.exec(),
    )
    .at(Stage::Evaluate)?;
    write_evaluation(dir, &summary, &grid, &evaluation)?;
    Ok(ExperimentOutcome {
        dir: dir.to_path_buf(),
        summary,
        evaluation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub experiment_id: usize,
    /// `None` when the experiment failed.
    pub result: Option<(usize, f64, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSummary {
    pub rows: Vec<MatrixRow>,
}

impl MatrixSummary {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("experiment,n_clinical_selected,c_td,integrated_auc\n");
        for r in &self.rows {
            match r.result {
                Some((n, c, a)) => {
                    let _ = writeln!(s, "Exp{},{n},{c},{a}", r.experiment_id);
                }
                None => {
                    let _ = writeln!(s, "Exp{},FAILED,FAILED,FAILED", r.experiment_id);
                }
            }
        }
        s
    }

    pub fn c_td(&self, id: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.experiment_id == id).and_then(|r| r.result).map(|r| r.1)
    }
}

/// Runs every configured experiment on one shared split and preprocessing
/// state. Individual failures are recorded and the rest continue.
pub fn run_matrix(cfg: &RunConfig) -> StageResult<MatrixSummary> {
    let seed = cfg.require_seed().at(Stage::Config)?;
    let experiments = cfg.experiment_list().at(Stage::Config)?;
    let cohort = load_input(cfg)?;
    let prepared = prepare(cfg, &cohort, seed)?;
    write_shared(&cfg.out_dir, cfg, &prepared)?;
    let outcomes = cfg.exec().map(experiments.len(), |k| {
        let exp = &experiments[k];
        run_prepared(cfg, &prepared, exp, &experiment_dir(&cfg.out_dir, exp.id), seed)
    });
    let mut rows = Vec::new();
    let mut failures = String::new();
    for (exp, outcome) in experiments.iter().zip(outcomes) {
        match outcome {
            Ok(o) => rows.push(MatrixRow {
                experiment_id: exp.id,
                result: Some((
                    o.summary.n_clinical_selected,
                    o.evaluation.concordance.c_td,
                    o.evaluation.auc.integrated,
                )),
                error: None,
            }),
            Err(e) => {
                log::error!("Exp{} failed: {e}", exp.id);
                let _ = writeln!(failures, "Exp{}: {e}", exp.id);
                rows.push(MatrixRow {
                    experiment_id: exp.id,
                    result: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let summary = MatrixSummary { rows };
    write_file(&cfg.out_dir.join("summary.csv"), summary.to_csv())?;
    let failures_path = cfg.out_dir.join("failures.txt");
    if failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(|e| Error::io(&failures_path, e)).at(Stage::Write)?;
        }
    } else {
        write_file(&failures_path, failures)?;
    }
    Ok(summary)
}

//! Clinical-variable relevance scoring and the experiment configurations
//! that decide which inputs reach the survival network.
//!
//! Both scores regress on the observed time and ignore the event flag, so
//! censored times are treated as if they were death times.

mod forest;
mod rank;

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

pub use forest::{fit_forest, Forest, ForestParams, Node, RegressionTree};
pub use rank::{average_ranks, pearson, spearman, SpearmanResult};

use crate::cohort::{Cohort, CLINICAL_PREFIX, FEATURE_PREFIX};
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq)]
pub struct VariableScore {
    pub variable: String,
    /// Spearman correlation with observed time, in [-1, 1].
    pub s_score: f64,
    /// Normalized forest importance, in [0, 1].
    pub i_score: f64,
    /// The Spearman score was defined as 0 for a constant input.
    pub s_degenerate: bool,
}

fn numeric_clinical(cohort: &Cohort) -> Result<Vec<Vec<f64>>> {
    (0..cohort.schema.len())
        .map(|j| {
            cohort.clinical_column(j).ok_or_else(|| {
                Error::invalid(format!(
                    "clinical column `{}` is not numeric; preprocess the cohort first",
                    cohort.schema.vars[j].name
                ))
            })
        })
        .collect()
}

/// Spearman correlation of each clinical variable with observed time.
/// Returns `(rho, degenerate)` per variable in schema order.
pub fn score_spearman(cohort: &Cohort) -> Result<Vec<SpearmanResult>> {
    let times = cohort.times();
    numeric_clinical(cohort)?
        .iter()
        .map(|col| spearman(col, &times))
        .collect()
}

/// Normalized random-forest importance of each clinical variable for
/// predicting observed time, in schema order.
pub fn score_importance(cohort: &Cohort, params: &ForestParams, seed: u64, exec: Exec) -> Result<Vec<f64>> {
    let cols = numeric_clinical(cohort)?;
    if cols.is_empty() {
        return Ok(Vec::new());
    }
    let x = Array2::from_shape_fn((cohort.len(), cols.len()), |(i, j)| cols[j][i]);
    let forest = fit_forest(x.view(), &cohort.times(), params, seed, exec)?;
    Ok(forest.importance())
}

/// Both scores for every clinical variable, in schema order.
pub fn score_variables(cohort: &Cohort, params: &ForestParams, seed: u64, exec: Exec) -> Result<Vec<VariableScore>> {
    let s = score_spearman(cohort)?;
    let i = score_importance(cohort, params, seed, exec)?;
    Ok(cohort
        .schema
        .vars
        .iter()
        .zip(s.iter().zip(&i))
        .map(|(var, (s, &i))| VariableScore {
            variable: var.name.clone(),
            s_score: s.rho,
            i_score: i,
            s_degenerate: s.degenerate,
        })
        .collect())
}

pub fn write_scores(scores: &[VariableScore], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("variable,s_score,i_score\n");
    for s in scores {
        let _ = writeln!(out, "{},{},{}", s.variable, s.s_score, s.i_score);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<VariableScore>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::row(i + 1, "malformed score"))
        };
        out.push(VariableScore {
            variable: rec.get(0).unwrap_or_default().to_string(),
            s_score: num(1)?,
            i_score: num(2)?,
            s_degenerate: false,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Spearman,
    Importance,
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(SelectionMode::Spearman),
            "importance" => Ok(SelectionMode::Importance),
            other => Err(Error::invalid(format!("unknown selection mode `{other}`"))),
        }
    }
}

/// Keeps variables with `|s_score| >= threshold` (Spearman) or
/// `i_score >= threshold` (importance), strongest first; equal scores are
/// ordered by name.
pub fn select_variables(scores: &[VariableScore], mode: SelectionMode, threshold: f64) -> Vec<String> {
    let key = |s: &VariableScore| match mode {
        SelectionMode::Spearman => s.s_score.abs(),
        SelectionMode::Importance => s.i_score,
    };
    let mut kept: Vec<&VariableScore> = scores.iter().filter(|s| key(s) >= threshold).collect();
    kept.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.variable.cmp(&b.variable)));
    if kept.is_empty() {
        log::warn!("no clinical variable passes {mode:?} threshold {threshold}");
    }
    kept.into_iter().map(|s| s.variable.clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClinicalMode {
    None,
    All,
    SpearmanThreshold(f64),
    ImportanceThreshold(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: usize,
    pub use_image_features: bool,
    pub clinical: ClinicalMode,
}

impl ExperimentConfig {
    /// The nine canonical input combinations: features only, clinical only,
    /// both, then features plus thresholded clinical subsets.
    pub fn canonical(id: usize) -> Result<Self> {
        let (use_image_features, clinical) = match id {
            1 => (true, ClinicalMode::None),
            2 => (false, ClinicalMode::All),
            3 => (true, ClinicalMode::All),
            4 => (true, ClinicalMode::SpearmanThreshold(0.1)),
            5 => (true, ClinicalMode::SpearmanThreshold(0.05)),
            6 => (true, ClinicalMode::SpearmanThreshold(0.01)),
            7 => (true, ClinicalMode::ImportanceThreshold(0.1)),
            8 => (true, ClinicalMode::ImportanceThreshold(0.01)),
            9 => (true, ClinicalMode::ImportanceThreshold(0.001)),
            other => return Err(Error::invalid(format!("experiment id {other} outside 1..=9"))),
        };
        Ok(ExperimentConfig {
            id,
            use_image_features,
            clinical,
        })
    }

    pub fn all_canonical() -> Vec<Self> {
        (1..=9).map(|id| Self::canonical(id).expect("canonical ids")).collect()
    }

    /// Canonical experiments with the thresholded ones re-targeted to the
    /// given Spearman (Exp4-6) and importance (Exp7-9) thresholds.
    pub fn canonical_with_thresholds(id: usize, spearman: &[f64], importance: &[f64]) -> Result<Self> {
        let mut cfg = Self::canonical(id)?;
        match (&mut cfg.clinical, id) {
            (ClinicalMode::SpearmanThreshold(t), 4..=6) => {
                if let Some(&v) = spearman.get(id - 4) {
                    *t = v;
                }
            }
            (ClinicalMode::ImportanceThreshold(t), 7..=9) => {
                if let Some(&v) = importance.get(id - 7) {
                    *t = v;
                }
            }
            _ => {}
        }
        Ok(cfg)
    }

    /// Clinical variables this experiment feeds to the network.
    pub fn selected_clinical(&self, cohort: &Cohort, scores: Option<&[VariableScore]>) -> Result<Vec<String>> {
        let need = |mode: &str| {
            scores.ok_or_else(|| Error::invalid(format!("experiment {} needs {mode} scores", self.id)))
        };
        Ok(match self.clinical {
            ClinicalMode::None => Vec::new(),
            ClinicalMode::All => cohort.schema.names().map(str::to_string).collect(),
            ClinicalMode::SpearmanThreshold(t) => select_variables(need("spearman")?, SelectionMode::Spearman, t),
            ClinicalMode::ImportanceThreshold(t) => {
                select_variables(need("importance")?, SelectionMode::Importance, t)
            }
        })
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let feats = if self.use_image_features { "features" } else { "no features" };
        match self.clinical {
            ClinicalMode::None => write!(f, "Exp{}: {feats}, no clinical", self.id),
            ClinicalMode::All => write!(f, "Exp{}: {feats}, all clinical", self.id),
            ClinicalMode::SpearmanThreshold(t) => write!(f, "Exp{}: {feats}, |S_score| >= {t}", self.id),
            ClinicalMode::ImportanceThreshold(t) => write!(f, "Exp{}: {feats}, I_score >= {t}", self.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: Array2<f64>,
    /// Column names, e.g. `feat_0` or `clin_age`, in matrix order.
    pub columns: Vec<String>,
}

impl DesignMatrix {
    pub fn n_clinical(&self) -> usize {
        self.columns.iter().filter(|c| c.starts_with(CLINICAL_PREFIX)).count()
    }

    pub fn manifest(&self) -> String {
        let mut s = self.columns.join("\n");
        s.push('\n');
        s
    }
}

/// Feature columns (when enabled) followed by the named clinical columns.
/// The cohort must already be preprocessed.
pub fn design_from_columns(cohort: &Cohort, use_features: bool, clinical: &[String]) -> Result<DesignMatrix> {
    let mut columns = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();
    if use_features {
        for k in 0..cohort.feature_dim {
            columns.push(format!("{FEATURE_PREFIX}{k}"));
            data.push(cohort.patients.iter().map(|p| p.features[k]).collect());
        }
    }
    for name in clinical {
        let j = cohort
            .schema
            .index_of(name)
            .ok_or_else(|| Error::invalid(format!("unknown clinical variable `{name}`")))?;
        let col = cohort.clinical_column(j).ok_or_else(|| {
            Error::invalid(format!("clinical column `{name}` is not numeric; preprocess the cohort first"))
        })?;
        columns.push(format!("{CLINICAL_PREFIX}{name}"));
        data.push(col);
    }
    if columns.is_empty() {
        return Err(Error::invalid("design matrix has no columns"));
    }
    let x = Array2::from_shape_fn((cohort.len(), columns.len()), |(i, j)| data[j][i]);
    Ok(DesignMatrix { x, columns })
}

pub fn build_design_matrix(cohort: &Cohort, config: &ExperimentConfig, scores: Option<&[VariableScore]>) -> Result<DesignMatrix> {
    let clinical = config.selected_clinical(cohort, scores)?;
    design_from_columns(cohort, config.use_image_features, &clinical)
}

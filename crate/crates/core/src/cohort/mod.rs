//! Patient tables: data model, CSV ingestion, clinical preprocessing,
//! event-stratified splitting and the synthetic-cohort generator.

mod io;
mod preprocess;
mod split;
mod synth;

use std::collections::HashSet;

pub(crate) use io::fmt_num;
pub use io::{load_cohort, load_cohort_inferred, read_schema, write_cohort, write_schema};
pub use preprocess::{apply_preprocess, fit_preprocess, invert_continuous, ColumnMoments, ClinicalTransform, PreprocessState};
pub use split::{largest_remainder, stratified_split, Split, SplitFractions};
pub use synth::{generate_synthetic, write_truth, SyntheticCohort, SyntheticSpec, SyntheticVar};

use crate::error::{Error, Result};

/// Prefix marking clinical columns in cohort CSV headers.
pub const CLINICAL_PREFIX: &str = "clin_";
/// Prefix marking image-feature columns in cohort CSV headers.
pub const FEATURE_PREFIX: &str = "feat_";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    /// Declared category set, kept sorted lexicographically.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClinicalVar {
    pub name: String,
    pub kind: VarKind,
}

impl ClinicalVar {
    pub fn continuous(name: impl Into<String>) -> Self {
        ClinicalVar {
            name: name.into(),
            kind: VarKind::Continuous,
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        let mut cats: Vec<String> = categories.into_iter().map(Into::into).collect();
        cats.sort();
        cats.dedup();
        ClinicalVar {
            name: name.into(),
            kind: VarKind::Categorical(cats),
        }
    }
}

/// Ordered clinical-variable declarations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    pub vars: Vec<ClinicalVar>,
}

impl Schema {
    pub fn new(vars: Vec<ClinicalVar>) -> Self {
        Schema { vars }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Cat(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub id: String,
    /// Death or censoring time, days.
    pub time: f64,
    /// `true` when death was observed.
    pub event: bool,
    /// Values aligned with the cohort schema.
    pub clinical: Vec<Value>,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub patients: Vec<Patient>,
    pub schema: Schema,
    pub feature_dim: usize,
}

impl Cohort {
    /// Builds a cohort, checking every patient against the schema.
    pub fn new(patients: Vec<Patient>, schema: Schema, feature_dim: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, p) in patients.iter().enumerate() {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::invalid(format!("duplicate patient id `{}` (patient {i})", p.id)));
            }
            if !(p.time >= 0.0 && p.time.is_finite()) {
                return Err(Error::invalid(format!("patient `{}` has invalid time {}", p.id, p.time)));
            }
            if p.features.len() != feature_dim {
                return Err(Error::invalid(format!(
                    "patient `{}` has {} features, expected {feature_dim}",
                    p.id,
                    p.features.len()
                )));
            }
            if p.clinical.len() != schema.len() {
                return Err(Error::invalid(format!(
                    "patient `{}` has {} clinical values, schema declares {}",
                    p.id,
                    p.clinical.len(),
                    schema.len()
                )));
            }
        }
        Ok(Cohort {
            patients,
            schema,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.patients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patients.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.patients.iter().filter(|p| p.event).count()
    }

    pub fn times(&self) -> Vec<f64> {
        self.patients.iter().map(|p| p.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.patients.iter().map(|p| p.event).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.patients.iter().map(|p| p.id.as_str()).collect()
    }

    pub fn max_time(&self) -> Option<f64> {
        self.patients.iter().map(|p| p.time).reduce(f64::max)
    }

    /// Numeric column of clinical variable `index`; `None` if any entry is
    /// still an uncoded category.
    pub fn clinical_column(&self, index: usize) -> Option<Vec<f64>> {
        self.patients.iter().map(|p| p.clinical[index].as_num()).collect()
    }

    /// A cohort holding the patients at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Cohort {
        Cohort {
            patients: indices.iter().map(|&i| self.patients[i].clone()).collect(),
            schema: self.schema.clone(),
            feature_dim: self.feature_dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patient(id: &str, time: f64, features: usize) -> Patient {
        Patient {
            id: id.into(),
            time,
            event: false,
            clinical: vec![],
            features: vec![0.0; features],
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Cohort::new(vec![patient("a", 1.0, 1), patient("a", 2.0, 1)], Schema::default(), 1).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn rejects_wrong_feature_length() {
        assert!(Cohort::new(vec![patient("a", 1.0, 2)], Schema::default(), 3).is_err());
    }

    #[test]
    fn rejects_negative_time() {
        assert!(Cohort::new(vec![patient("a", -1.0, 0)], Schema::default(), 0).is_err());
    }

    #[test]
    fn categorical_declaration_is_sorted() {
        let var = ClinicalVar::categorical("sex", ["male", "female", "male"]);
        assert_eq!(var.kind, VarKind::Categorical(vec!["female".into(), "male".into()]));
    }
}

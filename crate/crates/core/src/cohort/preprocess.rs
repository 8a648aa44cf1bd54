use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Cohort, Value, VarKind};
use crate::error::{Error, Result};

/// Population mean and standard deviation of one column. A column with zero
/// spread is `degenerate` and maps to 0 under the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMoments {
    pub mean: f64,
    pub std: f64,
    pub degenerate: bool,
}

impl ColumnMoments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        ColumnMoments {
            mean,
            std,
            degenerate: !(std > 0.0),
        }
    }

    pub fn z(&self, x: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }

    pub fn unz(&self, z: f64) -> f64 {
        if self.degenerate {
            self.mean
        } else {
            z * self.std + self.mean
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClinicalTransform {
    Continuous { name: String, moments: ColumnMoments },
    Categorical { name: String, codes: BTreeMap<String, u32> },
}

impl ClinicalTransform {
    pub fn name(&self) -> &str {
        match self {
            ClinicalTransform::Continuous { name, .. } | ClinicalTransform::Categorical { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessState {
    pub clinical: Vec<ClinicalTransform>,
    pub features: Vec<ColumnMoments>,
}

impl PreprocessState {
    /// Names of columns whose spread was zero when the state was fitted.
    pub fn degenerate_columns(&self) -> Vec<String> {
        let clinical = self.clinical.iter().filter_map(|t| match t {
            ClinicalTransform::Continuous { name, moments } if moments.degenerate => Some(format!("clin_{name}")),
            _ => None,
        });
        let features = self
            .features
            .iter()
            .enumerate()
            .filter(|(_, m)| m.degenerate)
            .map(|(k, _)| format!("feat_{k}"));
        clinical.chain(features).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("state serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Fits z-score moments (population convention) and categorical code tables
/// on `cohort`, which should be the training split only.
pub fn fit_preprocess(cohort: &Cohort) -> Result<PreprocessState> {
    if cohort.is_empty() {
        return Err(Error::invalid("cannot fit preprocessing on an empty cohort"));
    }
    let mut clinical = Vec::with_capacity(cohort.schema.len());
    for (j, var) in cohort.schema.vars.iter().enumerate() {
        clinical.push(match &var.kind {
            VarKind::Continuous => {
                let col = cohort
                    .clinical_column(j)
                    .ok_or_else(|| Error::invalid(format!("continuous column `{}` holds categories", var.name)))?;
                ClinicalTransform::Continuous {
                    name: var.name.clone(),
                    moments: ColumnMoments::of(&col),
                }
            }
            VarKind::Categorical(cats) => ClinicalTransform::Categorical {
                name: var.name.clone(),
                codes: cats.iter().enumerate().map(|(i, c)| (c.clone(), i as u32)).collect(),
            },
        });
    }
    let features = (0..cohort.feature_dim)
        .map(|k| {
            let col: Vec<f64> = cohort.patients.iter().map(|p| p.features[k]).collect();
            ColumnMoments::of(&col)
        })
        .collect();
    let state = PreprocessState { clinical, features };
    for col in state.degenerate_columns() {
        log::warn!("zero-variance column {col}: normalized values set to 0");
    }
    Ok(state)
}

/// Z-scores continuous and feature columns and replaces categories by their
/// integer codes. Times and events are untouched.
pub fn apply_preprocess(cohort: &Cohort, state: &PreprocessState) -> Result<Cohort> {
    check_compatible(cohort, state)?;
    let mut out = cohort.clone();
    for (row, p) in out.patients.iter_mut().enumerate() {
        for (value, transform) in p.clinical.iter_mut().zip(&state.clinical) {
            *value = match (transform, &*value) {
                (ClinicalTransform::Continuous { moments, .. }, Value::Num(x)) => Value::Num(moments.z(*x)),
                (ClinicalTransform::Categorical { name, codes }, Value::Cat(c)) => match codes.get(c) {
                    Some(&code) => Value::Num(f64::from(code)),
                    None => {
                        return Err(Error::row(row + 1, format!("unseen category `{c}` for `{name}`")));
                    }
                },
                (t, v) => {
                    return Err(Error::row(row + 1, format!("value {v:?} incompatible with transform of `{}`", t.name())));
                }
            };
        }
        for (x, m) in p.features.iter_mut().zip(&state.features) {
            *x = m.z(*x);
        }
    }
    Ok(out)
}

/// Undoes the z-score on continuous clinical and feature columns.
/// Categorical codes are left as codes.
pub fn invert_continuous(cohort: &Cohort, state: &PreprocessState) -> Result<Cohort> {
    check_compatible(cohort, state)?;
    let mut out = cohort.clone();
    for p in &mut out.patients {
        for (value, transform) in p.clinical.iter_mut().zip(&state.clinical) {
            if let (ClinicalTransform::Continuous { moments, .. }, Value::Num(z)) = (transform, &*value) {
                *value = Value::Num(moments.unz(*z));
            }
        }
        for (x, m) in p.features.iter_mut().zip(&state.features) {
            *x = m.unz(*x);
        }
    }
    Ok(out)
}

fn check_compatible(cohort: &Cohort, state: &PreprocessState) -> Result<()> {
    if cohort.feature_dim != state.features.len() {
        return Err(Error::Shape(format!(
            "cohort has {} features, preprocessing state {}",
            cohort.feature_dim,
            state.features.len()
        )));
    }
    let names: Vec<&str> = cohort.schema.names().collect();
    let state_names: Vec<&str> = state.clinical.iter().map(ClinicalTransform::name).collect();
    if names != state_names {
        return Err(Error::Shape(format!(
            "clinical columns {names:?} do not match preprocessing state {state_names:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{ClinicalVar, Patient, Schema};

    fn cohort(ages: &[f64], sexes: &[&str]) -> Cohort {
        let schema = Schema::new(vec![
            ClinicalVar::continuous("age"),
            ClinicalVar::categorical("sex", ["male", "female"]),
        ]);
        let patients = ages
            .iter()
            .zip(sexes)
            .enumerate()
            .map(|(i, (&a, &s))| Patient {
                id: format!("p{i}"),
                time: i as f64,
                event: i % 2 == 0,
                clinical: vec![Value::Num(a), Value::Cat(s.into())],
                features: vec![a * 2.0, 5.0],
            })
            .collect();
        Cohort::new(patients, schema, 2).unwrap()
    }

    #[test]
    fn population_moments() {
        let m = ColumnMoments::of(&[2.0, 4.0, 6.0]);
        assert_eq!(m.mean, 4.0);
        assert!((m.std - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lexicographic_codes() {
        let state = fit_preprocess(&cohort(&[1.0, 2.0], &["male", "female"])).unwrap();
        let ClinicalTransform::Categorical { codes, .. } = &state.clinical[1] else { panic!() };
        assert_eq!(codes["female"], 0);
        assert_eq!(codes["male"], 1);
    }

    #[test]
    fn z_score_value() {
        let m = ColumnMoments { mean: 4.0, std: 2.0, degenerate: false };
        assert_eq!(m.z(6.0), 1.0);
    }

    #[test]
    fn degenerate_feature_maps_to_zero() {
        let c = cohort(&[1.0, 2.0, 3.0], &["male", "female", "male"]);
        let state = fit_preprocess(&c).unwrap();
        assert_eq!(state.degenerate_columns(), vec!["feat_1".to_string()]);
        let out = apply_preprocess(&c, &state).unwrap();
        assert!(out.patients.iter().all(|p| p.features[1] == 0.0));
        assert_eq!(out.patients[0].clinical[1], Value::Num(1.0));
        assert_eq!(out.times(), c.times());
        assert_eq!(out.events(), c.events());
    }

    #[test]
    fn unseen_category_is_an_error() {
        let c = cohort(&[1.0, 2.0], &["male", "female"]);
        let mut state = fit_preprocess(&c).unwrap();
        if let ClinicalTransform::Categorical { codes, .. } = &mut state.clinical[1] {
            codes.remove("female");
        }
        let err = apply_preprocess(&c, &state).unwrap_err();
        assert!(err.to_string().contains("unseen category"));
    }

    #[test]
    fn json_round_trip_and_fingerprint() {
        let state = fit_preprocess(&cohort(&[1.0, 2.0, 4.0], &["male", "female", "male"])).unwrap();
        let back = PreprocessState::from_json(&state.to_json().unwrap()).unwrap();
        assert_eq!(back, state);
        assert_eq!(back.fingerprint(), state.fingerprint());
        assert_eq!(state.fingerprint().len(), 64);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let ages: Vec<f64> = (0..7).map(|i| 60.0 + (i as f64 * 1.37).sin() * 11.3).collect();
        let state = fit_preprocess(&cohort(&ages, &["male"; 7])).unwrap();
        let back = PreprocessState::from_json(&state.to_json().unwrap()).unwrap();
        assert_eq!(back.fingerprint(), state.fingerprint());
    }
}

//! Synthetic censored cohorts with a known risk ranking.
//!
//! Each patient gets a linear log-hazard `r` built from standardized
//! clinical values and a fixed random projection of the feature vector,
//! plus an unrecorded frailty term. Survival times are exponential with rate
//! `base * exp(r)`, censoring times are uniform on `[0, M]`, and the base
//! rate is solved so the expected event fraction matches the target.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ini::Ini;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{ClinicalVar, Cohort, Patient, Schema, Value};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    Continuous { mean: f64, sd: f64 },
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVar {
    pub name: String,
    pub kind: SyntheticKind,
    /// Log-hazard weight of the standardized value.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_patients: usize,
    pub feature_dim: usize,
    pub clinical: Vec<SyntheticVar>,
    /// Log-hazard weight of the unit-variance feature projection.
    pub feature_weight: f64,
    /// Standard deviation of the frailty term (not part of the recorded risk).
    pub noise_sd: f64,
    pub event_rate: f64,
    pub max_time: f64,
}

impl SyntheticSpec {
    /// 250 patients, 32 features and 8 clinical variables with signal split
    /// between the two modalities; about 15% observed deaths over 3000 days.
    pub fn informative() -> Self {
        let cont = |name: &str, mean: f64, sd: f64, weight: f64| SyntheticVar {
            name: name.into(),
            kind: SyntheticKind::Continuous { mean, sd },
            weight,
        };
        let cat = |name: &str, cats: &[&str], weight: f64| SyntheticVar {
            name: name.into(),
            kind: SyntheticKind::Categorical(cats.iter().map(|c| c.to_string()).collect()),
            weight,
        };
        SyntheticSpec {
            n_patients: 250,
            feature_dim: 32,
            clinical: vec![
                cont("age", 60.0, 12.0, 0.9),
                cont("tumor_size", 4.5, 2.0, 0.8),
                cat("sex", &["female", "male"], 0.0),
                cont("bmi", 28.0, 5.0, 0.0),
                cat("stage", &["I", "II", "III", "IV"], 0.7),
                cont("creatinine", 1.0, 0.3, 0.3),
                cat("smoker", &["never", "former", "current"], 0.0),
                cont("hemoglobin", 13.5, 1.5, -0.3),
            ],
            feature_weight: 2.0,
            noise_sd: 0.2,
            event_rate: 0.15,
            max_time: 3000.0,
        }
    }

    /// Same spec with every signal weight set to zero and no frailty.
    pub fn null(mut self) -> Self {
        for v in &mut self.clinical {
            v.weight = 0.0;
        }
        self.feature_weight = 0.0;
        self.noise_sd = 0.0;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.event_rate > 0.0 && self.event_rate < 1.0) {
            return Err(Error::invalid(format!(
                "event rate target {} infeasible, must lie in (0, 1)",
                self.event_rate
            )));
        }
        if self.n_patients == 0 {
            return Err(Error::invalid("n_patients must be positive"));
        }
        if !(self.max_time > 0.0) || !(self.noise_sd >= 0.0) {
            return Err(Error::invalid("max_time must be positive and noise_sd non-negative"));
        }
        for v in &self.clinical {
            match &v.kind {
                SyntheticKind::Continuous { sd, .. } if !(*sd > 0.0) => {
                    return Err(Error::invalid(format!("variable `{}` needs sd > 0", v.name)));
                }
                SyntheticKind::Categorical(c) if c.is_empty() => {
                    return Err(Error::invalid(format!("variable `{}` has no categories", v.name)));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Parses the INI form written by [`SyntheticSpec::to_ini`].
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cohort = ini
            .section(Some("cohort"))
            .ok_or_else(|| Error::Config("missing [cohort] section".into()))?;
        let num = |props: &ini::Properties, key: &str, default: Option<f64>| -> Result<f64> {
            match props.get(key) {
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("`{key}`: not a number: {v}"))),
                None => default.ok_or_else(|| Error::Config(format!("missing key `{key}`"))),
            }
        };
        let mut clinical = Vec::new();
        for (section, props) in ini.iter() {
            let Some(name) = section.and_then(|s| s.strip_prefix("clin.")) else {
                continue;
            };
            let kind = match props.get("kind").map(str::trim) {
                Some("continuous") | None => SyntheticKind::Continuous {
                    mean: num(props, "mean", Some(0.0))?,
                    sd: num(props, "sd", Some(1.0))?,
                },
                Some("categorical") => SyntheticKind::Categorical(
                    props
                        .get("categories")
                        .ok_or_else(|| Error::Config(format!("[clin.{name}] needs `categories`")))?
                        .split(',')
                        .map(|c| c.trim().to_string())
                        .filter(|c| !c.is_empty())
                        .collect(),
                ),
                Some(other) => return Err(Error::Config(format!("[clin.{name}] unknown kind `{other}`"))),
            };
            clinical.push(SyntheticVar {
                name: name.to_string(),
                kind,
                weight: num(props, "weight", Some(0.0))?,
            });
        }
        let spec = SyntheticSpec {
            n_patients: num(cohort, "n_patients", None)? as usize,
            feature_dim: num(cohort, "feature_dim", None)? as usize,
            clinical,
            feature_weight: num(cohort, "feature_weight", Some(0.0))?,
            noise_sd: num(cohort, "noise_sd", Some(0.0))?,
            event_rate: num(cohort, "event_rate", None)?,
            max_time: num(cohort, "max_time", None)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[cohort]");
        let _ = writeln!(s, "n_patients = {}", self.n_patients);
        let _ = writeln!(s, "feature_dim = {}", self.feature_dim);
        let _ = writeln!(s, "feature_weight = {}", self.feature_weight);
        let _ = writeln!(s, "noise_sd = {}", self.noise_sd);
        let _ = writeln!(s, "event_rate = {}", self.event_rate);
        let _ = writeln!(s, "max_time = {}", self.max_time);
        for v in &self.clinical {
            let _ = writeln!(s, "\n[clin.{}]", v.name);
            match &v.kind {
                SyntheticKind::Continuous { mean, sd } => {
                    let _ = writeln!(s, "kind = continuous\nmean = {mean}\nsd = {sd}");
                }
                SyntheticKind::Categorical(c) => {
                    let _ = writeln!(s, "kind = categorical\ncategories = {}", c.join(","));
                }
            }
            let _ = writeln!(s, "weight = {}", v.weight);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    /// Covariate-driven log-hazard per patient, aligned with the cohort.
    pub true_risk: Vec<f64>,
    /// Base hazard rate solved for the event-rate target.
    pub base_rate: f64,
}

struct GeneratedVar {
    values: Vec<Value>,
    standardized: Vec<f64>,
}

fn generate_var(var: &SyntheticVar, n: usize, seed: u64) -> GeneratedVar {
    let mut rng = rng::named(seed, &var.name);
    match &var.kind {
        SyntheticKind::Continuous { mean, sd } => {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            GeneratedVar {
                values: z.iter().map(|z| Value::Num(mean + sd * z)).collect(),
                standardized: z,
            }
        }
        SyntheticKind::Categorical(cats) => {
            let k = cats.len();
            let centre = (k as f64 - 1.0) / 2.0;
            let spread = ((k * k) as f64 - 1.0).sqrt() / 12f64.sqrt();
            let codes: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            GeneratedVar {
                values: codes.iter().map(|&c| Value::Cat(cats[c].clone())).collect(),
                standardized: codes
                    .iter()
                    .map(|&c| if k > 1 { (c as f64 - centre) / spread } else { 0.0 })
                    .collect(),
            }
        }
    }
}

/// Probability that an exponential(rate) death precedes a U[0, M] censoring.
fn event_probability(rate: f64, max_time: f64) -> f64 {
    let x = rate * max_time;
    if x < 1e-8 {
        x / 2.0
    } else {
        1.0 - (-(-x).exp_m1()) / x
    }
}

fn solve_base_rate(log_hazard: &[f64], target: f64, max_time: f64) -> f64 {
    let mean_p = |log_base: f64| {
        log_hazard
            .iter()
            .map(|r| event_probability((log_base + r).exp(), max_time))
            .sum::<f64>()
            / log_hazard.len() as f64
    };
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCohort> {
    spec.validate()?;
    let n = spec.n_patients;
    let d = spec.feature_dim;

    let mut feat_rng = rng::seeded(seed, rng::stream::SYNTH_FEATURES);
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut feat_rng)).collect())
        .collect();
    let mut proj_rng = rng::seeded(seed, rng::stream::SYNTH_PROJECTION);
    let mut direction: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut proj_rng)).collect();
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        direction.iter_mut().for_each(|x| *x /= norm);
    }

    let generated: Vec<GeneratedVar> = spec.clinical.iter().map(|v| generate_var(v, n, seed)).collect();

    // Summation in name order keeps the risk bit-identical under any
    // reordering of the declared variables.
    let mut by_name: Vec<usize> = (0..spec.clinical.len()).collect();
    by_name.sort_by(|&a, &b| spec.clinical[a].name.cmp(&spec.clinical[b].name));
    let true_risk: Vec<f64> = (0..n)
        .map(|i| {
            let clinical: f64 = by_name
                .iter()
                .map(|&j| spec.clinical[j].weight * generated[j].standardized[i])
                .sum();
            let projection: f64 = features[i].iter().zip(&direction).map(|(x, u)| x * u).sum();
            clinical + spec.feature_weight * projection
        })
        .collect();

    let mut surv_rng = rng::seeded(seed, rng::stream::SYNTH_SURVIVAL);
    let frailty: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut surv_rng);
            spec.noise_sd * z
        })
        .collect();
    let log_hazard: Vec<f64> = true_risk.iter().zip(&frailty).map(|(r, e)| r + e).collect();
    let base_rate = solve_base_rate(&log_hazard, spec.event_rate, spec.max_time);

    let width = n.to_string().len();
    let patients: Vec<Patient> = (0..n)
        .map(|i| {
            let rate = base_rate * log_hazard[i].exp();
            let u: f64 = surv_rng.random();
            let death = -(1.0 - u).ln() / rate;
            let censor = surv_rng.random::<f64>() * spec.max_time;
            Patient {
                id: format!("S{i:0width$}"),
                time: death.min(censor),
                event: death <= censor,
                clinical: generated.iter().map(|g| g.values[i].clone()).collect(),
                features: features[i].clone(),
            }
        })
        .collect();

    let schema = Schema::new(
        spec.clinical
            .iter()
            .map(|v| match &v.kind {
                SyntheticKind::Continuous { .. } => ClinicalVar::continuous(v.name.clone()),
                SyntheticKind::Categorical(c) => ClinicalVar::categorical(v.name.clone(), c.iter().cloned()),
            })
            .collect(),
    );
    Ok(SyntheticCohort {
        cohort: Cohort::new(patients, schema, d)?,
        true_risk,
        base_rate,
    })
}

/// Writes the `id,true_risk` sidecar.
pub fn write_truth(synth: &SyntheticCohort, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("id,true_risk\n");
    for (p, r) in synth.cohort.patients.iter().zip(&synth.true_risk) {
        let _ = writeln!(out, "{},{}", p.id, r);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

//! Run configuration: an INI-style `key = value` file with section headers.
//!
//! Key names are unique across sections, so any key may be overridden by
//! name (the CLI maps `--<key>` flags onto [`RunConfig::set`]). Sections in
//! the input are only a grouping aid; the resolved form is always written
//! back with the canonical sections below.

use std::fmt::Write as _;
use std::path::PathBuf;

use ini::Ini;

use crate::cohort::SplitFractions;
use crate::curves::CensoredAt;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::select::{ClinicalMode, ExperimentConfig};

/// Canonical sections and the keys each contains, in output order.
pub const SECTIONS: &[(&str, &[&str])] = &[
    ("paths", &["cohort", "schema", "out_dir"]),
    ("run", &["seed", "experiments", "parallel"]),
    ("split", &["fractions"]),
    ("grid", &["n_intervals", "max_time", "points_per_interval"]),
    ("train", &["max_epochs", "patience", "learning_rate", "batch_size", "lr_finder"]),
    ("select", &["n_trees", "spearman_thresholds", "importance_thresholds"]),
    ("evaluate", &["censored_eval"]),
];

pub fn is_key(key: &str) -> bool {
    SECTIONS.iter().any(|(_, keys)| keys.contains(&key))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxTime {
    /// Largest observed time in the training split.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cohort: Option<PathBuf>,
    /// Optional schema file; without one, column kinds are inferred.
    pub schema: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    /// Comma-separated experiment list, e.g. `1-9` or `1,3,spearman@0.2+features`.
    pub experiments: String,
    pub parallel: bool,
    pub fractions: SplitFractions,
    pub n_intervals: usize,
    pub max_time: MaxTime,
    pub points_per_interval: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub lr_finder: bool,
    pub n_trees: usize,
    pub spearman_thresholds: Vec<f64>,
    pub importance_thresholds: Vec<f64>,
    pub censored_eval: CensoredAt,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cohort: None,
            schema: None,
            out_dir: PathBuf::from("runs"),
            seed: None,
            experiments: "1-9".into(),
            parallel: true,
            fractions: SplitFractions::default(),
            n_intervals: 15,
            max_time: MaxTime::Auto,
            points_per_interval: 100,
            max_epochs: 500,
            patience: 10,
            learning_rate: 0.01,
            batch_size: 32,
            lr_finder: false,
            n_trees: 100,
            spearman_thresholds: vec![0.1, 0.05, 0.01],
            importance_thresholds: vec![0.1, 0.01, 0.001],
            censored_eval: CensoredAt::CensoringTime,
        }
    }
}

fn cfg_err(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key} = {value}: {why}"))
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| cfg_err(key, value, e))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(cfg_err(key, value, "expected true or false")),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse::<f64>(key, v)).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        for (_, props) in ini.iter() {
            for (k, v) in props.iter() {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ini_str(&text)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "cohort" => self.cohort = Some(PathBuf::from(v)),
            "schema" => self.schema = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "seed" => self.seed = Some(parse(key, v)?),
            "experiments" => self.experiments = v.to_string(),
            "parallel" => self.parallel = parse_bool(key, v)?,
            "fractions" => {
                let f = parse_list(key, v)?;
                if f.len() != 3 {
                    return Err(cfg_err(key, v, "expected train,val,test"));
                }
                self.fractions = SplitFractions::new(f[0], f[1], f[2])?;
            }
            "n_intervals" => self.n_intervals = parse(key, v)?,
            "max_time" => {
                self.max_time = if v.eq_ignore_ascii_case("auto") {
                    MaxTime::Auto
                } else {
                    MaxTime::Fixed(parse(key, v)?)
                }
            }
            "points_per_interval" => self.points_per_interval = parse(key, v)?,
            "max_epochs" => self.max_epochs = parse(key, v)?,
            "patience" => self.patience = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "lr_finder" => self.lr_finder = parse_bool(key, v)?,
            "n_trees" => self.n_trees = parse(key, v)?,
            "spearman_thresholds" => self.spearman_thresholds = parse_list(key, v)?,
            "importance_thresholds" => self.importance_thresholds = parse_list(key, v)?,
            "censored_eval" => {
                self.censored_eval = match v {
                    "censoring_time" => CensoredAt::CensoringTime,
                    "max_time" => CensoredAt::MaxTime,
                    _ => return Err(cfg_err(key, v, "expected censoring_time or max_time")),
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Textual value of a key, as written in the resolved form.
    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        Some(match key {
            "cohort" => path(&self.cohort),
            "schema" => path(&self.schema),
            "out_dir" => self.out_dir.display().to_string(),
            "seed" => self.seed.map(|s| s.to_string()).unwrap_or_default(),
            "experiments" => self.experiments.clone(),
            "parallel" => self.parallel.to_string(),
            "fractions" => join(&self.fractions.as_array()),
            "n_intervals" => self.n_intervals.to_string(),
            "max_time" => match self.max_time {
                MaxTime::Auto => "auto".into(),
                MaxTime::Fixed(m) => m.to_string(),
            },
            "points_per_interval" => self.points_per_interval.to_string(),
            "max_epochs" => self.max_epochs.to_string(),
            "patience" => self.patience.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "lr_finder" => self.lr_finder.to_string(),
            "n_trees" => self.n_trees.to_string(),
            "spearman_thresholds" => join(&self.spearman_thresholds),
            "importance_thresholds" => join(&self.importance_thresholds),
            "censored_eval" => match self.censored_eval {
                CensoredAt::CensoringTime => "censoring_time".into(),
                CensoredAt::MaxTime => "max_time".into(),
            },
            _ => return None,
        })
    }

    /// Every key in canonical sections; parses back to an equal config.
    pub fn to_resolved(&self) -> String {
        let mut s = String::new();
        for (i, (section, keys)) in SECTIONS.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            let _ = writeln!(s, "[{section}]");
            for key in *keys {
                let _ = writeln!(s, "{key} = {}", self.get(key).expect("known key"));
            }
        }
        s
    }

    pub fn exec(&self) -> Exec {
        if self.parallel {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required (set `seed` or pass --seed)".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_intervals < 2 {
            return Err(Error::Config("n_intervals must be at least 2".into()));
        }
        if let MaxTime::Fixed(m) = self.max_time {
            if !(m > 0.0) {
                return Err(Error::Config("max_time must be positive or `auto`".into()));
            }
        }
        if self.points_per_interval == 0 || self.n_trees == 0 {
            return Err(Error::Config("points_per_interval and n_trees must be positive".into()));
        }
        for (name, list) in [
            ("spearman_thresholds", &self.spearman_thresholds),
            ("importance_thresholds", &self.importance_thresholds),
        ] {
            if list.len() != 3 || list.iter().any(|&t| !(t > 0.0)) {
                return Err(Error::Config(format!("{name} must be three positive numbers")));
            }
        }
        self.experiment_list().map(|_| ())
    }

    /// Expands `experiments` into configurations.
    ///
    /// Items are canonical ids (`3`), id ranges (`4-6`) or custom
    /// `<mode>[@threshold][+features]` triples with mode one of `none`,
    /// `all`, `spearman`, `importance`. Custom experiments are numbered from
    /// 10 in order of appearance.
    pub fn experiment_list(&self) -> Result<Vec<ExperimentConfig>> {
        let mut out = Vec::new();
        let mut next_custom = 10;
        for item in self.experiments.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = |why: &str| cfg_err("experiments", item, why);
            if item.starts_with(|c: char| c.is_ascii_digit()) {
                let (lo, hi) = match item.split_once('-') {
                    Some((a, b)) => (parse::<usize>("experiments", a)?, parse::<usize>("experiments", b)?),
                    None => {
                        let id = parse::<usize>("experiments", item)?;
                        (id, id)
                    }
                };
                if lo > hi {
                    return Err(bad("empty range"));
                }
                for id in lo..=hi {
                    out.push(
                        ExperimentConfig::canonical_with_thresholds(
                            id,
                            &self.spearman_thresholds,
                            &self.importance_thresholds,
                        )
                        .map_err(|e| bad(&e.to_string()))?,
                    );
                }
                continue;
            }
            let (body, use_image_features) = match item.strip_suffix("+features") {
                Some(b) => (b, true),
                None => (item, false),
            };
            let (mode, theta) = match body.split_once('@') {
                Some((m, t)) => (m, Some(parse::<f64>("experiments", t)?)),
                None => (body, None),
            };
            let clinical = match (mode, theta) {
                ("none", None) => ClinicalMode::None,
                ("all", None) => ClinicalMode::All,
                ("spearman", Some(t)) if t > 0.0 => ClinicalMode::SpearmanThreshold(t),
                ("importance", Some(t)) if t > 0.0 => ClinicalMode::ImportanceThreshold(t),
                _ => return Err(bad("expected none, all, spearman@θ or importance@θ with θ > 0")),
            };
            if clinical == ClinicalMode::None && !use_image_features {
                return Err(bad("experiment has no inputs"));
            }
            out.push(ExperimentConfig {
                id: next_custom,
                use_image_features,
                clinical,
            });
            next_custom += 1;
        }
        if out.is_empty() {
            return Err(Error::Config("no experiments requested".into()));
        }
        let mut ids: Vec<usize> = out.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("experiment listed twice".into()));
        }
        Ok(out)
    }
}

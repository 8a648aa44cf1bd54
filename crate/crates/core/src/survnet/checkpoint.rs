//! Plain-text model checkpoints.
//!
//! One `key = value` pair per line. The first line is the format tag;
//! tensors are written as `rows x cols : v v v ...` with shortest
//! round-trip float formatting, so a reload is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::network::{BatchNorm, Dense, HiddenLayer, NetworkConfig, SurvivalNetwork};
use crate::error::{Error, Result};

const FORMAT: &str = "dtsurv-checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: SurvivalNetwork,
    pub grid_max_time: f64,
    /// Design-matrix column names the network was trained on.
    pub columns: Vec<String>,
    /// Fingerprint of the preprocessing state used for training.
    pub preprocess_sha256: String,
}

fn push_tensor(out: &mut String, key: &str, rows: usize, cols: usize, values: &[f64]) {
    let _ = write!(out, "{key} = {rows}x{cols} :");
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

fn push_vec(out: &mut String, key: &str, v: &Array1<f64>) {
    push_tensor(out, key, 1, v.len(), v.as_slice().expect("standard layout"));
}

pub fn write_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let net = &ckpt.network;
    let cfg = &net.config;
    let mut out = format!("{FORMAT}\n");
    let _ = writeln!(out, "preprocess_sha256 = {}", ckpt.preprocess_sha256);
    let _ = writeln!(out, "grid_max_time = {}", ckpt.grid_max_time);
    let _ = writeln!(out, "columns = {}", ckpt.columns.join(","));
    let _ = writeln!(out, "input_dim = {}", cfg.input_dim);
    let hidden: Vec<String> = cfg.hidden.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "hidden = {}", hidden.join(","));
    let _ = writeln!(out, "n_intervals = {}", cfg.n_intervals);
    let _ = writeln!(out, "dropout = {}", cfg.dropout);
    let _ = writeln!(out, "batch_norm = {}", u8::from(cfg.batch_norm));
    let _ = writeln!(out, "bn_momentum = {}", cfg.bn_momentum);
    let _ = writeln!(out, "bn_eps = {}", cfg.bn_eps);
    for (k, layer) in net.hidden.iter().enumerate() {
        let (r, c) = layer.dense.weight.dim();
        push_tensor(&mut out, &format!("hidden.{k}.weight"), r, c, layer.dense.weight.as_slice().expect("standard layout"));
        push_vec(&mut out, &format!("hidden.{k}.bias"), &layer.dense.bias);
        if let Some(bn) = &layer.norm {
            push_vec(&mut out, &format!("hidden.{k}.bn.gamma"), &bn.gamma);
            push_vec(&mut out, &format!("hidden.{k}.bn.beta"), &bn.beta);
            push_vec(&mut out, &format!("hidden.{k}.bn.running_mean"), &bn.running_mean);
            push_vec(&mut out, &format!("hidden.{k}.bn.running_var"), &bn.running_var);
        }
    }
    let (r, c) = net.output.weight.dim();
    push_tensor(&mut out, "output.weight", r, c, net.output.weight.as_slice().expect("standard layout"));
    push_vec(&mut out, "output.bias", &net.output.bias);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Checkpoint(format!("missing `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Checkpoint(format!("malformed `{key}`")))
    }

    fn tensor(&self, key: &str, rows: usize, cols: usize) -> Result<Vec<f64>> {
        let raw = self.get(key)?;
        let (shape, values) = raw
            .split_once(':')
            .ok_or_else(|| Error::Checkpoint(format!("`{key}` lacks a shape")))?;
        if shape.trim() != format!("{rows}x{cols}") {
            return Err(Error::Checkpoint(format!("`{key}` has shape {}, expected {rows}x{cols}", shape.trim())));
        }
        let v: Vec<f64> = values
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Checkpoint(format!("`{key}` holds a non-number")))?;
        if v.len() != rows * cols {
            return Err(Error::Checkpoint(format!("`{key}` has {} values, expected {}", v.len(), rows * cols)));
        }
        Ok(v)
    }

    fn matrix(&self, key: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        Ok(Array2::from_shape_vec((rows, cols), self.tensor(key, rows, cols)?).expect("length checked"))
    }

    fn vector(&self, key: &str, len: usize) -> Result<Array1<f64>> {
        Ok(Array1::from(self.tensor(key, 1, len)?))
    }
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(FORMAT) {
        return Err(Error::Checkpoint(format!("{} is not a {FORMAT} file", path.display())));
    }
    let mut map = BTreeMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::Checkpoint(format!("malformed line `{}`", &line[..line.len().min(40)])))?;
        map.insert(k.trim().to_string(), v.to_string());
    }
    let f = Fields(map);
    let hidden_sizes: Vec<usize> = f
        .get("hidden")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Checkpoint("malformed `hidden`".into()))?;
    let config = NetworkConfig {
        input_dim: f.parse("input_dim")?,
        hidden: hidden_sizes,
        n_intervals: f.parse("n_intervals")?,
        dropout: f.parse("dropout")?,
        batch_norm: f.parse::<u8>("batch_norm")? == 1,
        bn_momentum: f.parse("bn_momentum")?,
        bn_eps: f.parse("bn_eps")?,
    };
    let mut fan_in = config.input_dim;
    let mut hidden = Vec::new();
    for (k, &width) in config.hidden.iter().enumerate() {
        let dense = Dense {
            weight: f.matrix(&format!("hidden.{k}.weight"), fan_in, width)?,
            bias: f.vector(&format!("hidden.{k}.bias"), width)?,
        };
        let norm = if config.batch_norm {
            Some(BatchNorm {
                gamma: f.vector(&format!("hidden.{k}.bn.gamma"), width)?,
                beta: f.vector(&format!("hidden.{k}.bn.beta"), width)?,
                running_mean: f.vector(&format!("hidden.{k}.bn.running_mean"), width)?,
                running_var: f.vector(&format!("hidden.{k}.bn.running_var"), width)?,
            })
        } else {
            None
        };
        hidden.push(HiddenLayer { dense, norm });
        fan_in = width;
    }
    let output = Dense {
        weight: f.matrix("output.weight", fan_in, config.n_intervals)?,
        bias: f.vector("output.bias", config.n_intervals)?,
    };
    let columns = f.get("columns")?.split(',').filter(|c| !c.is_empty()).map(str::to_string).collect();
    Ok(Checkpoint {
        network: SurvivalNetwork::from_parts(config, hidden, output),
        grid_max_time: f.parse("grid_max_time")?,
        columns,
        preprocess_sha256: f.get("preprocess_sha256")?.to_string(),
    })
}

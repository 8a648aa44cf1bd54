//! Feedforward survival network: `[affine -> batch norm -> ReLU -> dropout]`
//! per hidden layer, then `affine -> sigmoid`. Outputs are per-interval
//! conditional survival probabilities. Gradients are derived by hand.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub n_intervals: usize,
    pub dropout: f64,
    pub batch_norm: bool,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl NetworkConfig {
    /// Hidden widths 500 and 100, dropout 0.3, batch norm after each hidden
    /// affine layer.
    pub fn standard(input_dim: usize, n_intervals: usize) -> Self {
        NetworkConfig {
            input_dim,
            hidden: vec![500, 100],
            n_intervals,
            dropout: 0.3,
            batch_norm: true,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `fan_in x fan_out`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn glorot(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Dense {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..=limit)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub dense: Dense,
    pub norm: Option<BatchNorm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone)]
pub struct SurvivalNetwork {
    pub config: NetworkConfig,
    pub hidden: Vec<HiddenLayer>,
    pub output: Dense,
    /// Bumped on every parameter update; caches from older generations are
    /// rejected by `backward`.
    generation: u64,
}

/// Activations saved by a train-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    inputs: Vec<Array2<f64>>,
    xhat: Vec<Option<Array2<f64>>>,
    inv_std: Vec<Option<Array1<f64>>>,
    pre_relu: Vec<Array2<f64>>,
    masks: Vec<Array2<f64>>,
    last_hidden: Array2<f64>,
    pub pred: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerGrad>,
    pub output: LayerGrad,
}

impl Gradients {
    /// Flat views in the same order as [`SurvivalNetwork::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for g in self.hidden.iter().chain(std::iter::once(&self.output)) {
            out.push(g.weight.as_slice().expect("standard layout"));
            out.push(g.bias.as_slice().expect("standard layout"));
            if let (Some(gamma), Some(beta)) = (&g.gamma, &g.beta) {
                out.push(gamma.as_slice().expect("standard layout"));
                out.push(beta.as_slice().expect("standard layout"));
            }
        }
        out
    }
}

impl PartialEq for SurvivalNetwork {
    /// Compares configuration and parameters, ignoring the update counter.
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.hidden == other.hidden && self.output == other.output
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SurvivalNetwork {
    /// Glorot-uniform weights, zero biases, unit batch-norm scale and zero
    /// shift.
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self> {
        if config.input_dim == 0 || config.n_intervals == 0 {
            return Err(Error::invalid("network needs positive input and output widths"));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::invalid(format!("dropout {} outside [0, 1)", config.dropout)));
        }
        let mut rng = rng::seeded(seed, rng::stream::INIT);
        let mut fan_in = config.input_dim;
        let mut hidden = Vec::with_capacity(config.hidden.len());
        for &width in &config.hidden {
            hidden.push(HiddenLayer {
                dense: Dense::glorot(fan_in, width, &mut rng),
                norm: config.batch_norm.then(|| BatchNorm::new(width)),
            });
            fan_in = width;
        }
        let output = Dense::glorot(fan_in, config.n_intervals, &mut rng);
        Ok(SurvivalNetwork {
            config,
            hidden,
            output,
            generation: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn n_intervals(&self) -> usize {
        self.config.n_intervals
    }

    fn check_width(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.config.input_dim {
            return Err(Error::Shape(format!(
                "batch has {} columns, network expects {}",
                x.ncols(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    /// Eval-mode forward pass: batch norm uses running statistics and dropout
    /// is off. A pure function of the parameters and input.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_width(x)?;
        let mut a = x.to_owned();
        for layer in &self.hidden {
            let mut z = layer.dense.apply(a.view());
            if let Some(bn) = &layer.norm {
                let scale = &bn.gamma / bn.running_var.mapv(|v| (v + self.config.bn_eps).sqrt());
                z = (z - &bn.running_mean) * &scale + &bn.beta;
            }
            z.mapv_inplace(|v| v.max(0.0));
            a = z;
        }
        Ok(self.output.apply(a.view()).mapv(sigmoid))
    }

    /// Forward in either mode. Train mode draws fresh dropout masks from
    /// `rng` and updates the batch-norm running statistics.
    pub fn forward(&mut self, x: ArrayView2<f64>, mode: Mode, rng: &mut Rng) -> Result<Array2<f64>> {
        match mode {
            Mode::Eval => self.predict(x),
            Mode::Train => Ok(self.forward_train(x, rng)?.pred),
        }
    }

    /// Samples inverted-dropout masks (entries 0 or `1/(1-p)`) for a batch.
    pub fn sample_masks(&self, batch: usize, rng: &mut Rng) -> Vec<Array2<f64>> {
        let p = self.config.dropout;
        let keep = 1.0 / (1.0 - p);
        self.config
            .hidden
            .iter()
            .map(|&w| Array2::from_shape_simple_fn((batch, w), || if rng.random::<f64>() < p { 0.0 } else { keep }))
            .collect()
    }

    pub fn forward_train(&mut self, x: ArrayView2<f64>, rng: &mut Rng) -> Result<ForwardCache> {
        let masks = self.sample_masks(x.nrows(), rng);
        self.forward_train_with_masks(x, masks, true)
    }

    /// Train-mode forward with caller-supplied dropout masks. When
    /// `update_running` is false the running statistics are left alone,
    /// which finite-difference checks rely on.
    pub fn forward_train_with_masks(
        &mut self,
        x: ArrayView2<f64>,
        masks: Vec<Array2<f64>>,
        update_running: bool,
    ) -> Result<ForwardCache> {
        self.check_width(x)?;
        let n = x.nrows();
        if n < 2 && self.config.batch_norm {
            return Err(Error::invalid("train-mode batch norm needs a batch of at least 2"));
        }
        if masks.len() != self.hidden.len() || masks.iter().zip(&self.config.hidden).any(|(m, &w)| m.dim() != (n, w)) {
            return Err(Error::Shape("dropout masks do not match the batch".into()));
        }
        let eps = self.config.bn_eps;
        let momentum = self.config.bn_momentum;
        let mut cache = ForwardCache {
            generation: self.generation,
            inputs: Vec::new(),
            xhat: Vec::new(),
            inv_std: Vec::new(),
            pre_relu: Vec::new(),
            masks: Vec::new(),
            last_hidden: Array2::zeros((0, 0)),
            pred: Array2::zeros((0, 0)),
        };
        let mut a = x.to_owned();
        for (layer, mask) in self.hidden.iter_mut().zip(masks) {
            let z = layer.dense.apply(a.view());
            let y = match &mut layer.norm {
                Some(bn) => {
                    let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                    let centered = &z - &mean;
                    let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("non-empty batch");
                    let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
                    let xhat = &centered * &inv_std;
                    let y = &xhat * &bn.gamma + &bn.beta;
                    if update_running {
                        bn.running_mean = &bn.running_mean * (1.0 - momentum) + &mean * momentum;
                        bn.running_var = &bn.running_var * (1.0 - momentum) + &var * momentum;
                    }
                    cache.xhat.push(Some(xhat));
                    cache.inv_std.push(Some(inv_std));
                    y
                }
                None => {
                    cache.xhat.push(None);
                    cache.inv_std.push(None);
                    z
                }
            };
            let out = y.mapv(|v| v.max(0.0)) * &mask;
            cache.inputs.push(a);
            cache.pre_relu.push(y);
            cache.masks.push(mask);
            a = out;
        }
        cache.pred = self.output.apply(a.view()).mapv(sigmoid);
        cache.last_hidden = a;
        Ok(cache)
    }

    /// Backpropagates `d_logits` (gradient of the objective with respect to
    /// the pre-sigmoid outputs) through the cached train-mode pass.
    pub fn backward(&self, cache: &ForwardCache, d_logits: ArrayView2<f64>) -> Result<Gradients> {
        if cache.generation != self.generation {
            return Err(Error::invalid("stale forward cache: parameters changed since the forward pass"));
        }
        if d_logits.dim() != cache.pred.dim() {
            return Err(Error::Shape("output gradient does not match cached predictions".into()));
        }
        let output = LayerGrad {
            weight: cache.last_hidden.t().dot(&d_logits),
            bias: d_logits.sum_axis(Axis(0)),
            gamma: None,
            beta: None,
        };
        let mut d_a = d_logits.dot(&self.output.weight.t());
        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (k, layer) in self.hidden.iter().enumerate().rev() {
            let mut d_y = d_a * &cache.masks[k];
            d_y.zip_mut_with(&cache.pre_relu[k], |d, &y| {
                if y <= 0.0 {
                    *d = 0.0;
                }
            });
            let (d_z, gamma, beta) = match (&layer.norm, &cache.xhat[k], &cache.inv_std[k]) {
                (Some(bn), Some(xhat), Some(inv_std)) => {
                    let n = d_y.nrows() as f64;
                    let d_gamma = (&d_y * xhat).sum_axis(Axis(0));
                    let d_beta = d_y.sum_axis(Axis(0));
                    let d_xhat = &d_y * &bn.gamma;
                    let sum_dx = d_xhat.sum_axis(Axis(0));
                    let sum_dx_xhat = (&d_xhat * xhat).sum_axis(Axis(0));
                    let d_z = (d_xhat * n - &sum_dx - xhat * &sum_dx_xhat) * &(inv_std / n);
                    (d_z, Some(d_gamma), Some(d_beta))
                }
                _ => (d_y, None, None),
            };
            d_a = d_z.dot(&layer.dense.weight.t());
            hidden.push(LayerGrad {
                weight: cache.inputs[k].t().dot(&d_z),
                bias: d_z.sum_axis(Axis(0)),
                gamma,
                beta,
            });
        }
        hidden.reverse();
        Ok(Gradients { hidden, output })
    }

    /// Trainable parameters as flat mutable slices: per layer weight, bias,
    /// then batch-norm scale and shift when present; output layer last.
    /// Invalidates outstanding forward caches.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.hidden {
            out.push(layer.dense.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.dense.bias.as_slice_mut().expect("standard layout"));
            if let Some(bn) = &mut layer.norm {
                out.push(bn.gamma.as_slice_mut().expect("standard layout"));
                out.push(bn.beta.as_slice_mut().expect("standard layout"));
            }
        }
        out.push(self.output.weight.as_slice_mut().expect("standard layout"));
        out.push(self.output.bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn n_params(&self) -> usize {
        let mut total = self.output.weight.len() + self.output.bias.len();
        for layer in &self.hidden {
            total += layer.dense.weight.len() + layer.dense.bias.len();
            if let Some(bn) = &layer.norm {
                total += bn.gamma.len() + bn.beta.len();
            }
        }
        total
    }

    pub(crate) fn from_parts(config: NetworkConfig, hidden: Vec<HiddenLayer>, output: Dense) -> Self {
        SurvivalNetwork {
            config,
            hidden,
            output,
            generation: 0,
        }
    }
}

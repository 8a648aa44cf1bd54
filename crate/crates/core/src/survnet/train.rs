use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use super::adam::Adam;
use super::loss::{loss, loss_grad_logits, mean_loss};
use super::network::SurvivalNetwork;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::timegrid::{make_targets, SurvivalTarget, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            max_epochs: 500,
            patience: 10,
            learning_rate: 0.01,
            batch_size: 32,
            seed,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::invalid("max_epochs, batch_size and learning_rate must be positive"));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::invalid(format!(
                "patience {} must be below max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        Ok(())
    }
}

/// Design rows paired with their interval targets.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub x: Array2<f64>,
    pub targets: Vec<SurvivalTarget>,
}

impl TrainData {
    pub fn new(x: Array2<f64>, times: &[f64], events: &[bool], grid: &TimeGrid) -> Result<Self> {
        if x.nrows() != times.len() || times.len() != events.len() {
            return Err(Error::Shape(format!(
                "{} rows, {} times, {} events",
                x.nrows(),
                times.len(),
                events.len()
            )));
        }
        Ok(TrainData {
            x,
            targets: make_targets(grid, times, events)?,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn batch(&self, rows: &[usize]) -> (Array2<f64>, Vec<SurvivalTarget>) {
        (
            self.x.select(Axis(0), rows),
            rows.iter().map(|&r| self.targets[r].clone()).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Validation loss of the untrained network.
    pub initial_val_loss: f64,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch with the lowest validation loss.
    pub best_epoch: usize,
    /// Number of epochs actually run.
    pub stopped_epoch: usize,
}

impl TrainHistory {
    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch - 1]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for (e, (t, v)) in self.train_loss.iter().zip(&self.val_loss).enumerate() {
            let _ = writeln!(s, "{},{t},{v}", e + 1);
        }
        s
    }
}

/// Shuffled mini-batches. A trailing batch of one row is folded into the
/// previous batch, since train-mode batch norm needs two rows.
fn batches(n: usize, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut out: Vec<Vec<usize>> = order.chunks(batch_size.max(2)).map(<[usize]>::to_vec).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let last = out.pop().expect("non-empty");
        out.last_mut().expect("non-empty").extend(last);
    }
    out
}

/// One optimizer step on a batch; returns the summed batch loss before the
/// update.
fn step(net: &mut SurvivalNetwork, adam: &mut Adam, x: ArrayView2<f64>, targets: &[SurvivalTarget], lr: f64, rng: &mut Rng) -> Result<f64> {
    let cache = net.forward_train(x, rng)?;
    let batch_loss = loss(cache.pred.view(), targets)?;
    let d_logits = loss_grad_logits(cache.pred.view(), targets)?;
    let grads = net.backward(&cache, d_logits.view())?;
    adam.step(net.param_slices_mut(), grads.slices(), lr);
    Ok(batch_loss)
}

pub fn evaluate_loss(net: &SurvivalNetwork, data: &TrainData) -> Result<f64> {
    mean_loss(net.predict(data.x.view())?.view(), &data.targets)
}

/// Mini-batch Adam with early stopping on validation loss. Training halts
/// once the validation loss has failed to improve for `patience`
/// consecutive epochs; the network from the best epoch is returned.
pub fn train(mut net: SurvivalNetwork, train_data: &TrainData, val_data: &TrainData, config: &TrainConfig) -> Result<(SurvivalNetwork, TrainHistory)> {
    config.validate()?;
    if train_data.len() < 2 || val_data.is_empty() {
        return Err(Error::invalid(format!(
            "need at least 2 training and 1 validation patients, got {} and {}",
            train_data.len(),
            val_data.len()
        )));
    }
    let mut rng = rng::seeded(config.seed, rng::stream::TRAIN);
    let mut adam = Adam::new(config.beta1, config.beta2, config.eps);
    let initial_val_loss = evaluate_loss(&net, val_data)?;

    let mut history = TrainHistory {
        initial_val_loss,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_epoch: 0,
    };
    let mut best = net.clone();
    let mut best_loss = f64::INFINITY;
    let mut waited = 0;
    for epoch in 1..=config.max_epochs {
        let mut total = 0.0;
        for rows in batches(train_data.len(), config.batch_size, &mut rng) {
            let (x, targets) = train_data.batch(&rows);
            total += step(&mut net, &mut adam, x.view(), &targets, config.learning_rate, &mut rng)?;
        }
        let val = evaluate_loss(&net, val_data)?;
        history.train_loss.push(total / train_data.len() as f64);
        history.val_loss.push(val);
        history.stopped_epoch = epoch;
        if val < best_loss {
            best_loss = val;
            best = net.clone();
            history.best_epoch = epoch;
            waited = 0;
        } else {
            waited += 1;
            if waited >= config.patience.max(1) {
                break;
            }
        }
    }
    if history.best_epoch == 0 {
        return Err(Error::invalid("validation loss was never finite"));
    }
    Ok((best, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrSweep {
    pub lrs: Vec<f64>,
    pub losses: Vec<f64>,
    pub suggested: f64,
    /// The sweep stopped early because the loss exceeded 4x its start.
    pub diverged: bool,
}

/// Geometric learning-rate schedule from `lr_min` to `lr_max`.
pub fn geometric_lrs(lr_min: f64, lr_max: f64, n_steps: usize) -> Vec<f64> {
    if n_steps == 1 {
        return vec![lr_min];
    }
    let ratio = (lr_max / lr_min).ln() / (n_steps - 1) as f64;
    (0..n_steps).map(|k| lr_min * (ratio * k as f64).exp()).collect()
}

/// Learning rate at the steepest descent of the loss curve after a 5-point
/// centred moving average.
pub fn suggest_lr(lrs: &[f64], losses: &[f64]) -> f64 {
    let n = losses.len();
    if n < 2 {
        return lrs[0];
    }
    let smooth: Vec<f64> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 3).min(n);
            losses[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let (best, _) = smooth
        .windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, d)| if d < acc.1 { (k, d) } else { acc });
    lrs[best]
}

/// LR range test driver: calls `step(lr)` once per scheduled rate, each
/// call performing one update and returning the loss it observed.
pub fn lr_sweep<F>(lr_min: f64, lr_max: f64, n_steps: usize, mut step: F) -> Result<LrSweep>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lr_min > 0.0 && lr_max > lr_min) {
        return Err(Error::invalid(format!("need 0 < lr_min < lr_max, got {lr_min} and {lr_max}")));
    }
    if n_steps < 2 {
        return Err(Error::invalid("lr sweep needs at least 2 steps"));
    }
    let schedule = geometric_lrs(lr_min, lr_max, n_steps);
    let mut lrs = Vec::with_capacity(n_steps);
    let mut losses = Vec::with_capacity(n_steps);
    let mut diverged = false;
    for &lr in &schedule {
        let l = step(lr)?;
        if let Some(&first) = losses.first() {
            if !(l <= 4.0 * first) {
                diverged = true;
                break;
            }
        }
        lrs.push(lr);
        losses.push(l);
    }
    let suggested = suggest_lr(&lrs, &losses);
    Ok(LrSweep {
        lrs,
        losses,
        suggested,
        diverged,
    })
}

/// Runs the LR range test on a copy of `net`: one mini-batch Adam step per
/// scheduled rate, cycling through reshuffled epochs as needed.
pub fn lr_range_test(net: &SurvivalNetwork, data: &TrainData, lr_min: f64, lr_max: f64, n_steps: usize, batch_size: usize, seed: u64) -> Result<LrSweep> {
    if data.len() < 2 {
        return Err(Error::invalid("lr range test needs at least 2 patients"));
    }
    let mut net = net.clone();
    let mut adam = Adam::default();
    let mut rng = rng::seeded(seed, rng::stream::LR_FINDER);
    let mut queue: Vec<Vec<usize>> = Vec::new();
    lr_sweep(lr_min, lr_max, n_steps, |lr| {
        if queue.is_empty() {
            queue = batches(data.len(), batch_size, &mut rng);
            queue.reverse();
        }
        let rows = queue.pop().expect("refilled");
        let (x, targets) = data.batch(&rows);
        Ok(step(&mut net, &mut adam, x.view(), &targets, lr, &mut rng)? / rows.len() as f64)
    })
}

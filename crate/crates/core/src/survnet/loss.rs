//! Discrete logistic-hazard negative log-likelihood.
//!
//! For patient `x` and interval `i` the loss term is
//! `-ln(1 + s(pred - 1)) - ln(1 - f * pred)` where `s`/`f` are the
//! survived/death indicators, so survived intervals contribute `-ln(pred)`,
//! the death interval `-ln(1 - pred)`, and everything else nothing.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::timegrid::SurvivalTarget;

pub const PRED_MIN: f64 = 1e-7;
pub const PRED_MAX: f64 = 1.0 - 1e-7;

/// `ln` with its argument floored at `PRED_MIN`. Flooring the log argument
/// rather than the prediction keeps an exactly right prediction at zero loss
/// while still bounding a confidently wrong one.
fn safe_ln(x: f64) -> f64 {
    x.max(PRED_MIN).ln()
}

fn check(pred: ArrayView2<f64>, targets: &[SurvivalTarget]) -> Result<()> {
    if pred.nrows() != targets.len() {
        return Err(Error::Shape(format!("{} predictions for {} targets", pred.nrows(), targets.len())));
    }
    if let Some(t) = targets.iter().find(|t| t.surv_s.len() != pred.ncols() || t.surv_f.len() != pred.ncols()) {
        return Err(Error::Shape(format!(
            "target of length {} against {} output intervals",
            t.surv_s.len(),
            pred.ncols()
        )));
    }
    Ok(())
}

/// Summed loss over the batch.
pub fn loss(pred: ArrayView2<f64>, targets: &[SurvivalTarget]) -> Result<f64> {
    check(pred, targets)?;
    let mut total = 0.0;
    for (row, t) in pred.rows().into_iter().zip(targets) {
        for ((&p, &s), &f) in row.iter().zip(&t.surv_s).zip(&t.surv_f) {
            let (s, f) = (f64::from(s), f64::from(f));
            total -= safe_ln(1.0 + s * (p - 1.0)) + safe_ln(1.0 - f * p);
        }
    }
    Ok(total)
}

/// Loss per patient, the quantity reported in training histories.
pub fn mean_loss(pred: ArrayView2<f64>, targets: &[SurvivalTarget]) -> Result<f64> {
    Ok(loss(pred, targets)? / targets.len().max(1) as f64)
}

/// Gradient of the summed loss with respect to the pre-sigmoid logits:
/// `-s(1 - p) + f p`. Terms whose log argument sits on the floor are flat
/// and get zero gradient.
pub fn loss_grad_logits(pred: ArrayView2<f64>, targets: &[SurvivalTarget]) -> Result<Array2<f64>> {
    check(pred, targets)?;
    let mut grad = Array2::zeros(pred.dim());
    for ((i, k), g) in grad.indexed_iter_mut() {
        let p = pred[[i, k]];
        let t = &targets[i];
        if t.surv_s[k] == 1 && p > PRED_MIN {
            *g -= 1.0 - p;
        }
        if t.surv_f[k] == 1 && p < PRED_MAX {
            *g += p;
        }
    }
    Ok(grad)
}

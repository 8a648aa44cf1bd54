//! Survival-model evaluation: Kaplan-Meier, time-dependent concordance,
//! cumulative/dynamic AUC and multi-class precision/recall/F1.

mod auc;
mod classification;
mod concordance;
mod km;

pub use auc::{cumulative_dynamic_auc, AucCurve, AucPoint};
pub use classification::{classification_prf, ClassMetrics, PrfReport};
pub use concordance::{concordance_td, Concordance};
pub use km::{km_estimator, StepFunction};

use crate::curves::SurvivalCurve;
use crate::error::Result;
use crate::exec::Exec;

/// Concordance of interpolated survival curves.
pub fn c_td(curves: &[SurvivalCurve], times: &[f64], events: &[bool], exec: Exec) -> Result<Concordance> {
    concordance_td(times, events, |k, t| curves[k].probability_at(t), exec)
}

/// AUC with `1 - S(t)` as each patient's risk marker.
pub fn curve_auc(curves: &[SurvivalCurve], times: &[f64], events: &[bool], eval_times: &[f64], exec: Exec) -> Result<AucCurve> {
    cumulative_dynamic_auc(times, events, eval_times, |k, t| 1.0 - curves[k].probability_at(t), exec)
}

/// Default AUC times: interior grid boundaries within the observed
/// event-time range.
pub fn default_eval_times(interior: &[f64], times: &[f64], events: &[bool]) -> Vec<f64> {
    let deaths = times.iter().zip(events).filter(|(_, &e)| e).map(|(&t, _)| t);
    let (lo, hi) = deaths.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    interior.iter().copied().filter(|&t| t >= lo && t <= hi).collect()
}

use crate::error::{Error, Result};

/// Right-continuous step function that starts at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    /// Sorted, distinct jump times.
    pub times: Vec<f64>,
    /// Value from each jump time onward.
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn constant_one() -> Self {
        StepFunction {
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Value at `t`, including a jump located exactly at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 { 1.0 } else { self.values[k - 1] }
    }

    /// Left limit at `t`: a jump at exactly `t` is not yet applied.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 { 1.0 } else { self.values[k - 1] }
    }
}

/// Kaplan-Meier product-limit estimate. With `reverse` set, censorings are
/// treated as the events, giving the censoring survival function used for
/// inverse-probability weights.
pub fn km_estimator(times: &[f64], events: &[bool], reverse: bool) -> Result<StepFunction> {
    if times.is_empty() {
        return Err(Error::invalid("Kaplan-Meier needs at least one observation"));
    }
    if times.len() != events.len() {
        return Err(Error::Shape(format!("{} times, {} events", times.len(), events.len())));
    }
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("Kaplan-Meier times must be non-negative"));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut at_risk = times.len();
    let mut surv = 1.0;
    let mut out = StepFunction::constant_one();
    let mut k = 0;
    while k < order.len() {
        let t = times[order[k]];
        let mut d = 0;
        let mut m = 0;
        while k + m < order.len() && times[order[k + m]] == t {
            if events[order[k + m]] != reverse {
                d += 1;
            }
            m += 1;
        }
        if d > 0 {
            surv *= 1.0 - d as f64 / at_risk as f64;
            out.times.push(t);
            out.values.push(surv);
        }
        at_risk -= m;
        k += m;
    }
    Ok(out)
}

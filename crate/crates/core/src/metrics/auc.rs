use super::km::km_estimator;
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucPoint {
    pub t: f64,
    pub auc: f64,
    pub n_cases: usize,
    pub n_controls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucCurve {
    pub points: Vec<AucPoint>,
    /// Mean AUC weighted by the drop of the event-time Kaplan-Meier curve
    /// between consecutive retained times.
    pub integrated: f64,
    /// Requested times skipped for lack of cases or controls, or for lying
    /// outside the follow-up range.
    pub dropped: Vec<f64>,
}

/// Cumulative/dynamic AUC with inverse-probability-of-censoring weights.
///
/// At each time `t`, cases are deaths with `time <= t`, weighted by
/// `1 / G(time-)` where `G` is the censoring Kaplan-Meier curve of the same
/// sample; controls are patients with `time > t`, unweighted. The AUC is
/// the weighted share of case/control pairs whose case marker is higher,
/// ties counting one half. `marker(k, t)` is patient `k`'s risk at `t`.
pub fn cumulative_dynamic_auc<F>(times: &[f64], events: &[bool], eval_times: &[f64], marker: F, exec: Exec) -> Result<AucCurve>
where
    F: Fn(usize, f64) -> f64 + Sync + Send,
{
    if times.len() != events.len() {
        return Err(Error::Shape(format!("{} times, {} events", times.len(), events.len())));
    }
    let censoring = km_estimator(times, events, true)?;
    let survival = km_estimator(times, events, false)?;
    let max_time = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = times
        .iter()
        .zip(events)
        .map(|(&t, &e)| if e { 1.0 / censoring.eval_left(t) } else { 0.0 })
        .collect();

    let mut sorted: Vec<f64> = eval_times.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let n = times.len();
    let evaluated = exec.map(sorted.len(), |k| {
        let t = sorted[k];
        if !(t > 0.0 && t < max_time) {
            return None;
        }
        let cases: Vec<usize> = (0..n).filter(|&i| events[i] && times[i] <= t).collect();
        let controls: Vec<usize> = (0..n).filter(|&j| times[j] > t).collect();
        if cases.is_empty() || controls.is_empty() {
            return None;
        }
        let control_markers: Vec<f64> = controls.iter().map(|&j| marker(j, t)).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for &i in &cases {
            let m = marker(i, t);
            let mut score = 0.0;
            for &c in &control_markers {
                if m > c {
                    score += 1.0;
                } else if m == c {
                    score += 0.5;
                }
            }
            num += weights[i] * score;
            den += weights[i] * control_markers.len() as f64;
        }
        Some(AucPoint {
            t,
            auc: num / den,
            n_cases: cases.len(),
            n_controls: controls.len(),
        })
    });

    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (t, p) in sorted.iter().zip(evaluated) {
        match p {
            Some(p) => points.push(p),
            None => dropped.push(*t),
        }
    }
    if points.is_empty() {
        return Err(Error::invalid("no evaluation time has both cases and controls"));
    }

    let mut prev = 1.0;
    let (mut acc, mut mass) = (0.0, 0.0);
    for p in &points {
        let s = survival.eval(p.t);
        let d = prev - s;
        acc += p.auc * d;
        mass += d;
        prev = s;
    }
    let integrated = if mass > 0.0 {
        acc / mass
    } else {
        points.iter().map(|p| p.auc).sum::<f64>() / points.len() as f64
    };
    Ok(AucCurve {
        points,
        integrated,
        dropped,
    })
}

//! Equidistant interval grids and the per-patient `surv_s` / `surv_f`
//! indicator vectors the logistic-hazard loss is trained against.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    max_time: f64,
    boundaries: Vec<f64>,
}

impl TimeGrid {
    /// `n_intervals` equal intervals over `[0, max_time]`, with
    /// `t_i = i * max_time / n_intervals`.
    pub fn new(max_time: f64, n_intervals: usize) -> Result<Self> {
        if !(max_time > 0.0 && max_time.is_finite()) {
            return Err(Error::invalid(format!("max_time must be positive, got {max_time}")));
        }
        if n_intervals < 2 {
            return Err(Error::invalid(format!("need at least 2 intervals, got {n_intervals}")));
        }
        let boundaries = (0..=n_intervals)
            .map(|i| i as f64 * max_time / n_intervals as f64)
            .collect();
        Ok(TimeGrid { max_time, boundaries })
    }

    pub fn n_intervals(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn max_time(&self) -> f64 {
        self.max_time
    }

    /// `t_0 = 0, t_1, ..., t_n = M`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Boundaries strictly between 0 and M.
    pub fn interior(&self) -> &[f64] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }

    /// Clamps an out-of-range time into `[0, M]`, warning when it moves.
    pub fn clamp(&self, time: f64) -> f64 {
        if time > self.max_time {
            log::warn!("time {time} beyond grid maximum {}; clamped", self.max_time);
            self.max_time
        } else if time < 0.0 {
            0.0
        } else {
            time
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalTarget {
    /// 1 for intervals the patient survived.
    pub surv_s: Vec<u8>,
    /// 1 at the interval of death; all zero for censored patients.
    pub surv_f: Vec<u8>,
}

impl SurvivalTarget {
    pub fn death_interval(&self) -> Option<usize> {
        self.surv_f.iter().position(|&f| f == 1)
    }
}

/// Builds the indicator vectors for one patient.
///
/// Deaths: interval `i` (1-based) counts as survived when `t >= t_i`, and the
/// death interval is the one with `t_{i-1} <= t < t_i`; a death exactly at
/// `M` falls in the last interval. Censored: interval `i` counts as survived
/// once `t` reaches its midpoint.
pub fn make_target(grid: &TimeGrid, time: f64, event: bool) -> Result<SurvivalTarget> {
    if !(time >= 0.0 && time <= grid.max_time) {
        return Err(Error::invalid(format!(
            "time {time} outside grid range [0, {}]",
            grid.max_time
        )));
    }
    let n = grid.n_intervals();
    let b = &grid.boundaries;
    let mut surv_s = vec![0u8; n];
    let mut surv_f = vec![0u8; n];
    if event {
        for k in 0..n {
            surv_s[k] = u8::from(time >= b[k + 1]);
        }
        let death = (0..n).find(|&k| b[k] <= time && time < b[k + 1]).unwrap_or(n - 1);
        surv_f[death] = 1;
        // A death at exactly M would otherwise be counted as surviving the
        // interval it died in.
        surv_s[death] = 0;
    } else {
        for k in 0..n {
            surv_s[k] = u8::from(time >= 0.5 * (b[k] + b[k + 1]));
        }
    }
    Ok(SurvivalTarget { surv_s, surv_f })
}

/// Targets for a whole cohort, clamping times above M.
pub fn make_targets(grid: &TimeGrid, times: &[f64], events: &[bool]) -> Result<Vec<SurvivalTarget>> {
    times
        .iter()
        .zip(events)
        .map(|(&t, &e)| make_target(grid, grid.clamp(t), e))
        .collect()
}

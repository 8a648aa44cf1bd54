use crate::error::{Error, Result};
use crate::timegrid::TimeGrid;

/// Running product of per-interval conditional survival probabilities,
/// prefixed with `S(0) = 1`.
pub fn cumulative_survival(conditional: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(conditional.len() + 1);
    let mut s = 1.0;
    out.push(s);
    for &c in conditional {
        s *= c;
        out.push(s);
    }
    out
}

/// Linear interpolation between two knots at fraction `f` of the interval,
/// kept inside the bracketing values.
fn lerp(a: f64, b: f64, f: f64) -> f64 {
    if f <= 0.0 {
        return a;
    }
    if f >= 1.0 {
        return b;
    }
    let v = a + f * (b - a);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    v.clamp(lo, hi)
}

/// Piecewise-linear resampling: every interval contributes
/// `points_per_interval` samples at `t_k + j * width / points_per_interval`
/// for `j = 1..=points_per_interval`, so `t = 0` is excluded and each
/// right boundary is included with its exact knot value.
pub fn interpolate(knot_times: &[f64], knots: &[f64], points_per_interval: usize) -> Vec<(f64, f64)> {
    let p = points_per_interval.max(1);
    let mut out = Vec::with_capacity(knot_times.len().saturating_sub(1) * p);
    for k in 0..knot_times.len().saturating_sub(1) {
        let (t0, t1) = (knot_times[k], knot_times[k + 1]);
        for j in 1..=p {
            if j == p {
                out.push((t1, knots[k + 1]));
            } else {
                let f = j as f64 / p as f64;
                out.push((t0 + f * (t1 - t0), lerp(knots[k], knots[k + 1], f)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    /// `0` followed by the grid boundaries.
    pub knot_times: Vec<f64>,
    /// `S(0) = 1`, then cumulative survival at each boundary.
    pub knots: Vec<f64>,
    /// Dense `(time, probability)` samples.
    pub dense: Vec<(f64, f64)>,
}

impl SurvivalCurve {
    /// Builds a curve from network outputs for one patient.
    pub fn from_conditional(grid: &TimeGrid, conditional: &[f64], points_per_interval: usize) -> Result<Self> {
        if conditional.len() != grid.n_intervals() {
            return Err(Error::Shape(format!(
                "{} conditional probabilities for {} intervals",
                conditional.len(),
                grid.n_intervals()
            )));
        }
        Ok(Self::from_knots(grid.boundaries().to_vec(), cumulative_survival(conditional), points_per_interval))
    }

    pub fn from_knots(knot_times: Vec<f64>, knots: Vec<f64>, points_per_interval: usize) -> Self {
        let dense = interpolate(&knot_times, &knots, points_per_interval);
        SurvivalCurve {
            knot_times,
            knots,
            dense,
        }
    }

    pub fn max_time(&self) -> f64 {
        *self.knot_times.last().expect("at least one knot")
    }

    /// Survival at `t`, interpolating linearly between knots. Times outside
    /// `[0, M]` are clamped.
    pub fn probability_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.max_time());
        let k = self.knot_times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.knots[0];
        }
        if k == self.knot_times.len() || self.knot_times[k - 1] == t {
            return self.knots[k - 1];
        }
        let (t0, t1) = (self.knot_times[k - 1], self.knot_times[k]);
        lerp(self.knots[k - 1], self.knots[k], (t - t0) / (t1 - t0))
    }
}

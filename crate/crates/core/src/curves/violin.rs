use std::fmt;

use super::curve::SurvivalCurve;

pub const DENSITY_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolinGroup {
    CensoredTest,
    DeadTest,
    CensoredTrain,
    DeadTrain,
}

impl ViolinGroup {
    pub const ALL: [ViolinGroup; 4] = [
        ViolinGroup::CensoredTest,
        ViolinGroup::DeadTest,
        ViolinGroup::CensoredTrain,
        ViolinGroup::DeadTrain,
    ];

    pub fn of(event: bool, is_test: bool) -> Self {
        match (event, is_test) {
            (false, true) => ViolinGroup::CensoredTest,
            (true, true) => ViolinGroup::DeadTest,
            (false, false) => ViolinGroup::CensoredTrain,
            (true, false) => ViolinGroup::DeadTrain,
        }
    }
}

impl fmt::Display for ViolinGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolinGroup::CensoredTest => "Censored_Test",
            ViolinGroup::DeadTest => "Dead_Test",
            ViolinGroup::CensoredTrain => "Censored_Train",
            ViolinGroup::DeadTrain => "Dead_Train",
        })
    }
}

/// Where censored patients' curves are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CensoredAt {
    #[default]
    CensoringTime,
    MaxTime,
}

#[derive(Debug, Clone, Copy)]
pub struct ViolinPatient<'a> {
    pub id: &'a str,
    pub curve: &'a SurvivalCurve,
    pub time: f64,
    pub event: bool,
    pub is_test: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolinSummary {
    pub group: ViolinGroup,
    pub ids: Vec<String>,
    /// Predicted survival at each patient's death or censoring time.
    pub raw: Vec<f64>,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub bandwidth: f64,
    /// Evaluation points, evenly spaced over `[0, 1]`.
    pub grid: Vec<f64>,
    /// Density on `grid`, integrating to 1 under the trapezoid rule.
    pub density: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data (`h = (n - 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR / 1.34) n^(-1/5)`. Zero
/// spread falls back to whichever scale is positive, then to 0.05.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = if sorted.len() > 1 {
        (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let iqr = (quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25)) / 1.34;
    let scale = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return 0.05,
    };
    0.9 * scale * n.powf(-0.2)
}

/// Gaussian KDE on `DENSITY_POINTS` points over `[0, 1]`, truncated to that
/// range and renormalized.
pub fn kde_unit_interval(values: &[f64], bandwidth: f64) -> (Vec<f64>, Vec<f64>) {
    let step = 1.0 / (DENSITY_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..DENSITY_POINTS).map(|k| k as f64 * step).collect();
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bandwidth * values.len() as f64);
    let mut density: Vec<f64> = grid
        .iter()
        .map(|&g| {
            values
                .iter()
                .map(|&x| (-0.5 * ((g - x) / bandwidth).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect();
    let area = trapezoid(&density, step);
    if area > 0.0 {
        density.iter_mut().for_each(|d| *d /= area);
    }
    (grid, density)
}

pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Distribution of predicted survival at the recorded time, by
/// death/censoring status and split. Empty groups are omitted and named in
/// the returned notes.
pub fn violin_data(patients: &[ViolinPatient<'_>], censored_at: CensoredAt) -> (Vec<ViolinSummary>, Vec<String>) {
    let mut summaries = Vec::new();
    let mut notes = Vec::new();
    for group in ViolinGroup::ALL {
        let members: Vec<&ViolinPatient<'_>> = patients
            .iter()
            .filter(|p| ViolinGroup::of(p.event, p.is_test) == group)
            .collect();
        if members.is_empty() {
            notes.push(format!("violin group {group} is empty and omitted"));
            continue;
        }
        let raw: Vec<f64> = members
            .iter()
            .map(|p| {
                let t = match (p.event, censored_at) {
                    (false, CensoredAt::MaxTime) => p.curve.max_time(),
                    _ => p.time,
                };
                p.curve.probability_at(t)
            })
            .collect();
        let mut sorted = raw.clone();
        sorted.sort_by(f64::total_cmp);
        let bandwidth = silverman_bandwidth(&sorted);
        let (grid, density) = kde_unit_interval(&sorted, bandwidth);
        summaries.push(ViolinSummary {
            group,
            ids: members.iter().map(|p| p.id.to_string()).collect(),
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            raw,
            bandwidth,
            grid,
            density,
        });
    }
    (summaries, notes)
}

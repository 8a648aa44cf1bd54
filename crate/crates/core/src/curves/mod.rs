//! Per-patient survival curves and their distribution summaries.

mod curve;
mod svg;
mod violin;

use std::io::Write;

pub use curve::{cumulative_survival, interpolate, SurvivalCurve};
pub use svg::render_violin_svg;
pub use violin::{
    kde_unit_interval, quantile_sorted, silverman_bandwidth, trapezoid, violin_data, CensoredAt, ViolinGroup,
    ViolinPatient, ViolinSummary, DENSITY_POINTS,
};

use crate::cohort::fmt_num;
use crate::error::{Error, Result};

/// Long-format dense curves: `patient_id,t,probability`.
pub fn write_curves_csv<W: Write>(mut out: W, ids: &[String], curves: &[SurvivalCurve]) -> Result<()> {
    if ids.len() != curves.len() {
        return Err(Error::Shape(format!("{} ids for {} curves", ids.len(), curves.len())));
    }
    let mut buf = String::from("patient_id,t,probability\n");
    for (id, c) in ids.iter().zip(curves) {
        for &(t, p) in &c.dense {
            buf.push_str(&format!("{id},{},{}\n", fmt_num(t), fmt_num(p)));
        }
    }
    out.write_all(buf.as_bytes()).map_err(|e| Error::io("<curves>", e))
}

/// `group,patient_id,probability` rows for every non-empty group.
pub fn write_violin_csv<W: Write>(mut out: W, summaries: &[ViolinSummary]) -> Result<()> {
    let mut buf = String::from("group,patient_id,probability\n");
    for s in summaries {
        for (id, p) in s.ids.iter().zip(&s.raw) {
            buf.push_str(&format!("{},{id},{}\n", s.group, fmt_num(*p)));
        }
    }
    out.write_all(buf.as_bytes()).map_err(|e| Error::io("<violin>", e))
}

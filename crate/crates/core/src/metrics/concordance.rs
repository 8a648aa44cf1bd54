use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concordance {
    pub c_td: f64,
    pub n_comparable: u64,
    /// Concordant pairs counted in halves, so prediction ties stay exact.
    pub concordant_halves: u64,
}

/// Time-dependent concordance (Antolini). A pair `(i, j)` is comparable
/// when `i` died and `j` was still under observation afterwards
/// (`time_i < time_j`); it is concordant when `S_i(time_i) < S_j(time_i)`,
/// with ties in predicted survival scoring one half.
///
/// `surv(k, t)` gives patient `k`'s predicted survival at `t`.
pub fn concordance_td<F>(times: &[f64], events: &[bool], surv: F, exec: Exec) -> Result<Concordance>
where
    F: Fn(usize, f64) -> f64 + Sync + Send,
{
    if times.len() != events.len() {
        return Err(Error::Shape(format!("{} times, {} events", times.len(), events.len())));
    }
    let n = times.len();
    let per_patient = exec.map(n, |i| {
        if !events[i] {
            return (0u64, 0u64);
        }
        let t = times[i];
        let own = surv(i, t);
        let mut comparable = 0;
        let mut halves = 0;
        for j in 0..n {
            if times[j] > t {
                comparable += 1;
                let other = surv(j, t);
                if own < other {
                    halves += 2;
                } else if own == other {
                    halves += 1;
                }
            }
        }
        (comparable, halves)
    });
    let (n_comparable, concordant_halves) = per_patient
        .iter()
        .fold((0u64, 0u64), |(c, h), &(pc, ph)| (c + pc, h + ph));
    if n_comparable == 0 {
        return Err(Error::invalid("no comparable pairs for concordance"));
    }
    Ok(Concordance {
        c_td: concordant_halves as f64 / (2 * n_comparable) as f64,
        n_comparable,
        concordant_halves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_concordant_pair() {
        let curves = [0.2, 0.9];
        let c = concordance_td(&[100.0, 300.0], &[true, false], |k, _| curves[k], Exec::Sequential).unwrap();
        assert_eq!(c.c_td, 1.0);
        assert_eq!(c.n_comparable, 1);
    }

    #[test]
    fn identical_curves_give_half() {
        let times = [5.0, 1.0, 3.0, 8.0, 2.0];
        let events = [true, true, false, true, false];
        let c = concordance_td(&times, &events, |_, t| (-t / 4.0f64).exp(), Exec::Sequential).unwrap();
        assert_eq!(c.c_td, 0.5);
    }

    #[test]
    fn no_comparable_pairs() {
        assert!(concordance_td(&[1.0, 2.0], &[false, false], |_, _| 0.5, Exec::Sequential).is_err());
        assert!(concordance_td(&[2.0, 2.0], &[true, true], |_, _| 0.5, Exec::Sequential).is_err());
    }
}

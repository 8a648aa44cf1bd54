use rand::seq::SliceRandom;

use super::Cohort;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let f = SplitFractions { train, val, test };
        let parts = f.as_array();
        if parts.iter().any(|x| !(*x >= 0.0)) || ((parts.iter().sum::<f64>() - 1.0).abs() > 1e-9) {
            return Err(Error::invalid(format!(
                "split fractions must be non-negative and sum to 1, got ({train}, {val}, {test})"
            )));
        }
        Ok(f)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.57,
            val: 0.10,
            test: 0.33,
        }
    }
}

/// Apportions `count` items by `fractions` with the largest-remainder
/// method. Remainder ties go to the earlier part.
pub fn largest_remainder(count: usize, fractions: [f64; 3]) -> [usize; 3] {
    // Snap quotas and remainders that are integral or tied up to rounding
    // noise in the fractions (0.57 * 100 is 56.999...).
    const TOL: f64 = 1e-9;
    let quotas = fractions.map(|f| {
        let q = f * count as f64;
        if (q - q.round()).abs() < TOL { q.round() } else { q }
    });
    let mut alloc = quotas.map(|q| q.floor() as usize);
    let assigned: usize = alloc.iter().sum();
    let rem = quotas.map(|q| q - q.floor());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        if (rem[a] - rem[b]).abs() < TOL {
            a.cmp(&b)
        } else {
            rem[b].total_cmp(&rem[a])
        }
    });
    for &k in order.iter().cycle().take(count.saturating_sub(assigned)) {
        alloc[k] += 1;
    }
    alloc
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Cohort,
    pub val: Cohort,
    pub test: Cohort,
    /// Indices into the source cohort, ascending within each part.
    pub indices: [Vec<usize>; 3],
}

/// Event-stratified three-way split. Deaths and censored patients are
/// apportioned separately by largest remainder, so stratum counts depend only
/// on the counts and fractions. Seeded shuffles decide membership; each part
/// keeps file order.
pub fn stratified_split(cohort: &Cohort, fractions: SplitFractions, seed: u64) -> Result<Split> {
    if cohort.is_empty() {
        return Err(Error::invalid("cannot split an empty cohort"));
    }
    let mut rng = rng::seeded(seed, rng::stream::SPLIT);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for want_event in [true, false] {
        let mut stratum: Vec<usize> = (0..cohort.len())
            .filter(|&i| cohort.patients[i].event == want_event)
            .collect();
        stratum.shuffle(&mut rng);
        let counts = largest_remainder(stratum.len(), fractions.as_array());
        if want_event {
            for (k, (&c, &f)) in counts.iter().zip(&fractions.as_array()).enumerate() {
                if c == 0 && f > 0.0 {
                    log::warn!("split part {k} receives no events");
                }
            }
        }
        let mut rest = stratum.as_slice();
        for (part, &c) in parts.iter_mut().zip(&counts) {
            let (take, tail) = rest.split_at(c);
            part.extend_from_slice(take);
            rest = tail;
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    Ok(Split {
        train: cohort.subset(&parts[0]),
        val: cohort.subset(&parts[1]),
        test: cohort.subset(&parts[2]),
        indices: parts,
    })
}

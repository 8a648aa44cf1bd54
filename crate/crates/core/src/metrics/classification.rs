use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// A zero denominator occurred and the affected metric was set to 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrfReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) }
}

/// One-vs-rest precision, recall and F1 from a square confusion matrix
/// (`confusion[actual][predicted]`), plus unweighted macro averages.
pub fn classification_prf(confusion: &[Vec<u64>]) -> Result<PrfReport> {
    let k = confusion.len();
    if k == 0 || confusion.iter().any(|row| row.len() != k) {
        return Err(Error::Shape("confusion matrix must be square and non-empty".into()));
    }
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted: u64 = (0..k).map(|r| confusion[r][c]).sum();
            let actual: u64 = confusion[c].iter().sum();
            let (precision, zp) = ratio(tp, predicted);
            let (recall, zr) = ratio(tp, actual);
            let (f1, zf) = if precision + recall > 0.0 {
                (2.0 * precision * recall / (precision + recall), false)
            } else {
                (0.0, true)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                zero_division: zp || zr || zf,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    Ok(PrfReport {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_perfect() {
        let m = vec![vec![5, 0, 0, 0], vec![0, 3, 0, 0], vec![0, 0, 7, 0], vec![0, 0, 0, 1]];
        let r = classification_prf(&m).unwrap();
        assert!(r.per_class.iter().all(|c| c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0));
        assert_eq!((r.macro_precision, r.macro_recall, r.macro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_true_positives() {
        // class 0 is predicted twice, never correctly
        let m = vec![vec![0, 1, 0, 0], vec![2, 3, 0, 0], vec![0, 0, 4, 0], vec![0, 0, 0, 0]];
        let r = classification_prf(&m).unwrap();
        assert_eq!(r.per_class[0].precision, 0.0);
        assert_eq!(r.per_class[0].f1, 0.0);
        assert!(r.per_class[3].zero_division);
        assert!((r.per_class[1].precision - 0.75).abs() < 1e-15);
        assert!((r.per_class[1].recall - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_ragged() {
        assert!(classification_prf(&[vec![1, 2], vec![3]]).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision, recall and F1 of one class. A ratio with a zero denominator
/// is reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

/// Per-class metrics for `θ = 0` and `θ = 1` plus accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: [ClassMetrics; 2],
    pub accuracy: f64,
    pub n: usize,
}

/// `m[truth][predicted]` counts.
pub fn confusion_matrix(predicted: &[u8], truth: &[u8]) -> Result<[[usize; 2]; 2]> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let mut m = [[0usize; 2]; 2];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p > 1 || t > 1 {
            return Err(Error::Domain("labels must be 0 or 1".into()));
        }
        m[t as usize][p as usize] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn evaluate(predicted: &[u8], truth: &[u8]) -> Result<ClassReport> {
    let m = confusion_matrix(predicted, truth)?;
    let class = |c: usize| {
        let tp = m[c][c];
        let support = m[c][0] + m[c][1];
        let predicted_c = m[0][c] + m[1][c];
        let (precision, precision_undefined) = ratio(tp, predicted_c);
        let (recall, recall_undefined) = ratio(tp, support);
        let f1_undefined = precision + recall == 0.0;
        let f1 = if f1_undefined {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    };
    let n = truth.len();
    let accuracy = if n == 0 {
        0.0
    } else {
        (m[0][0] + m[1][1]) as f64 / n as f64
    };
    Ok(ClassReport {
        classes: [class(0), class(1)],
        accuracy,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let r = evaluate(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        for c in r.classes {
            assert_eq!((c.precision, c.recall, c.f1, c.support), (1.0, 1.0, 1.0, 2));
        }
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn hand_confusion_matrix() {
        let r = evaluate(&[0, 1, 0, 1, 0], &[0, 0, 0, 1, 1]).unwrap();
        assert_eq!(r.classes[0].precision, 2.0 / 3.0);
        assert_eq!(r.classes[0].recall, 2.0 / 3.0);
        assert_eq!(r.classes[1].precision, 0.5);
        assert_eq!(r.classes[1].recall, 0.5);
        assert_eq!((r.classes[0].support, r.classes[1].support), (3, 2));
        assert_eq!(r.accuracy, 0.6);
    }

    #[test]
    fn all_ones_on_imbalanced_truth() {
        let truth: Vec<u8> = std::iter::repeat_n(0, 37)
            .chain(std::iter::repeat_n(1, 293))
            .collect();
        let r = evaluate(&vec![1; 330], &truth).unwrap();
        assert_eq!(r.classes[1].precision, 293.0 / 330.0);
        assert_eq!(r.classes[1].recall, 1.0);
        assert_eq!(format!("{:.2}", r.classes[1].f1), "0.94");
        let c0 = r.classes[0];
        assert_eq!(
            (c0.precision, c0.recall, c0.f1, c0.support),
            (0.0, 0.0, 0.0, 37)
        );
        assert!(c0.precision_undefined && c0.f1_undefined && !c0.recall_undefined);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            evaluate(&[0], &[0, 1]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(evaluate(&[2], &[0]).is_err());
    }
}

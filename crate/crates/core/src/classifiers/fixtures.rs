use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::labeling::{LabeledDataset, LabeledRow};
use crate::rng::{rng_for, stream};

/// Two round blobs in the plane, one per class, centred at `±(1.5, 1.5)`
/// with points kept within radius 1 of their centre. The classes are
/// linearly separable with a gap of about 2.2 along the diagonal. Rows
/// alternate in class order with random placement; indices run `0..n`.
pub fn separable_blobs(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = rng_for(seed, stream::CLASSIFIER, u64::MAX);
    let normal = Normal::new(0.0, 0.5).unwrap();
    let rows = (0..n)
        .map(|index| {
            let theta = u8::from(rng.random_bool(0.5));
            let c = if theta == 1 { 1.5 } else { -1.5 };
            let (dx, dy) = loop {
                let (a, b): (f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng));
                if a * a + b * b <= 1.0 {
                    break (a, b);
                }
            };
            LabeledRow {
                index,
                features: vec![c + dx, c + dy],
                theta,
            }
        })
        .collect();
    LabeledDataset {
        window_len: 2,
        n_indexed: n,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_separated() {
        let d = separable_blobs(400, 7);
        let ones = d.positives();
        assert!(ones > 150 && ones < 250);
        for r in &d.rows {
            let s = r.features[0] + r.features[1];
            // projection on the diagonal clears the origin by at least 1.5
            if r.theta == 1 {
                assert!(s > 1.5, "{s}");
            } else {
                assert!(s < -1.5, "{s}");
            }
        }
        assert_eq!(d, separable_blobs(400, 7));
    }
}

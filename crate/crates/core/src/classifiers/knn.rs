use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub standardize: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 5,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
}

pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &KnnConfig) -> Result<Knn> {
    if cfg.k == 0 {
        return Err(invalid("knn: k must be >= 1"));
    }
    Ok(Knn {
        k: cfg.k.min(x.len()),
        x: x.to_vec(),
        y: y.to_vec(),
    })
}

impl Knn {
    /// Labels of the `k` nearest training rows, nearest first. Equal
    /// distances are ordered by training position.
    fn neighbours(&self, q: &[f64]) -> Vec<u8> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| self.y[i]).collect()
    }

    /// Share of class 1 among the neighbours.
    pub fn proba(&self, q: &[f64]) -> f64 {
        let nb = self.neighbours(q);
        nb.iter().filter(|&&l| l == 1).count() as f64 / nb.len() as f64
    }

    /// Majority vote; a tie goes to the nearest neighbour.
    pub fn predict_one(&self, q: &[f64]) -> u8 {
        let nb = self.neighbours(q);
        let ones = nb.iter().filter(|&&l| l == 1).count();
        match (2 * ones).cmp(&nb.len()) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => nb[0],
        }
    }
}

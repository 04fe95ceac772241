use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{rng_for, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub k: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub standardize: bool,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            iterations: 100,
            restarts: 10,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kmeans {
    centroids: Vec<Vec<f64>>,
    /// Training-majority label of each cluster.
    labels: Vec<u8>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lower index.
fn nearest(centroids: &[Vec<f64>], q: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(c, q);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding.
fn seed_centroids(x: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![x[rng.random_range(0..x.len())].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = x.iter().map(|r| nearest(&centroids, r).1).collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            d.iter()
                .position(|&w| {
                    u -= w;
                    u < 0.0
                })
                .unwrap_or(x.len() - 1)
        } else {
            rng.random_range(0..x.len())
        };
        centroids.push(x[pick].clone());
    }
    centroids
}

/// Lloyd iterations; returns centroids and inertia. Empty clusters keep
/// their previous centroid.
fn lloyd(x: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, iterations: usize) -> (Vec<Vec<f64>>, f64) {
    let d = x[0].len();
    let mut assign = vec![usize::MAX; x.len()];
    for _ in 0..iterations {
        let mut changed = false;
        for (a, r) in assign.iter_mut().zip(x) {
            let j = nearest(&centroids, r).0;
            changed |= *a != j;
            *a = j;
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (&j, r) in assign.iter().zip(x) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(r) {
                *s += v;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    let inertia = x.iter().map(|r| nearest(&centroids, r).1).sum();
    (centroids, inertia)
}

pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &KmeansConfig, seed: u64) -> Result<Kmeans> {
    if cfg.k == 0 || cfg.restarts == 0 {
        return Err(invalid("kmeans: k and restarts must be >= 1"));
    }
    let k = cfg.k.min(x.len());
    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    for r in 0..cfg.restarts {
        let mut rng = rng_for(seed, stream::RESTART, r as u64);
        let (c, inertia) = lloyd(x, seed_centroids(x, k, &mut rng), cfg.iterations);
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((c, inertia));
        }
    }
    let centroids = best.unwrap().0;

    let ones = y.iter().filter(|&&l| l == 1).count();
    let overall = u8::from(2 * ones > y.len());
    let mut votes = vec![[0usize; 2]; centroids.len()];
    for (r, &l) in x.iter().zip(y) {
        votes[nearest(&centroids, r).0][l as usize] += 1;
    }
    let labels = votes
        .iter()
        .map(|v| match v[1].cmp(&v[0]) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => overall,
        })
        .collect();
    Ok(Kmeans { centroids, labels })
}

impl Kmeans {
    pub fn predict_one(&self, q: &[f64]) -> u8 {
        self.labels[nearest(&self.centroids, q).0]
    }
}

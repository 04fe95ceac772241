use serde::{Deserialize, Serialize};

use super::linear::sigmoid;
use super::tree::{Grow, Tree};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    pub standardize: bool,
}

impl Default for GradientBoostConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 1,
            standardize: false,
        }
    }
}

/// Additive log-odds model `F = F0 + lr·Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
}

/// Each round fits a regression tree to the log-loss gradient `y − p` and
/// sets every leaf to the Newton step `Σ(y − p) / Σ p(1 − p)`.
pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &GradientBoostConfig) -> Result<Boosted> {
    if cfg.min_leaf == 0 || !(cfg.learning_rate > 0.0) {
        return Err(invalid(
            "gradient_boost: min_leaf must be >= 1 and learning_rate > 0",
        ));
    }
    let n = x.len();
    let labels: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let p0 = labels.iter().sum::<f64>() / n as f64;
    let init = (p0 / (1.0 - p0)).ln();
    let mut f = vec![init; n];
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    for _ in 0..cfg.n_estimators {
        let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = labels.iter().zip(&p).map(|(t, p)| t - p).collect();
        let h: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
        let grow = Grow {
            x,
            target: &g,
            max_depth: Some(cfg.max_depth),
            min_leaf: cfg.min_leaf,
            max_features: None,
        };
        let newton = |rows: &[usize]| {
            let num: f64 = rows.iter().map(|&i| g[i]).sum();
            let den: f64 = rows.iter().map(|&i| h[i]).sum();
            num / den.max(1e-12)
        };
        let tree = grow.grow::<rand_chacha::ChaCha8Rng>((0..n).collect(), None, &newton);
        for (fi, r) in f.iter_mut().zip(x) {
            *fi += cfg.learning_rate * tree.value(r);
        }
        trees.push(tree);
    }
    Ok(Boosted {
        init,
        learning_rate: cfg.learning_rate,
        trees,
    })
}

impl Boosted {
    pub fn proba(&self, q: &[f64]) -> f64 {
        let f = self.init + self.learning_rate * self.trees.iter().map(|t| t.value(q)).sum::<f64>();
        sigmoid(f)
    }
}

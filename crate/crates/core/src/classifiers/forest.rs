use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Grow, Tree};
use crate::error::{invalid, Result};
use crate::rng::{rng_for, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestConfig {
    pub n_trees: usize,
    /// Features tried per split; 0 means `round(√d)`.
    pub max_features: usize,
    /// 0 grows until leaves are pure or too small.
    pub max_depth: usize,
    pub min_leaf: usize,
    pub standardize: bool,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: 0,
            max_depth: 0,
            min_leaf: 1,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
}

/// Tree `t` draws its bootstrap sample and feature subsets from its own
/// seed, so the forest does not depend on the thread count.
pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &RandomForestConfig, seed: u64) -> Result<Forest> {
    if cfg.n_trees == 0 || cfg.min_leaf == 0 {
        return Err(invalid("random_forest: n_trees and min_leaf must be >= 1"));
    }
    let d = x[0].len();
    let m = match cfg.max_features {
        0 => ((d as f64).sqrt().round() as usize).max(1),
        m => m.min(d),
    };
    let target: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let grow = Grow {
        x,
        target: &target,
        max_depth: (cfg.max_depth > 0).then_some(cfg.max_depth),
        min_leaf: cfg.min_leaf,
        max_features: Some(m),
    };
    let share = |rows: &[usize]| rows.iter().map(|&i| target[i]).sum::<f64>() / rows.len() as f64;
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, stream::TREE, t as u64);
            let rows: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
            grow.grow(rows, Some(&mut rng), &share)
        })
        .collect();
    Ok(Forest { trees })
}

impl Forest {
    /// Mean of the trees' class-1 shares.
    pub fn proba(&self, q: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.value(q)).sum::<f64>() / self.trees.len() as f64
    }
}

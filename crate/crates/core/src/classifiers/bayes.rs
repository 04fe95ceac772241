use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesConfig {
    /// Added to every per-class feature variance.
    pub var_floor: f64,
    pub standardize: bool,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        Self {
            var_floor: 1e-9,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &NaiveBayesConfig) -> Result<GaussianNb> {
    if !(cfg.var_floor > 0.0) {
        return Err(invalid("naive_bayes_gaussian: var_floor must be > 0"));
    }
    let d = x[0].len();
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    let mut var = [vec![0.0; d], vec![0.0; d]];
    let mut count = [0usize; 2];
    for (r, &l) in x.iter().zip(y) {
        count[l as usize] += 1;
        for (m, v) in mean[l as usize].iter_mut().zip(r) {
            *m += v;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
    }
    for (r, &l) in x.iter().zip(y) {
        let c = l as usize;
        for ((s, v), m) in var[c].iter_mut().zip(r).zip(&mean[c]) {
            *s += (v - m) * (v - m);
        }
    }
    for c in 0..2 {
        var[c]
            .iter_mut()
            .for_each(|s| *s = *s / count[c] as f64 + cfg.var_floor);
    }
    let n = x.len() as f64;
    let log_prior = [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()];
    Ok(GaussianNb {
        log_prior,
        mean,
        var,
    })
}

impl GaussianNb {
    fn log_joint(&self, c: usize, q: &[f64]) -> f64 {
        let ll: f64 = q
            .iter()
            .zip(&self.mean[c])
            .zip(&self.var[c])
            .map(|((v, m), s)| {
                -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s)
            })
            .sum();
        self.log_prior[c] + ll
    }

    /// Posterior probability of class 1.
    pub fn proba(&self, q: &[f64]) -> f64 {
        let diff = self.log_joint(0, q) - self.log_joint(1, q);
        super::linear::sigmoid(-diff)
    }
}

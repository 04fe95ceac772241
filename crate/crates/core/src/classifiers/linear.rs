use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub standardize: bool,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Penalty on the summed hinge loss against `½‖w‖²`.
    pub c: f64,
    /// Initial step; epoch `t` uses `learning_rate / √(t+1)`.
    pub learning_rate: f64,
    pub epochs: usize,
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            learning_rate: 0.1,
            epochs: 500,
            standardize: true,
        }
    }
}

/// `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Linear {
    fn zeros(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
            bias: 0.0,
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gradient descent on the mean log-loss plus `½·l2·‖w‖²`.
pub fn fit_logistic(x: &[Vec<f64>], y: &[u8], cfg: &LogisticConfig) -> Result<Linear> {
    if !(cfg.learning_rate > 0.0) || cfg.l2 < 0.0 {
        return Err(invalid(
            "logistic_regression: learning_rate must be > 0 and l2 >= 0",
        ));
    }
    let d = x[0].len();
    let n = x.len() as f64;
    let mut m = Linear::zeros(d);
    let mut gw = vec![0.0; d];
    for _ in 0..cfg.epochs {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (row, &t) in x.iter().zip(y) {
            let err = sigmoid(m.score(row)) - f64::from(t);
            for (g, v) in gw.iter_mut().zip(row) {
                *g += err * v;
            }
            gb += err;
        }
        for (w, g) in m.weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * (g / n + cfg.l2 * *w);
        }
        m.bias -= cfg.learning_rate * gb / n;
    }
    Ok(m)
}

/// Subgradient descent on `(½‖w‖² + C·Σ hinge) / (C·n)`, keeping the iterate
/// with the lowest objective.
pub fn fit_svm(x: &[Vec<f64>], y: &[u8], cfg: &SvmConfig) -> Result<Linear> {
    if !(cfg.c > 0.0) || !(cfg.learning_rate > 0.0) {
        return Err(invalid("svm_linear: c and learning_rate must be > 0"));
    }
    let d = x[0].len();
    let n = x.len() as f64;
    let lambda = 1.0 / (cfg.c * n);
    let sign = |t: u8| if t == 1 { 1.0 } else { -1.0 };
    let objective = |m: &Linear| {
        let hinge: f64 = x
            .iter()
            .zip(y)
            .map(|(r, &t)| (1.0 - sign(t) * m.score(r)).max(0.0))
            .sum();
        0.5 * lambda * m.weights.iter().map(|w| w * w).sum::<f64>() + hinge / n
    };
    let mut m = Linear::zeros(d);
    let mut best = (objective(&m), m.clone());
    let mut gw = vec![0.0; d];
    for t in 0..cfg.epochs {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (row, &label) in x.iter().zip(y) {
            let s = sign(label);
            if s * m.score(row) < 1.0 {
                for (g, v) in gw.iter_mut().zip(row) {
                    *g -= s * v;
                }
                gb -= s;
            }
        }
        let step = cfg.learning_rate / ((t + 1) as f64).sqrt();
        for (w, g) in m.weights.iter_mut().zip(&gw) {
            *w -= step * (lambda * *w + g / n);
        }
        m.bias -= step * gb / n;
        let obj = objective(&m);
        if obj < best.0 {
            best = (obj, m.clone());
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (Vec<Vec<f64>>, Vec<u8>) {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 - 19.5) / 10.0]).collect();
        let y = (0..40).map(|i| u8::from(i >= 20)).collect();
        (x, y)
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_separates_a_line() {
        let (x, y) = line();
        let m = fit_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        assert!(m.weights[0] > 0.0);
        let pred: Vec<u8> = x.iter().map(|r| u8::from(m.score(r) > 0.0)).collect();
        assert_eq!(pred, y);
    }

    #[test]
    fn svm_separates_a_line() {
        let (x, y) = line();
        let m = fit_svm(&x, &y, &SvmConfig::default()).unwrap();
        let pred: Vec<u8> = x.iter().map(|r| u8::from(m.score(r) > 0.0)).collect();
        assert_eq!(pred, y);
    }
}

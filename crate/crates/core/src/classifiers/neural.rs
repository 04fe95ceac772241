use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{rng_for, stream};

/// Class-1 probability above which the network predicts `θ = 1`.
pub const NN_THRESHOLD: f64 = 0.3;

/// `1` when the class-1 probability exceeds `threshold`.
pub fn threshold_label(p1: f64, threshold: f64) -> u8 {
    u8::from(p1 > threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNetConfig {
    /// Width of each hidden layer.
    pub hidden: usize,
    pub layers: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam step size.
    pub learning_rate: f64,
    pub threshold: f64,
    pub standardize: bool,
}

impl Default for NeuralNetConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            layers: 2,
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            threshold: NN_THRESHOLD,
            standardize: true,
        }
    }
}

/// Fully connected layer, `w` row-major `out × inp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    inp: usize,
    out: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Dense {
    fn forward(&self, x: &[f64], relu: bool) -> Vec<f64> {
        (0..self.out)
            .map(|o| {
                let row = &self.w[o * self.inp..(o + 1) * self.inp];
                let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b[o];
                if relu {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .collect()
    }
}

/// ReLU hidden layers and a two-way softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
    pub threshold: f64,
}

fn softmax1(logits: &[f64]) -> f64 {
    super::linear::sigmoid(logits[1] - logits[0])
}

impl Mlp {
    /// Activations of every layer, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let next = l.forward(acts.last().unwrap(), i < last);
            acts.push(next);
        }
        acts
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        softmax1(self.activations(x).last().unwrap())
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    fn step(&mut self, params: &mut [&mut Vec<f64>], grads: &[Vec<f64>], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            for (j, (pj, gj)) in p.iter_mut().zip(g).enumerate() {
                self.m[k][j] = BETA1 * self.m[k][j] + (1.0 - BETA1) * gj;
                self.v[k][j] = BETA2 * self.v[k][j] + (1.0 - BETA2) * gj * gj;
                *pj -= lr * (self.m[k][j] / c1) / ((self.v[k][j] / c2).sqrt() + EPS);
            }
        }
    }
}

/// Mini-batch Adam on the mean cross-entropy, He-normal initialization,
/// rows reshuffled every epoch.
pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &NeuralNetConfig, seed: u64) -> Result<Mlp> {
    if cfg.hidden == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(invalid(
            "neural_net: hidden, batch_size and learning_rate must be positive",
        ));
    }
    if !(0.0..1.0).contains(&cfg.threshold) {
        return Err(invalid("neural_net: threshold must lie in [0, 1)"));
    }
    let mut rng = rng_for(seed, stream::CLASSIFIER, 0);
    let mut widths = vec![x[0].len()];
    widths.extend(std::iter::repeat_n(cfg.hidden, cfg.layers));
    widths.push(2);
    let layers: Vec<Dense> = widths
        .windows(2)
        .map(|w| {
            let normal = Normal::new(0.0, (2.0 / w[0].max(1) as f64).sqrt()).unwrap();
            Dense {
                inp: w[0],
                out: w[1],
                w: (0..w[0] * w[1]).map(|_| normal.sample(&mut rng)).collect(),
                b: vec![0.0; w[1]],
            }
        })
        .collect();
    let mut net = Mlp {
        layers,
        threshold: cfg.threshold,
    };
    let shapes: Vec<usize> = net
        .layers
        .iter()
        .flat_map(|l| [l.w.len(), l.b.len()])
        .collect();
    let mut adam = Adam {
        m: shapes.iter().map(|&s| vec![0.0; s]).collect(),
        v: shapes.iter().map(|&s| vec![0.0; s]).collect(),
        t: 0,
    };

    let mut order: Vec<usize> = (0..x.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grads: Vec<Vec<f64>> = shapes.iter().map(|&s| vec![0.0; s]).collect();
            for &i in batch {
                backprop(&net, &x[i], y[i], &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().flatten().for_each(|g| *g *= scale);
            let mut params: Vec<&mut Vec<f64>> = net
                .layers
                .iter_mut()
                .flat_map(|l| [&mut l.w, &mut l.b])
                .collect();
            adam.step(&mut params, &grads, cfg.learning_rate);
        }
    }
    Ok(net)
}

/// Adds the cross-entropy gradient of one row into `grads`, laid out as
/// `[w0, b0, w1, b1, ...]`.
fn backprop(net: &Mlp, x: &[f64], y: u8, grads: &mut [Vec<f64>]) {
    let acts = net.activations(x);
    let p1 = softmax1(acts.last().unwrap());
    // d loss / d logits for softmax with cross-entropy
    let mut delta = vec![1.0 - p1, p1];
    delta[y as usize] -= 1.0;
    for (li, layer) in net.layers.iter().enumerate().rev() {
        let input = &acts[li];
        let (gw, rest) = grads[2 * li..].split_at_mut(1);
        for o in 0..layer.out {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            rest[0][o] += d;
            for (g, v) in gw[0][o * layer.inp..(o + 1) * layer.inp]
                .iter_mut()
                .zip(input)
            {
                *g += d * v;
            }
        }
        if li > 0 {
            delta = (0..layer.inp)
                .map(|j| {
                    if input[j] <= 0.0 {
                        return 0.0;
                    }
                    (0..layer.out)
                        .map(|o| layer.w[o * layer.inp + j] * delta[o])
                        .sum()
                })
                .collect();
        }
    }
}

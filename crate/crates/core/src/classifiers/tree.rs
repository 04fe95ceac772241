use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub standardize: bool,
}

impl Default for DecisionTreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_leaf: 5,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    #[cfg(test)]
    fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

pub(crate) struct Grow<'a> {
    pub x: &'a [Vec<f64>],
    /// Regression target; 0/1 labels for classification.
    pub target: &'a [f64],
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` tries all.
    pub max_features: Option<usize>,
}

impl Grow<'_> {
    /// Grows a tree on `rows` (duplicates allowed) with leaf values from
    /// `leaf`. Splits minimize the summed squared error of the target,
    /// which for 0/1 targets is the Gini criterion.
    pub fn grow<R: Rng>(
        &self,
        rows: Vec<usize>,
        mut rng: Option<&mut R>,
        leaf: &dyn Fn(&[usize]) -> f64,
    ) -> Tree {
        let mut nodes = Vec::new();
        self.build(rows, 0, &mut rng, leaf, &mut nodes);
        Tree { nodes }
    }

    fn build<R: Rng>(
        &self,
        rows: Vec<usize>,
        depth: usize,
        rng: &mut Option<&mut R>,
        leaf: &dyn Fn(&[usize]) -> f64,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let at = nodes.len();
        nodes.push(Node::Leaf { value: leaf(&rows) });
        let stop = self.max_depth.is_some_and(|m| depth >= m) || rows.len() < 2 * self.min_leaf;
        if stop {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(&rows, rng) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.x[i][feature] <= threshold);
        let left = self.build(l, depth + 1, rng, leaf, nodes);
        let right = self.build(r, depth + 1, rng, leaf, nodes);
        nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }

    fn best_split<R: Rng>(&self, rows: &[usize], rng: &mut Option<&mut R>) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let features: Vec<usize> = match (self.max_features, rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };
        let n = rows.len();
        let total: f64 = rows.iter().map(|&i| self.target[i]).sum();
        let parent = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let floor = parent + 1e-12 * (parent.abs() + 1.0);
        let mut order = rows.to_vec();
        for f in features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.target[order[k]];
                let nl = k + 1;
                let (v, next) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if v == next || nl < self.min_leaf || n - nl < self.min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let score =
                    left_sum * left_sum / nl as f64 + right_sum * right_sum / (n - nl) as f64;
                if score > floor && best.is_none_or(|b| score > b.0) {
                    best = Some((score, f, v));
                }
            }
        }
        best.map(|(_, f, v)| (f, v))
    }
}

/// Gini tree; leaves hold the class-1 share of their rows.
pub fn fit_classifier(x: &[Vec<f64>], y: &[u8], cfg: &DecisionTreeConfig) -> Result<Tree> {
    if cfg.min_leaf == 0 {
        return Err(invalid("decision_tree: min_leaf must be >= 1"));
    }
    let target: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let grow = Grow {
        x,
        target: &target,
        max_depth: Some(cfg.max_depth),
        min_leaf: cfg.min_leaf,
        max_features: None,
    };
    let share = |rows: &[usize]| rows.iter().map(|&i| target[i]).sum::<f64>() / rows.len() as f64;
    Ok(grow.grow::<rand_chacha::ChaCha8Rng>((0..x.len()).collect(), None, &share))
}

//! Binary classifiers for the `θ` target and the precision/recall/F1 report.
//!
//! Nine algorithms, labelled (A) to (I) in report tables:
//!
//! | | id | method |
//! |---|---|---|
//! | A | `logistic_regression` | full-batch gradient descent on the log-loss with L2 |
//! | B | `svm_linear` | subgradient descent on the hinge loss |
//! | C | `knn` | k nearest neighbours, Euclidean |
//! | D | `kmeans` | Lloyd clustering, clusters labelled by training majority |
//! | E | `naive_bayes_gaussian` | per-feature Gaussian likelihoods |
//! | F | `gradient_boost` | logistic-loss boosting of depth-limited regression trees |
//! | G | `decision_tree` | Gini tree, thresholds at training values |
//! | H | `random_forest` | bootstrap forest of Gini trees with feature sampling |
//! | I | `neural_net` | ReLU perceptron with softmax output, Adam |
//!
//! Every model is a pure function of `(algorithm, data, hyperparameters,
//! seed)`. Distance and margin methods z-score their inputs with statistics
//! from the training rows; tree methods and naive Bayes see raw features.

mod bayes;
mod benchmark;
mod boosting;
mod fixtures;
mod forest;
mod kmeans;
mod knn;
mod linear;
mod metrics;
mod neural;
mod scaler;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use bayes::NaiveBayesConfig;
pub use benchmark::{
    cell_seed, read_external_predictions, run_benchmark, BenchmarkReport, BenchmarkRow, Contender,
    REPORT_CSV_HEADER,
};
pub use boosting::GradientBoostConfig;
pub use fixtures::separable_blobs;
pub use forest::RandomForestConfig;
pub use kmeans::KmeansConfig;
pub use knn::KnnConfig;
pub use linear::{LogisticConfig, SvmConfig};
pub use metrics::{confusion_matrix, evaluate, ClassMetrics, ClassReport};
pub use neural::{threshold_label, NeuralNetConfig, NN_THRESHOLD};
pub use tree::DecisionTreeConfig;

use crate::error::{invalid, Error, Result};
use crate::labeling::LabeledDataset;
use scaler::Scaler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    LogisticRegression,
    SvmLinear,
    Knn,
    Kmeans,
    NaiveBayesGaussian,
    GradientBoost,
    DecisionTree,
    RandomForest,
    NeuralNet,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 9] = [
        AlgorithmId::LogisticRegression,
        AlgorithmId::SvmLinear,
        AlgorithmId::Knn,
        AlgorithmId::Kmeans,
        AlgorithmId::NaiveBayesGaussian,
        AlgorithmId::GradientBoost,
        AlgorithmId::DecisionTree,
        AlgorithmId::RandomForest,
        AlgorithmId::NeuralNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::LogisticRegression => "logistic_regression",
            AlgorithmId::SvmLinear => "svm_linear",
            AlgorithmId::Knn => "knn",
            AlgorithmId::Kmeans => "kmeans",
            AlgorithmId::NaiveBayesGaussian => "naive_bayes_gaussian",
            AlgorithmId::GradientBoost => "gradient_boost",
            AlgorithmId::DecisionTree => "decision_tree",
            AlgorithmId::RandomForest => "random_forest",
            AlgorithmId::NeuralNet => "neural_net",
        }
    }

    /// Table label, `'A'` to `'I'`.
    pub fn letter(self) -> char {
        (b'A' + self.ordinal() as u8) as char
    }

    pub fn ordinal(self) -> usize {
        Self::ALL.iter().position(|&a| a == self).unwrap()
    }

    /// Defaults with `hp` applied, as JSON. Unknown keys are rejected.
    pub fn resolved_hyperparams(self, hp: &Hyperparams) -> Result<serde_json::Value> {
        let v = match self {
            AlgorithmId::LogisticRegression => {
                serde_json::to_value(resolve::<LogisticConfig>(self, hp)?)
            }
            AlgorithmId::SvmLinear => serde_json::to_value(resolve::<SvmConfig>(self, hp)?),
            AlgorithmId::Knn => serde_json::to_value(resolve::<KnnConfig>(self, hp)?),
            AlgorithmId::Kmeans => serde_json::to_value(resolve::<KmeansConfig>(self, hp)?),
            AlgorithmId::NaiveBayesGaussian => {
                serde_json::to_value(resolve::<NaiveBayesConfig>(self, hp)?)
            }
            AlgorithmId::GradientBoost => {
                serde_json::to_value(resolve::<GradientBoostConfig>(self, hp)?)
            }
            AlgorithmId::DecisionTree => {
                serde_json::to_value(resolve::<DecisionTreeConfig>(self, hp)?)
            }
            AlgorithmId::RandomForest => {
                serde_json::to_value(resolve::<RandomForestConfig>(self, hp)?)
            }
            AlgorithmId::NeuralNet => serde_json::to_value(resolve::<NeuralNetConfig>(self, hp)?),
        };
        Ok(v?)
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    /// Accepts the snake-case id or the table letter.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|a| {
                a.name() == s || (s.len() == 1 && s.eq_ignore_ascii_case(&a.letter().to_string()))
            })
            .ok_or_else(|| invalid(format!("unknown algorithm `{s}`")))
    }
}

/// Per-algorithm overrides of the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hyperparams(pub BTreeMap<String, serde_json::Value>);

impl Hyperparams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    /// Parses `key=value`; the value is read as JSON, falling back to a string.
    pub fn set_assignment(&mut self, text: &str) -> Result<()> {
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| invalid(format!("expected key=value, got `{text}`")))?;
        let value = serde_json::from_str(v.trim())
            .unwrap_or_else(|_| serde_json::Value::String(v.trim().into()));
        self.0.insert(k.trim().to_string(), value);
        Ok(())
    }
}

/// Hyperparameters keyed by algorithm; absent entries use defaults.
pub type HyperparamBank = BTreeMap<AlgorithmId, Hyperparams>;

fn resolve<C: Default + Serialize + DeserializeOwned>(
    id: AlgorithmId,
    hp: &Hyperparams,
) -> Result<C> {
    let mut base = serde_json::to_value(C::default())?;
    let obj = base.as_object_mut().expect("configs serialize as objects");
    for (k, v) in &hp.0 {
        if !obj.contains_key(k) {
            return Err(Error::UnknownHyperparam {
                algorithm: id.name().into(),
                key: k.clone(),
            });
        }
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(base).map_err(|e| invalid(format!("{id}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Learned {
    Constant { label: u8 },
    Logistic(linear::Linear),
    Svm(linear::Linear),
    Knn(knn::Knn),
    Kmeans(kmeans::Kmeans),
    NaiveBayes(bayes::GaussianNb),
    GradientBoost(boosting::Boosted),
    DecisionTree(tree::Tree),
    RandomForest(forest::Forest),
    NeuralNet(neural::Mlp),
}

/// A trained classifier with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub algorithm: AlgorithmId,
    pub seed: u64,
    pub n_train: usize,
    pub width: usize,
    /// Effective hyperparameters after defaults.
    pub hyperparams: serde_json::Value,
    /// Set when the training rows held a single class.
    pub degenerate: bool,
    scaler: Option<Scaler>,
    learned: Learned,
}

fn check_width(x: &[Vec<f64>], width: usize) -> Result<()> {
    match x.iter().find(|r| r.len() != width) {
        Some(r) => Err(Error::WidthMismatch {
            expected: width,
            got: r.len(),
        }),
        None => Ok(()),
    }
}

/// Trains on the rows of a labelled dataset.
pub fn train(id: AlgorithmId, data: &LabeledDataset, hp: &Hyperparams, seed: u64) -> Result<Model> {
    train_xy(id, &data.features(), &data.labels(), hp, seed)
}

/// Trains on a feature matrix and 0/1 labels.
pub fn train_xy(
    id: AlgorithmId,
    x: &[Vec<f64>],
    y: &[u8],
    hp: &Hyperparams,
    seed: u64,
) -> Result<Model> {
    if x.is_empty() {
        return Err(invalid("training set is empty"));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::Domain("labels must be 0 or 1".into()));
    }
    let width = x[0].len();
    check_width(x, width)?;
    let hyperparams = id.resolved_hyperparams(hp)?;
    let standardize = hyperparams["standardize"].as_bool().unwrap_or(false);
    let scaler = standardize.then(|| Scaler::fit(x));
    let scaled;
    let xs: &[Vec<f64>] = match &scaler {
        Some(s) => {
            scaled = s.transform_all(x);
            &scaled
        }
        None => x,
    };

    let ones = y.iter().filter(|&&v| v == 1).count();
    let degenerate = ones == 0 || ones == y.len();
    let learned = if degenerate {
        let label = u8::from(ones > 0);
        log::warn!("{id}: training rows hold only class {label}; using a constant predictor");
        Learned::Constant { label }
    } else {
        match id {
            AlgorithmId::LogisticRegression => {
                Learned::Logistic(linear::fit_logistic(xs, y, &resolve(id, hp)?)?)
            }
            AlgorithmId::SvmLinear => Learned::Svm(linear::fit_svm(xs, y, &resolve(id, hp)?)?),
            AlgorithmId::Knn => Learned::Knn(knn::fit(xs, y, &resolve(id, hp)?)?),
            AlgorithmId::Kmeans => Learned::Kmeans(kmeans::fit(xs, y, &resolve(id, hp)?, seed)?),
            AlgorithmId::NaiveBayesGaussian => {
                Learned::NaiveBayes(bayes::fit(xs, y, &resolve(id, hp)?)?)
            }
            AlgorithmId::GradientBoost => {
                Learned::GradientBoost(boosting::fit(xs, y, &resolve(id, hp)?)?)
            }
            AlgorithmId::DecisionTree => {
                Learned::DecisionTree(tree::fit_classifier(xs, y, &resolve(id, hp)?)?)
            }
            AlgorithmId::RandomForest => {
                Learned::RandomForest(forest::fit(xs, y, &resolve(id, hp)?, seed)?)
            }
            AlgorithmId::NeuralNet => {
                Learned::NeuralNet(neural::fit(xs, y, &resolve(id, hp)?, seed)?)
            }
        }
    };
    log::debug!("{id}: trained on {} rows of width {width}", x.len());
    Ok(Model {
        algorithm: id,
        seed,
        n_train: x.len(),
        width,
        hyperparams,
        degenerate,
        scaler,
        learned,
    })
}

impl Model {
    fn prepare(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(x, self.width)?;
        Ok(match &self.scaler {
            Some(s) => s.transform_all(x),
            None => x.to_vec(),
        })
    }

    /// Hard 0/1 labels.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<u8>> {
        let xs = self.prepare(x)?;
        Ok(match &self.learned {
            Learned::Constant { label } => vec![*label; xs.len()],
            Learned::Logistic(m) | Learned::Svm(m) => {
                xs.iter().map(|r| u8::from(m.score(r) > 0.0)).collect()
            }
            Learned::Knn(m) => xs.iter().map(|r| m.predict_one(r)).collect(),
            Learned::Kmeans(m) => xs.iter().map(|r| m.predict_one(r)).collect(),
            Learned::NaiveBayes(m) => xs.iter().map(|r| u8::from(m.proba(r) > 0.5)).collect(),
            Learned::GradientBoost(m) => xs.iter().map(|r| u8::from(m.proba(r) > 0.5)).collect(),
            Learned::DecisionTree(m) => xs.iter().map(|r| u8::from(m.value(r) > 0.5)).collect(),
            Learned::RandomForest(m) => xs.iter().map(|r| u8::from(m.proba(r) > 0.5)).collect(),
            Learned::NeuralNet(m) => xs
                .iter()
                .map(|r| threshold_label(m.proba(r), m.threshold))
                .collect(),
        })
    }

    /// Class-1 scores in `[0, 1]` for models that define one. The linear
    /// SVM and k-means only produce labels and return `None`.
    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Result<Option<Vec<f64>>> {
        let xs = self.prepare(x)?;
        let score = |f: &dyn Fn(&[f64]) -> f64| Some(xs.iter().map(|r| f(r)).collect());
        Ok(match &self.learned {
            Learned::Constant { label } => Some(vec![f64::from(*label); xs.len()]),
            Learned::Logistic(m) => score(&|r| linear::sigmoid(m.score(r))),
            Learned::Svm(_) | Learned::Kmeans(_) => None,
            Learned::Knn(m) => score(&|r| m.proba(r)),
            Learned::NaiveBayes(m) => score(&|r| m.proba(r)),
            Learned::GradientBoost(m) => score(&|r| m.proba(r)),
            Learned::DecisionTree(m) => score(&|r| m.value(r)),
            Learned::RandomForest(m) => score(&|r| m.proba(r)),
            Learned::NeuralNet(m) => score(&|r| m.proba(r)),
        })
    }
}

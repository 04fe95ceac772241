use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::{evaluate, train, AlgorithmId, ClassMetrics, ClassReport, HyperparamBank, Hyperparams};
use crate::error::{invalid, Error, Result};
use crate::labeling::{split, LabeledDataset, SplitData, SplitSpec};
use crate::rng::{derive_seed, stream};

pub const REPORT_CSV_HEADER: &str =
    "algorithm,precision0,recall0,f1_0,support0,precision1,recall1,f1_1,support1";

/// A row source in the benchmark: a built-in algorithm, or labels produced
/// elsewhere and keyed by dataset index.
#[derive(Debug, Clone, PartialEq)]
pub enum Contender {
    Builtin(AlgorithmId),
    External {
        name: String,
        predictions: BTreeMap<usize, u8>,
    },
}

impl Contender {
    pub fn name(&self) -> &str {
        match self {
            Contender::Builtin(id) => id.name(),
            Contender::External { name, .. } => name,
        }
    }

    fn label(&self) -> String {
        match self {
            Contender::Builtin(id) => format!("({})", id.letter()),
            Contender::External { .. } => "(ext)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub split: String,
    pub algorithm: String,
    pub label: String,
    pub n_train: usize,
    pub degenerate: bool,
    pub hyperparams: serde_json::Value,
    pub report: ClassReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub rows: Vec<BenchmarkRow>,
}

fn score_cell(
    data: &SplitData,
    contender: &Contender,
    bank: &HyperparamBank,
    seed: u64,
    split_name: &str,
) -> Result<BenchmarkRow> {
    let truth = data.test.labels();
    let (predicted, hyperparams, degenerate) = match contender {
        Contender::Builtin(id) => {
            let default = Hyperparams::new();
            let hp = bank.get(id).unwrap_or(&default);
            let model = train(*id, &data.train, hp, seed)?;
            let p = if data.test.is_empty() {
                Vec::new()
            } else {
                model.predict(&data.test.features())?
            };
            (p, model.hyperparams, model.degenerate)
        }
        Contender::External { name, predictions } => {
            let p = data
                .test
                .rows
                .iter()
                .map(|r| {
                    predictions.get(&r.index).copied().ok_or_else(|| {
                        invalid(format!("{name}: no prediction for index {}", r.index))
                    })
                })
                .collect::<Result<Vec<u8>>>()?;
            (p, serde_json::Value::Null, false)
        }
    };
    Ok(BenchmarkRow {
        split: split_name.to_string(),
        algorithm: contender.name().to_string(),
        label: contender.label(),
        n_train: data.train.len(),
        degenerate,
        hyperparams,
        report: evaluate(&predicted, &truth)?,
    })
}

/// Training seed of `id` on the split at position `split_pos`.
pub fn cell_seed(seed: u64, split_pos: usize, id: AlgorithmId) -> u64 {
    derive_seed(
        derive_seed(seed, stream::CLASSIFIER, split_pos as u64),
        stream::CLASSIFIER,
        id.ordinal() as u64,
    )
}

/// Trains and scores every contender on every split. Cells run in
/// parallel, each with its [`cell_seed`], so the report does not depend on
/// scheduling. Per-class supports are checked to be equal across
/// contenders of a split.
pub fn run_benchmark(
    dataset: &LabeledDataset,
    splits: &[SplitSpec],
    contenders: &[Contender],
    bank: &HyperparamBank,
    seed: u64,
) -> Result<BenchmarkReport> {
    let data: Vec<SplitData> = splits
        .iter()
        .map(|s| split(dataset, s))
        .collect::<Result<_>>()?;
    for (s, d) in splits.iter().zip(&data) {
        if d.train.is_empty() {
            return Err(Error::InvalidSplit(format!("{}: no training rows", s.name)));
        }
    }
    let cells: Vec<(usize, usize)> = (0..splits.len())
        .flat_map(|s| (0..contenders.len()).map(move |c| (s, c)))
        .collect();
    let rows: Vec<BenchmarkRow> = cells
        .par_iter()
        .map(|&(s, c)| {
            let cell = match &contenders[c] {
                Contender::Builtin(id) => cell_seed(seed, s, *id),
                Contender::External { .. } => 0,
            };
            score_cell(&data[s], &contenders[c], bank, cell, &splits[s].name)
        })
        .collect::<Result<_>>()?;

    for chunk in rows.chunks(contenders.len().max(1)) {
        let supports: Vec<[usize; 2]> = chunk
            .iter()
            .map(|r| r.report.classes.map(|c| c.support))
            .collect();
        if supports.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Assertion(format!(
                "supports differ across algorithms in split {}",
                chunk[0].split
            )));
        }
    }
    Ok(BenchmarkReport { seed, rows })
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

impl BenchmarkReport {
    /// Split names in first-seen order.
    pub fn splits(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.split.as_str()) {
                out.push(&r.split);
            }
        }
        out
    }

    pub fn rows_for<'a>(&'a self, split: &'a str) -> impl Iterator<Item = &'a BenchmarkRow> + 'a {
        self.rows.iter().filter(move |r| r.split == split)
    }

    /// One split as CSV with [`REPORT_CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, split: &str, mut w: W) -> Result<()> {
        writeln!(w, "{REPORT_CSV_HEADER}")?;
        for r in self.rows_for(split) {
            let [c0, c1] = r.report.classes;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.algorithm,
                num(c0.precision),
                num(c0.recall),
                num(c0.f1),
                c0.support,
                num(c1.precision),
                num(c1.recall),
                num(c1.f1),
                c1.support
            )?;
        }
        Ok(())
    }

    /// Aligned text tables, one block per split, two decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let cell = |x: f64, undefined: bool| {
            format!(
                "{:>9}",
                format!("{x:.2}{}", if undefined { "*" } else { "" })
            )
        };
        let block = |m: &ClassMetrics| {
            format!(
                "{} {} {} {:>8}",
                cell(m.precision, m.precision_undefined),
                cell(m.recall, m.recall_undefined),
                cell(m.f1, m.f1_undefined),
                m.support
            )
        };
        let mut any_undefined = false;
        for split in self.splits() {
            let first = self.rows_for(split).next().unwrap();
            let _ = writeln!(
                s,
                "{split}  (train rows {}, test rows {})",
                first.n_train, first.report.n
            );
            let _ = writeln!(s, "{:<26} {:^38}   {:^38}", "", "theta = 0", "theta = 1");
            let head = format!(
                "{:>9} {:>9} {:>9} {:>8}",
                "precision", "recall", "f1-score", "support"
            );
            let _ = writeln!(s, "{:<26} {head}   {head}", "");
            for r in self.rows_for(split) {
                let name = format!("{} {}", r.label, r.algorithm);
                let _ = writeln!(
                    s,
                    "{name:<26} {}   {}",
                    block(&r.report.classes[0]),
                    block(&r.report.classes[1])
                );
                any_undefined |= r
                    .report
                    .classes
                    .iter()
                    .any(|c| c.precision_undefined || c.recall_undefined || c.f1_undefined);
            }
            s.push('\n');
        }
        if any_undefined {
            s.push_str("* zero denominator, reported as 0.00\n");
        }
        s
    }
}

/// Reads `index,predicted_theta`.
pub fn read_external_predictions<R: Read>(reader: R) -> Result<BTreeMap<usize, u8>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != ["index", "predicted_theta"] {
        return Err(Error::Parse {
            line: 1,
            message: "expected header index,predicted_theta".into(),
        });
    }
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bad = || Error::Parse {
            line,
            message: "expected a non-negative index and a 0/1 label".into(),
        };
        let index: usize = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let label = match rec.get(1) {
            Some("0") => 0,
            Some("1") => 1,
            _ => return Err(bad()),
        };
        if out.insert(index, label).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("index {index} repeated"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{IndexRange, LabeledRow};

    fn dataset() -> LabeledDataset {
        let rows = (0..120)
            .map(|i| {
                let theta = u8::from(i % 4 == 0);
                let x = if theta == 1 { 2.0 } else { -2.0 } + (i % 7) as f64 * 0.1;
                LabeledRow {
                    index: i,
                    features: vec![x, (i % 3) as f64],
                    theta,
                }
            })
            .collect();
        LabeledDataset {
            window_len: 2,
            n_indexed: 120,
            rows,
        }
    }

    fn spec(name: &str, a: usize, b: usize, c: usize, d: usize) -> SplitSpec {
        SplitSpec::new(
            name,
            IndexRange::new(a, b).unwrap(),
            IndexRange::new(c, d).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn one_cell() {
        let r = run_benchmark(
            &dataset(),
            &[spec("T1", 0, 79, 80, 119)],
            &[Contender::Builtin(AlgorithmId::DecisionTree)],
            &HyperparamBank::new(),
            1,
        )
        .unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].report.classes.map(|c| c.support), [30, 10]);
        let mut csv = Vec::new();
        r.write_csv("T1", &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(REPORT_CSV_HEADER));
        assert!(r.to_text().contains("(G) decision_tree"));
    }

    #[test]
    fn external_scored_like_builtin() {
        let ds = dataset();
        let truth: BTreeMap<usize, u8> = ds.rows.iter().map(|r| (r.index, r.theta)).collect();
        let r = run_benchmark(
            &ds,
            &[spec("T", 0, 59, 60, 119)],
            &[Contender::External {
                name: "oracle".into(),
                predictions: truth,
            }],
            &HyperparamBank::new(),
            0,
        )
        .unwrap();
        assert_eq!(r.rows[0].report.accuracy, 1.0);
        let missing = Contender::External {
            name: "none".into(),
            predictions: BTreeMap::new(),
        };
        assert!(run_benchmark(
            &ds,
            &[spec("T", 0, 59, 60, 119)],
            &[missing],
            &HyperparamBank::new(),
            0
        )
        .is_err());
    }

    #[test]
    fn external_file_format() {
        let m = read_external_predictions("index,predicted_theta\n3,1\n5,0\n".as_bytes()).unwrap();
        assert_eq!(m, BTreeMap::from([(3, 1), (5, 0)]));
        assert!(read_external_predictions("index,predicted_theta\n3,2\n".as_bytes()).is_err());
        assert!(read_external_predictions("index,predicted_theta\n3,1\n3,0\n".as_bytes()).is_err());
        assert!(read_external_predictions("i,p\n".as_bytes()).is_err());
    }
}

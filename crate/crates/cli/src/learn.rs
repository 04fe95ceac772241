use std::path::Path;

use bns_core::classifiers::{
    cell_seed, read_external_predictions, run_benchmark, train, BenchmarkReport, Contender,
    Hyperparams,
};
use bns_core::labeling::{
    build_dataset, index_series, mark_big_jumps, split, IndexRange, IndexedReturns, LabeledDataset,
    SplitSpec,
};
use bns_core::market::ReturnSeries;
use serde::Serialize;

use crate::config::{RunConfig, SplitEntry};
use crate::error::{stage, CliError, CliResult};
use crate::{io, market};

#[derive(Debug, Serialize)]
pub struct LabelSummary {
    pub returns: usize,
    pub marks: usize,
    pub rows: usize,
    pub positives: usize,
}

/// Indexes the returns and cuts the labeled dataset.
pub fn label(
    cfg: &RunConfig,
    returns: &ReturnSeries,
) -> CliResult<(IndexedReturns, LabeledDataset, LabelSummary)> {
    stage("label", cfg.labeling.validate())?;
    let indexed = index_series(returns);
    let marks = mark_big_jumps(&indexed.values(), &cfg.labeling);
    let dataset = stage("label", build_dataset(&indexed, &marks, &cfg.labeling))?;
    let summary = LabelSummary {
        returns: indexed.len(),
        marks: marks.count(),
        rows: dataset.len(),
        positives: dataset.positives(),
    };
    Ok((indexed, dataset, summary))
}

/// The configured splits, or a single chronological 80/20 split of the
/// labeled rows when none are given.
pub fn resolve_splits(
    cfg: &RunConfig,
    dataset: &LabeledDataset,
    indexed: Option<&IndexedReturns>,
) -> CliResult<Vec<SplitSpec>> {
    if !cfg.splits.is_empty() {
        return cfg.splits.iter().map(|s| s.resolve(indexed)).collect();
    }
    let (Some(first), Some(last)) = (dataset.rows.first(), dataset.rows.last()) else {
        return Err(CliError::Config("no labeled rows to split".into()));
    };
    if dataset.len() < 2 {
        return Err(CliError::Config(
            "need at least two labeled rows for the default split".into(),
        ));
    }
    let cut = dataset.rows[(dataset.len() * 4 / 5).max(1)].index;
    let spec = stage(
        "split",
        SplitSpec::new(
            "T1",
            IndexRange::new(first.index, cut - 1).unwrap(),
            IndexRange::new(cut, last.index).unwrap(),
        ),
    )?;
    log::info!(
        "no splits configured; using {}",
        toml_line(&SplitEntry::from_spec(&spec))
    );
    Ok(vec![spec])
}

fn toml_line(e: &SplitEntry) -> String {
    format!("{} train {:?} test {:?}", e.name, e.train, e.test)
}

pub fn contenders(cfg: &RunConfig) -> CliResult<Vec<Contender>> {
    let mut out: Vec<Contender> = cfg
        .classifiers
        .algorithms
        .iter()
        .copied()
        .map(Contender::Builtin)
        .collect();
    for e in &cfg.classifiers.external {
        let predictions = stage("external", read_external_predictions(io::open(&e.path)?))?;
        out.push(Contender::External {
            name: e.name.clone(),
            predictions,
        });
    }
    if out.is_empty() {
        return Err(CliError::Config("no classifiers selected".into()));
    }
    Ok(out)
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn write_report(out: &Path, report: &BenchmarkReport) -> CliResult<()> {
    for s in report.splits() {
        let path = out.join(format!("report_{}.csv", file_stem(s)));
        stage("report", report.write_csv(s, io::create(&path)?))?;
    }
    io::write_text(&out.join("report.txt"), &report.to_text())?;
    io::write_json(&out.join("report.json"), report)
}

fn load_dataset(cfg: &RunConfig) -> CliResult<(LabeledDataset, Option<IndexedReturns>)> {
    let path = cfg
        .input
        .dataset
        .as_deref()
        .ok_or_else(|| CliError::Config("input.dataset is required (--dataset)".into()))?;
    let mut dataset = stage("dataset", LabeledDataset::read_csv(io::open(path)?))?;
    let indexed = match cfg.input.returns.as_deref() {
        Some(p) => {
            let idx = index_series(&io::read_returns(p)?);
            dataset.n_indexed = idx.len();
            Some(idx)
        }
        None => None,
    };
    Ok((dataset, indexed))
}

pub fn run_label(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (bars, _) = market::load(cfg)?;
    let (_, returns) = market::returns(cfg, &bars)?;
    let (_, dataset, summary) = label(cfg, &returns)?;
    io::write_returns(&out.join("returns.csv"), &returns)?;
    stage(
        "label",
        dataset.write_csv(io::create(&out.join("dataset.csv"))?),
    )?;
    io::write_json(&out.join("label_summary.json"), &summary)
}

/// Fits every selected algorithm on the training part of every split and
/// saves the models as JSON.
pub fn run_train(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (dataset, indexed) = load_dataset(cfg)?;
    let splits = resolve_splits(cfg, &dataset, indexed.as_ref())?;
    let dir = out.join("models");
    io::create_dir(&dir)?;
    let default = Hyperparams::new();
    for (pos, spec) in splits.iter().enumerate() {
        let parts = stage("split", split(&dataset, spec))?;
        for &id in &cfg.classifiers.algorithms {
            let hp = cfg.hyperparams.get(&id).unwrap_or(&default);
            let model = stage(
                "train",
                train(id, &parts.train, hp, cell_seed(cfg.seed, pos, id)),
            )?;
            io::write_json(
                &dir.join(format!("{}_{}.json", file_stem(&spec.name), id.name())),
                &model,
            )?;
        }
    }
    Ok(())
}

pub fn run_report(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (dataset, indexed) = load_dataset(cfg)?;
    let splits = resolve_splits(cfg, &dataset, indexed.as_ref())?;
    let report = stage(
        "report",
        run_benchmark(
            &dataset,
            &splits,
            &contenders(cfg)?,
            &cfg.hyperparams,
            cfg.seed,
        ),
    )?;
    print!("{}", report.to_text());
    write_report(out, &report)
}

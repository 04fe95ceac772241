//! End-to-end run: ingest, preprocess, resample, label, split, benchmark.
//! Each run also re-checks a handful of properties of its own outputs and
//! records them in `assertions.json`.

use std::path::Path;

use bns_core::classifiers::BenchmarkReport;
use bns_core::labeling::{Direction, IndexedReturns, LabeledDataset, LabelingConfig, SplitSpec};
use bns_core::market::{preprocess, write_bars_csv};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{stage, CliError, CliResult};
use crate::{io, learn, market};

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Assertion {
    Assertion {
        name,
        passed,
        detail: detail.into(),
    }
}

/// Targets recomputed from the raw returns, one anchor at a time.
fn brute_force_labels(
    indexed: &IndexedReturns,
    cfg: &LabelingConfig,
) -> Vec<(usize, Vec<f64>, u8)> {
    let rows = indexed.rows();
    let big = |x: f64| {
        let m = match cfg.direction {
            Direction::Down => -x,
            Direction::Up => x,
            Direction::Both => x.abs(),
        };
        if cfg.inclusive {
            m >= cfg.k
        } else {
            m > cfg.k
        }
    };
    let mut seg_start = vec![0usize; rows.len()];
    for i in 1..rows.len() {
        seg_start[i] = if rows[i].row.segment() == rows[i - 1].row.segment() {
            seg_start[i - 1]
        } else {
            i
        };
    }
    let (w, h) = (cfg.window_len, cfg.lookahead);
    let mut out = Vec::new();
    for i in 0..rows.len() {
        if i + 1 < w || i + h >= rows.len() {
            continue;
        }
        let seg = rows[i].row.segment();
        if (i + 1 - w..=i + h).any(|j| rows[j].row.segment() != seg) {
            continue;
        }
        if (i - (seg_start[i] + w - 1)) % cfg.stride != 0 {
            continue;
        }
        let count = (i + 1..=i + h)
            .filter(|&j| big(rows[j].row.pct_change))
            .count();
        let features = rows[i + 1 - w..=i]
            .iter()
            .map(|r| r.row.pct_change)
            .collect();
        out.push((rows[i].index, features, u8::from(count >= cfg.min_jumps)));
    }
    out
}

fn label_check(
    indexed: &IndexedReturns,
    dataset: &LabeledDataset,
    cfg: &LabelingConfig,
) -> Assertion {
    let expected = brute_force_labels(indexed, cfg);
    let mismatches = expected.len().abs_diff(dataset.len())
        + expected
            .iter()
            .zip(&dataset.rows)
            .filter(|((i, f, t), r)| *i != r.index || *f != r.features || *t != r.theta)
            .count();
    check(
        "labels_match_brute_force",
        mismatches == 0,
        format!(
            "{} rows, {} brute-force anchors, {mismatches} mismatches",
            dataset.len(),
            expected.len()
        ),
    )
}

fn report_checks(
    report: &BenchmarkReport,
    splits: &[SplitSpec],
    datasets: &[(usize, [usize; 2])],
) -> Vec<Assertion> {
    let mut out = Vec::new();
    let mut bad_support = Vec::new();
    let mut bad_total = Vec::new();
    for (spec, &(n_test, _)) in splits.iter().zip(datasets) {
        let supports: Vec<[usize; 2]> = report
            .rows_for(&spec.name)
            .map(|r| [r.report.classes[0].support, r.report.classes[1].support])
            .collect();
        if supports.windows(2).any(|p| p[0] != p[1]) {
            bad_support.push(spec.name.clone());
        }
        if supports.iter().any(|s| s[0] + s[1] != n_test) {
            bad_total.push(spec.name.clone());
        }
    }
    out.push(check(
        "supports_constant_per_split",
        bad_support.is_empty(),
        format!("differing splits: {bad_support:?}"),
    ));
    out.push(check(
        "support_sum_equals_test_size",
        bad_total.is_empty(),
        format!("differing splits: {bad_total:?}"),
    ));

    let mut f1_bad = 0;
    let mut acc_bad = 0;
    for row in &report.rows {
        for c in &row.report.classes {
            let (p, r) = (c.precision, c.recall);
            let f1 = if p + r > 0.0 {
                2.0 * p * r / (p + r)
            } else {
                0.0
            };
            if (f1 - c.f1).abs() > 1e-12 {
                f1_bad += 1;
            }
        }
        let n = row.report.n as f64;
        let micro_recall = row
            .report
            .classes
            .iter()
            .map(|c| c.recall * c.support as f64)
            .sum::<f64>()
            / n;
        if row.report.n > 0 && (micro_recall - row.report.accuracy).abs() > 1e-12 {
            acc_bad += 1;
        }
    }
    out.push(check(
        "f1_is_harmonic_mean",
        f1_bad == 0,
        format!("{f1_bad} violations"),
    ));
    out.push(check(
        "accuracy_equals_weighted_recall",
        acc_bad == 0,
        format!("{acc_bad} violations"),
    ));
    out
}

/// Runs every stage into `out` and returns the number of failed assertions.
pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<usize> {
    let (clean, ingest_report) = market::ingest(cfg)?;
    stage(
        "ingest",
        write_bars_csv(&clean, io::create(&out.join("bars_clean.csv"))?),
    )?;
    io::write_json(&out.join("ingest_report.json"), &ingest_report)?;
    let mut assertions = Vec::new();

    let (again, second) = stage("preprocess", preprocess(&clean, &cfg.preprocess))?;
    assertions.push(check(
        "preprocess_idempotent",
        again == clean && second.retained == second.total,
        format!(
            "second pass removed {} of {}",
            second.total - second.retained,
            second.total
        ),
    ));

    let (sampled, returns) = market::returns(cfg, &clean)?;
    market::write_stats(out, &sampled, &returns)?;

    let (indexed, dataset, summary) = learn::label(cfg, &returns)?;
    io::write_returns(&out.join("returns.csv"), &returns)?;
    stage(
        "label",
        dataset.write_csv(io::create(&out.join("dataset.csv"))?),
    )?;
    io::write_json(&out.join("label_summary.json"), &summary)?;
    assertions.push(label_check(&indexed, &dataset, &cfg.labeling));

    let splits = learn::resolve_splits(cfg, &dataset, Some(&indexed))?;
    let ordered = splits.iter().all(|s| s.train.end < s.test.start);
    assertions.push(check(
        "splits_train_before_test",
        ordered,
        format!("{} splits", splits.len()),
    ));
    let sizes: Vec<(usize, [usize; 2])> = splits
        .iter()
        .map(|s| {
            let test: Vec<u8> = dataset
                .rows
                .iter()
                .filter(|r| s.test.contains(r.index))
                .map(|r| r.theta)
                .collect();
            let ones = test.iter().filter(|&&t| t == 1).count();
            (test.len(), [test.len() - ones, ones])
        })
        .collect();
    let report = stage(
        "benchmark",
        bns_core::classifiers::run_benchmark(
            &dataset,
            &splits,
            &learn::contenders(cfg)?,
            &cfg.hyperparams,
            cfg.seed,
        ),
    )?;
    assertions.extend(report_checks(&report, &splits, &sizes));
    learn::write_report(out, &report)?;
    print!("{}", report.to_text());

    io::write_json(&out.join("assertions.json"), &assertions)?;
    let failed = assertions.iter().filter(|a| !a.passed).count();
    for a in assertions.iter().filter(|a| !a.passed) {
        log::error!("assertion {} failed: {}", a.name, a.detail);
    }
    Ok(failed)
}

pub fn run_checked(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    match run(cfg, out)? {
        0 => Ok(()),
        n => Err(CliError::Assertions(n)),
    }
}

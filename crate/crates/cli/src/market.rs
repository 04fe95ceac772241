use std::path::Path;

use bns_core::market::synthetic::synthetic_bars;
use bns_core::market::{
    descriptive_stats, load_bars, pct_change, preprocess, realized_measures, resample,
    write_bars_csv, write_rows_csv, BarSeries, GroupBy, LoadReport, PreprocessReport, ReturnSeries,
    RvWindow,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{stage, CliError, CliResult};
use crate::io;

#[derive(Debug, Serialize)]
pub struct IngestReport {
    pub load: LoadReport,
    pub preprocess: PreprocessReport,
}

fn bars_path(cfg: &RunConfig) -> CliResult<&Path> {
    cfg.input
        .bars
        .as_deref()
        .ok_or_else(|| CliError::Config("input.bars is required (--bars)".into()))
}

/// Loads `input.bars` against the configured calendar.
pub fn load(cfg: &RunConfig) -> CliResult<(BarSeries, LoadReport)> {
    let calendar = cfg.calendar.to_calendar()?;
    let path = bars_path(cfg)?;
    stage("ingest", load_bars(io::open(path)?, &calendar))
}

/// Loads and cleans the bars.
pub fn ingest(cfg: &RunConfig) -> CliResult<(BarSeries, IngestReport)> {
    let (raw, load) = load(cfg)?;
    let (clean, report) = stage("preprocess", preprocess(&raw, &cfg.preprocess))?;
    Ok((
        clean,
        IngestReport {
            load,
            preprocess: report,
        },
    ))
}

/// Resampled bars and their per-session percent changes.
pub fn returns(cfg: &RunConfig, bars: &BarSeries) -> CliResult<(BarSeries, ReturnSeries)> {
    let sampled = stage("resample", resample(bars, cfg.resample.interval_minutes))?;
    let r = pct_change(&sampled);
    Ok((sampled, r))
}

/// Writes descriptive statistics of the closes and realized measures of
/// the returns.
pub fn write_stats(out: &Path, bars: &BarSeries, returns: &ReturnSeries) -> CliResult<()> {
    for (name, group) in [
        ("stats_overall.csv", GroupBy::Overall),
        ("stats_month.csv", GroupBy::Month),
    ] {
        stage(
            "stats",
            write_rows_csv(
                &descriptive_stats(bars, group),
                io::create(&out.join(name))?,
            ),
        )?;
    }
    for (name, window) in [
        ("rv_day.csv", RvWindow::Day),
        ("rv_month.csv", RvWindow::Month),
    ] {
        stage(
            "realized",
            write_rows_csv(
                &realized_measures(returns, window),
                io::create(&out.join(name))?,
            ),
        )?;
    }
    Ok(())
}

pub fn run_ingest(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (clean, report) = ingest(cfg)?;
    stage(
        "ingest",
        write_bars_csv(&clean, io::create(&out.join("bars_clean.csv"))?),
    )?;
    io::write_json(&out.join("ingest_report.json"), &report)
}

pub fn run_stats(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (bars, _) = load(cfg)?;
    let (sampled, r) = returns(cfg, &bars)?;
    write_stats(out, &sampled, &r)
}

pub fn run_synth(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let calendar = cfg.calendar.to_calendar()?;
    let (bars, days) = stage("synthetic", synthetic_bars(&cfg.synthetic, &calendar))?;
    stage(
        "synthetic",
        write_bars_csv(&bars, io::create(&out.join("bars.csv"))?),
    )?;
    stage(
        "synthetic",
        write_rows_csv(&days, io::create(&out.join("synthetic_days.csv"))?),
    )
}

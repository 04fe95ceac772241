use super::bars::{Bar, BarSeries};
use crate::error::{invalid, Result};

/// Keeps the last bar of every `interval_minutes` bucket. Buckets are
/// aligned to each session's open, `(open + k·I, open + (k+1)·I]`, and never
/// span two sessions or two days.
pub fn resample(series: &BarSeries, interval_minutes: i64) -> Result<BarSeries> {
    if interval_minutes <= 0 {
        return Err(invalid(format!(
            "interval must be > 0, got {interval_minutes}"
        )));
    }
    let sessions = series.calendar().sessions();
    let width = interval_minutes * 60;
    let bucket = |b: &Bar| {
        let since_open = (b.timestamp.time() - sessions[b.session].open).num_seconds();
        (b.day(), b.session, (since_open - 1).div_euclid(width))
    };
    let bars = series
        .bars()
        .chunk_by(|a, b| bucket(a) == bucket(b))
        .map(|run| *run.last().expect("chunks are non-empty"))
        .collect();
    Ok(BarSeries::from_bars_unchecked(
        bars,
        series.calendar().clone(),
    ))
}

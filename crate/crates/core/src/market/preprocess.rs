use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::bars::{Bar, BarSeries};
use crate::error::{invalid, Result};

/// How isolated bad ticks are detected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutlierPolicy {
    /// Keep every positive price.
    None,
    /// A bar is an outlier when its incoming one-minute percent change and
    /// the change out of it both deviate from the day's mean change by more
    /// than `multiple` standard deviations, in opposite directions. Applied
    /// until no bar qualifies.
    StdDev { multiple: f64 },
}

impl Default for OutlierPolicy {
    fn default() -> Self {
        OutlierPolicy::StdDev { multiple: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Bars stamped within this many minutes after the daily open are dropped.
    pub trim_minutes: i64,
    /// Also trim after every later session open (the lunch reopen).
    pub trim_reopen: bool,
    pub outlier: OutlierPolicy,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            trim_minutes: 10,
            trim_reopen: false,
            outlier: OutlierPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreprocessReport {
    pub total: usize,
    pub non_positive: usize,
    pub trimmed: usize,
    pub outliers: usize,
    pub retained: usize,
    pub rejection_rate: f64,
}

/// Drops non-positive closes, the opening window of each trading day, and
/// outliers per `cfg.outlier`. The result is a fixed point: running it again
/// removes nothing.
pub fn preprocess(
    series: &BarSeries,
    cfg: &PreprocessConfig,
) -> Result<(BarSeries, PreprocessReport)> {
    if cfg.trim_minutes < 0 {
        return Err(invalid(format!(
            "trim_minutes must be >= 0, got {}",
            cfg.trim_minutes
        )));
    }
    if let OutlierPolicy::StdDev { multiple } = cfg.outlier {
        if !(multiple > 0.0) {
            return Err(invalid("outlier multiple must be > 0"));
        }
    }
    let total = series.len();
    let sessions = series.calendar().sessions();
    let trim = Duration::minutes(cfg.trim_minutes);

    let positive: Vec<Bar> = series
        .bars()
        .iter()
        .copied()
        .filter(|b| b.close > 0.0)
        .collect();
    let non_positive = total - positive.len();

    let in_opening_window = |b: &Bar| {
        if b.session > 0 && !cfg.trim_reopen {
            return false;
        }
        b.timestamp.time() <= sessions[b.session].open + trim
    };
    let kept: Vec<Bar> = positive
        .iter()
        .copied()
        .filter(|b| !in_opening_window(b))
        .collect();
    let trimmed = positive.len() - kept.len();

    let mut out = Vec::with_capacity(kept.len());
    let mut outliers = 0;
    for day in kept.chunk_by(|a, b| a.day() == b.day()) {
        let mut day = day.to_vec();
        if let OutlierPolicy::StdDev { multiple } = cfg.outlier {
            while let Some(i) = worst_spike(&day, multiple) {
                day.remove(i);
                outliers += 1;
            }
        }
        out.extend(day);
    }

    let retained = out.len();
    let report = PreprocessReport {
        total,
        non_positive,
        trimmed,
        outliers,
        retained,
        rejection_rate: if total == 0 {
            0.0
        } else {
            (total - retained) as f64 / total as f64
        },
    };
    log::info!(
        "preprocess: {} of {} bars kept ({} non-positive, {} trimmed, {} outliers)",
        retained,
        total,
        non_positive,
        trimmed,
        outliers
    );
    Ok((
        BarSeries::from_bars_unchecked(out, series.calendar().clone()),
        report,
    ))
}

/// Index of the bar with the largest two-sided spike score above
/// `multiple`, if any. `day` holds one trading day.
fn worst_spike(day: &[Bar], multiple: f64) -> Option<usize> {
    // changes[i] is the change into bar i, when bar i-1 is in the same session.
    let changes: Vec<Option<f64>> = (0..day.len())
        .map(|i| {
            (i > 0 && day[i - 1].session == day[i].session)
                .then(|| 100.0 * (day[i].close - day[i - 1].close) / day[i - 1].close)
        })
        .collect();
    let values: Vec<f64> = changes.iter().flatten().copied().collect();
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 1..day.len().saturating_sub(1) {
        let (Some(inc), Some(out)) = (changes[i], changes[i + 1]) else {
            continue;
        };
        let (zi, zo) = ((inc - mean) / sd, (out - mean) / sd);
        if zi.abs() > multiple && zo.abs() > multiple && zi.signum() != zo.signum() {
            let score = zi.abs().min(zo.abs());
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::SessionCalendar;
    use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

    fn ts(d: u32, h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2021, 3, d)
            .unwrap()
            .and_time(NaiveTime::from_hms_opt(h, m, 0).unwrap())
    }

    /// 09:31–11:30 and 13:01–15:00 on one day.
    pub(crate) fn full_day(d: u32, price: impl Fn(usize) -> f64) -> Vec<(NaiveDateTime, f64)> {
        let morning = (0..120).map(|i| ts(d, 9, 31) + Duration::minutes(i));
        let afternoon = (0..120).map(|i| ts(d, 13, 1) + Duration::minutes(i));
        morning
            .chain(afternoon)
            .enumerate()
            .map(|(i, t)| (t, price(i)))
            .collect()
    }

    fn wiggle(i: usize) -> f64 {
        5000.0 + (i % 7) as f64 - 3.0
    }

    #[test]
    fn trims_daily_open_only() {
        let s = BarSeries::from_points(full_day(1, wiggle), SessionCalendar::default()).unwrap();
        let (out, report) = preprocess(&s, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.len(), 230);
        assert_eq!(report.trimmed, 10);
        assert_eq!(report.rejection_rate, 10.0 / 240.0);
        assert_eq!(out.bars()[0].timestamp, ts(1, 9, 41));
        assert_eq!(out.bars()[110].timestamp, ts(1, 13, 1));
    }

    #[test]
    fn trims_reopen_when_asked() {
        let s = BarSeries::from_points(full_day(1, wiggle), SessionCalendar::default()).unwrap();
        let cfg = PreprocessConfig {
            trim_reopen: true,
            ..Default::default()
        };
        let (out, _) = preprocess(&s, &cfg).unwrap();
        assert_eq!(out.len(), 220);
    }

    #[test]
    fn drops_zero_close() {
        // One zero among 100 bars, clear of the opening window.
        let points: Vec<_> = std::iter::once((ts(2, 10, 0), 0.0))
            .chain((1..100).map(|i| (ts(2, 13, 0) + Duration::minutes(i), 4000.0 + (i % 3) as f64)))
            .collect();
        let s = BarSeries::from_points(points, SessionCalendar::default()).unwrap();
        let (out, report) = preprocess(&s, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.len(), 99);
        assert_eq!(report.non_positive, 1);
        assert_eq!(report.rejection_rate, 0.01);
    }

    #[test]
    fn removes_isolated_spike_but_keeps_level_shift() {
        let spike = |i: usize| if i == 150 { 5500.0 } else { wiggle(i) };
        let s = BarSeries::from_points(full_day(3, spike), SessionCalendar::default()).unwrap();
        let (out, report) = preprocess(&s, &PreprocessConfig::default()).unwrap();
        assert_eq!(report.outliers, 1);
        assert!(out.bars().iter().all(|b| b.close < 5100.0));

        let shift = |i: usize| {
            if i >= 150 {
                wiggle(i) + 300.0
            } else {
                wiggle(i)
            }
        };
        let s = BarSeries::from_points(full_day(3, shift), SessionCalendar::default()).unwrap();
        let (_, report) = preprocess(&s, &PreprocessConfig::default()).unwrap();
        assert_eq!(report.outliers, 0);
    }

    #[test]
    fn idempotent() {
        let spiky = |i: usize| match i {
            0 => 0.0,
            60 => 6000.0,
            61 => 4000.0,
            _ => wiggle(i),
        };
        let mut points = full_day(4, spiky);
        points.extend(full_day(5, wiggle));
        let s = BarSeries::from_points(points, SessionCalendar::default()).unwrap();
        let cfg = PreprocessConfig::default();
        let (once, _) = preprocess(&s, &cfg).unwrap();
        let (twice, report) = preprocess(&once, &cfg).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.rejection_rate, 0.0);
    }

    #[test]
    fn negative_trim_rejected() {
        let s = BarSeries::from_points(full_day(1, wiggle), SessionCalendar::default()).unwrap();
        let cfg = PreprocessConfig {
            trim_minutes: -1,
            ..Default::default()
        };
        assert!(preprocess(&s, &cfg).is_err());
    }
}

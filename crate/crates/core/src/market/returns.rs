use chrono::{NaiveDate, NaiveDateTime};
use serde::Serialize;

use super::bars::BarSeries;

/// Percent change from the previous bar of the same session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnRow {
    pub timestamp: NaiveDateTime,
    pub session: usize,
    /// `100·(P_k − P_{k−1})/P_{k−1}`.
    pub pct_change: f64,
}

impl ReturnRow {
    pub fn day(&self) -> NaiveDate {
        self.timestamp.date()
    }

    pub fn segment(&self) -> (NaiveDate, usize) {
        (self.day(), self.session)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReturnSeries {
    pub rows: Vec<ReturnRow>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.pct_change).collect()
    }

    /// Contiguous runs of returns from one `(day, session)`.
    pub fn segments(&self) -> impl Iterator<Item = &[ReturnRow]> {
        self.rows.chunk_by(|a, b| a.segment() == b.segment())
    }
}

/// Per-session consecutive percent changes. The first bar of each session
/// produces no return, so nothing spans the lunch break or the overnight gap.
pub fn pct_change(series: &BarSeries) -> ReturnSeries {
    let rows = series
        .segments()
        .flat_map(|seg| {
            seg.windows(2).map(|w| ReturnRow {
                timestamp: w[1].timestamp,
                session: w[1].session,
                pct_change: 100.0 * (w[1].close - w[0].close) / w[0].close,
            })
        })
        .collect();
    ReturnSeries { rows }
}

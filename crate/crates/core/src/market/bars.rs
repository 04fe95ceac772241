use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};
use serde::Serialize;

use super::calendar::SessionCalendar;
use crate::error::{Error, Result};

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

pub(crate) const TIMESTAMP_OUT: &str = "%Y-%m-%dT%H:%M:%S";

/// One minute bar: its end-of-minute timestamp, close, and the index of the
/// calendar session it falls in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bar {
    pub timestamp: NaiveDateTime,
    pub close: f64,
    pub session: usize,
}

impl Bar {
    pub fn day(&self) -> NaiveDate {
        self.timestamp.date()
    }

    /// `(day, session)`; returns and windows never cross a change of key.
    pub fn segment(&self) -> (NaiveDate, usize) {
        (self.day(), self.session)
    }
}

/// Timestamped bars in strictly increasing order, each inside a session of
/// `calendar`. Raw loads may still hold non-positive closes; preprocessing
/// removes them.
#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    bars: Vec<Bar>,
    calendar: SessionCalendar,
}

impl BarSeries {
    /// Builds a series from `(timestamp, close)` pairs, tagging sessions.
    /// Fails if timestamps do not strictly increase or fall outside the
    /// calendar.
    pub fn from_points(
        points: impl IntoIterator<Item = (NaiveDateTime, f64)>,
        calendar: SessionCalendar,
    ) -> Result<Self> {
        let mut bars: Vec<Bar> = Vec::new();
        for (i, (timestamp, close)) in points.into_iter().enumerate() {
            let session = calendar.session_of(timestamp.time()).ok_or_else(|| {
                Error::InvalidParameter(format!("{timestamp} is outside every session"))
            })?;
            if let Some(prev) = bars.last() {
                if timestamp <= prev.timestamp {
                    return Err(Error::Ordering {
                        line: i as u64 + 1,
                        message: format!("{timestamp} does not follow {}", prev.timestamp),
                    });
                }
            }
            bars.push(Bar {
                timestamp,
                close,
                session,
            });
        }
        Ok(Self { bars, calendar })
    }

    pub(crate) fn from_bars_unchecked(bars: Vec<Bar>, calendar: SessionCalendar) -> Self {
        Self { bars, calendar }
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn calendar(&self) -> &SessionCalendar {
        &self.calendar
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    /// Contiguous runs of bars sharing one `(day, session)`.
    pub fn segments(&self) -> impl Iterator<Item = &[Bar]> {
        self.bars.chunk_by(|a, b| a.segment() == b.segment())
    }

    /// Contiguous runs of bars sharing one trading day.
    pub fn days(&self) -> impl Iterator<Item = &[Bar]> {
        self.bars.chunk_by(|a, b| a.day() == b.day())
    }
}

/// Outcome counts of [`load_bars`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub accepted: usize,
    pub rejected_outside_session: usize,
}

fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
}

/// Reads a `timestamp,close` CSV. Rows outside every calendar session are
/// dropped and counted; malformed rows and non-increasing timestamps are
/// errors carrying the 1-based line number.
pub fn load_bars<R: Read>(
    source: R,
    calendar: &SessionCalendar,
) -> Result<(BarSeries, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut bars: Vec<Bar> = Vec::new();
    let mut last: Option<NaiveDateTime> = None;
    let mut rejected = 0;
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while reader.read_record(&mut record)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if first {
            first = false;
            let header: Vec<&str> = record.iter().collect();
            if header == ["timestamp", "close"] {
                continue;
            }
            return Err(Error::Parse {
                line,
                message: "expected header `timestamp,close`".into(),
            });
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let timestamp = parse_timestamp(&record[0]).ok_or_else(|| Error::Parse {
            line,
            message: format!("bad timestamp `{}`", &record[0]),
        })?;
        let close: f64 = record[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad close `{}`", &record[1]),
        })?;
        if !close.is_finite() {
            return Err(Error::Parse {
                line,
                message: "close is not finite".into(),
            });
        }
        if let Some(prev) = last {
            if timestamp <= prev {
                return Err(Error::Ordering {
                    line,
                    message: format!("{timestamp} does not follow {prev}"),
                });
            }
        }
        last = Some(timestamp);
        match calendar.session_of(timestamp.time()) {
            Some(session) => bars.push(Bar {
                timestamp,
                close,
                session,
            }),
            None => rejected += 1,
        }
    }
    let report = LoadReport {
        accepted: bars.len(),
        rejected_outside_session: rejected,
    };
    if rejected > 0 {
        log::info!("rejected {rejected} bars outside trading sessions");
    }
    Ok((
        BarSeries::from_bars_unchecked(bars, calendar.clone()),
        report,
    ))
}

/// Writes a `timestamp,close` CSV that [`load_bars`] reads back.
pub fn write_bars_csv<W: Write>(series: &BarSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "close"])?;
    for b in series.bars() {
        w.write_record([
            b.timestamp.format(TIMESTAMP_OUT).to_string(),
            format!("{:?}", b.close),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<(BarSeries, LoadReport)> {
        load_bars(text.as_bytes(), &SessionCalendar::default())
    }

    #[test]
    fn empty_body() {
        let (s, r) = load("timestamp,close\n").unwrap();
        assert!(s.is_empty());
        assert_eq!(r.rejected_outside_session, 0);
        let (s, _) = load("").unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn single_morning_bar() {
        let (s, r) = load("timestamp,close\n2021-01-04T09:31:00,5000\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.bars()[0].session, 0);
        assert_eq!(s.bars()[0].close, 5000.0);
        assert_eq!(r.accepted, 1);
    }

    #[test]
    fn lunch_break_rejected() {
        let (s, r) =
            load("timestamp,close\n2021-01-04 09:31:00,5000\n2021-01-04 12:00:00,5001\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(r.rejected_outside_session, 1);
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = load("timestamp,close\n2021-01-04T09:31:00,5000\n2021-01-04T09:32:00,abc\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = load("timestamp,close\nyesterday,5000\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(
            load("time,price\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn ordering_error() {
        let err =
            load("timestamp,close\n2021-01-04T09:32:00,1\n2021-01-04T09:31:00,1\n").unwrap_err();
        assert!(matches!(err, Error::Ordering { line: 3, .. }));
        let err =
            load("timestamp,close\n2021-01-04T09:32:00,1\n2021-01-04T09:32:00,1\n").unwrap_err();
        assert!(matches!(err, Error::Ordering { .. }));
    }

    #[test]
    fn csv_round_trip() {
        let text = "timestamp,close\n2021-01-04T09:31:00,5000.25\n2021-01-04T13:01:00,5001.5\n";
        let (s, _) = load(text).unwrap();
        let mut out = Vec::new();
        write_bars_csv(&s, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}

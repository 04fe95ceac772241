//! Minute-bar market data: ingestion against a session calendar, cleaning,
//! resampling, percent returns, descriptive statistics and realized
//! volatility measures.

mod bars;
mod calendar;
mod preprocess;
mod realized;
mod resample;
mod returns;
mod stats;
pub mod synthetic;

pub use bars::{load_bars, write_bars_csv, Bar, BarSeries, LoadReport};
pub use calendar::{Session, SessionCalendar};
pub use preprocess::{preprocess, OutlierPolicy, PreprocessConfig, PreprocessReport};
pub use realized::{realized_measures, RvRow, RvSeries, RvWindow, BV_SCALE};
pub use resample::resample;
pub use returns::{pct_change, ReturnRow, ReturnSeries};
pub use stats::{descriptive_stats, summarize, GroupBy, StatsReport};

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Writes serializable rows as CSV with a header from the field names.
pub fn write_rows_csv<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the same rows as a pretty-printed JSON array.
pub fn write_rows_json<T: Serialize, W: Write>(rows: &[T], mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, rows)?;
    writer.write_all(b"\n")?;
    Ok(())
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bns_core::market::{ReturnRow, ReturnSeries};
use chrono::NaiveDateTime;
use serde::Serialize;

use crate::error::{CliError, CliResult};

const TIMESTAMP: &str = "%Y-%m-%dT%H:%M:%S";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_text(path, &text)
}

/// Output directory: the flag, else `$BNS_OUTPUT_ROOT/<command>`, else
/// `bns-out/<command>`.
pub fn output_dir(flag: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    let root =
        std::env::var_os("BNS_OUTPUT_ROOT").map_or_else(|| PathBuf::from("bns-out"), PathBuf::from);
    root.join(command)
}

/// Writes `index,timestamp,session,pct_change`.
pub fn write_returns(path: &Path, returns: &ReturnSeries) -> CliResult<()> {
    let mut w = create(path)?;
    let mut body = String::from("index,timestamp,session,pct_change\n");
    for (i, r) in returns.rows.iter().enumerate() {
        body.push_str(&format!(
            "{i},{},{},{:?}\n",
            r.timestamp.format(TIMESTAMP),
            r.session,
            r.pct_change
        ));
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Reads the file written by [`write_returns`].
pub fn read_returns(path: &Path) -> CliResult<ReturnSeries> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let bad = |line: usize, what: &str| {
        CliError::Config(format!("{}:{line}: bad {what}", path.display()))
    };
    let header = r.headers().map_err(|_| bad(1, "header"))?.clone();
    if header.iter().collect::<Vec<_>>() != ["index", "timestamp", "session", "pct_change"] {
        return Err(bad(
            1,
            "header; expected index,timestamp,session,pct_change",
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|_| bad(line, "row"))?;
        if rec[0].parse::<usize>().ok() != Some(i) {
            return Err(bad(line, "index; expected consecutive indices from 0"));
        }
        let timestamp = NaiveDateTime::parse_from_str(&rec[1], TIMESTAMP)
            .map_err(|_| bad(line, "timestamp"))?;
        let session = rec[2].parse().map_err(|_| bad(line, "session"))?;
        let pct_change = rec[3].parse().map_err(|_| bad(line, "pct_change"))?;
        rows.push(ReturnRow {
            timestamp,
            session,
            pct_change,
        });
    }
    Ok(ReturnSeries { rows })
}

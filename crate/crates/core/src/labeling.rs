//! Jump labeling: index the return series, mark big moves against a
//! threshold `K`, and turn windows of consecutive returns into rows with a
//! binary `θ` target that says whether enough big jumps follow.
//!
//! Windows and their look-ahead horizons stay inside one session. Anchors
//! whose window or horizon would cross a session boundary are dropped.

use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::{ReturnRow, ReturnSeries};

/// Which moves count as big.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `pct_change ≤ −K`: the close is at least `K` percent below the previous one.
    #[default]
    Down,
    /// `pct_change ≥ K`.
    Up,
    /// `|pct_change| ≥ K`.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelingConfig {
    /// Returns per feature row.
    pub window_len: usize,
    /// Returns after the anchor searched for big jumps.
    pub lookahead: usize,
    /// Threshold in percent units, like the returns.
    pub k: f64,
    /// Big jumps in the horizon needed for `θ = 1`.
    pub min_jumps: usize,
    pub direction: Direction,
    /// `true` marks moves that reach `K` exactly; `false` requires moves beyond it.
    pub inclusive: bool,
    /// Distance between consecutive anchors of one session.
    pub stride: usize,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            window_len: 10,
            lookahead: 10,
            k: 0.1,
            min_jumps: 2,
            direction: Direction::Down,
            inclusive: true,
            stride: 1,
        }
    }
}

impl LabelingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.lookahead == 0 || self.min_jumps == 0 || self.stride == 0 {
            return Err(invalid(
                "window_len, lookahead, min_jumps and stride must be positive",
            ));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(invalid(format!("K must be > 0, got {}", self.k)));
        }
        Ok(())
    }
}

/// One return with its position in the chronological index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexedReturn {
    pub index: usize,
    pub row: ReturnRow,
}

/// Returns carrying a dense index `0..n−1` in chronological order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexedReturns {
    rows: Vec<IndexedReturn>,
}

impl IndexedReturns {
    pub fn rows(&self) -> &[IndexedReturn] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.row.pct_change).collect()
    }

    /// First index stamped at or after `t`.
    pub fn index_at_or_after(&self, t: NaiveDateTime) -> Option<usize> {
        let i = self.rows.partition_point(|r| r.row.timestamp < t);
        self.rows.get(i).map(|r| r.index)
    }

    /// Last index stamped at or before `t`.
    pub fn index_at_or_before(&self, t: NaiveDateTime) -> Option<usize> {
        let i = self.rows.partition_point(|r| r.row.timestamp <= t);
        i.checked_sub(1).map(|i| self.rows[i].index)
    }

    /// Half-open `[start, end)` index ranges of each `(day, session)` run.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.rows.len() {
            if i == self.rows.len() || self.rows[i].row.segment() != self.rows[start].row.segment()
            {
                if i > start {
                    out.push((start, i));
                }
                start = i;
            }
        }
        out
    }
}

/// Attaches the chronological index. Input rows must already be sorted.
pub fn index_series(returns: &ReturnSeries) -> IndexedReturns {
    IndexedReturns {
        rows: returns
            .rows
            .iter()
            .enumerate()
            .map(|(index, &row)| IndexedReturn { index, row })
            .collect(),
    }
}

/// Big-jump flag per return.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JumpMarks(pub Vec<bool>);

impl JumpMarks {
    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&m| m).count()
    }
}

/// Flags every return whose move in `cfg.direction` reaches `cfg.k`.
pub fn mark_big_jumps(returns: &[f64], cfg: &LabelingConfig) -> JumpMarks {
    let reaches = |x: f64| if cfg.inclusive { x >= cfg.k } else { x > cfg.k };
    JumpMarks(
        returns
            .iter()
            .map(|&r| match cfg.direction {
                Direction::Down => reaches(-r),
                Direction::Up => reaches(r),
                Direction::Both => reaches(r.abs()),
            })
            .collect(),
    )
}

/// One training row: the window ending at `index` and its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub index: usize,
    pub features: Vec<f64>,
    pub theta: u8,
}

/// Feature matrix of consecutive-return windows plus the `θ` column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub window_len: usize,
    /// Length of the indexed series the rows were cut from.
    pub n_indexed: usize,
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.theta).collect()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.theta == 1).count()
    }

    /// Writes `index,f1..fW,theta`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["index".to_string()];
        header.extend((1..=self.window_len).map(|i| format!("f{i}")));
        header.push("theta".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.index.to_string()];
            rec.extend(row.features.iter().map(|f| format!("{f:?}")));
            rec.push(row.theta.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). The indexed
    /// length is not stored in the file; it is taken as one past the last
    /// row index.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let width = header.len().saturating_sub(2);
        let well_formed = header.get(0) == Some("index")
            && header.get(header.len().wrapping_sub(1)) == Some("theta")
            && (1..=width).all(|i| header.get(i) == Some(format!("f{i}").as_str()));
        if width == 0 || !well_formed {
            return Err(Error::Parse {
                line: 1,
                message: "expected header index,f1..fN,theta".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let bad = |what: &str| Error::Parse {
                line,
                message: format!("bad {what}"),
            };
            let index = rec[0].parse().map_err(|_| bad("index"))?;
            let features = (1..=width)
                .map(|j| rec[j].parse::<f64>().map_err(|_| bad("feature")))
                .collect::<Result<Vec<_>>>()?;
            let theta = match &rec[width + 1] {
                "0" => 0,
                "1" => 1,
                _ => return Err(bad("theta")),
            };
            rows.push(LabeledRow {
                index,
                features,
                theta,
            });
        }
        if rows.windows(2).any(|w| w[1].index <= w[0].index) {
            return Err(Error::Ordering {
                line: 0,
                message: "row indices must increase".into(),
            });
        }
        let n_indexed = rows.last().map_or(0, |r: &LabeledRow| r.index + 1);
        Ok(Self {
            window_len: width,
            n_indexed,
            rows,
        })
    }
}

/// Cuts one row per valid anchor `i`: features are `returns[i−W+1 ..= i]`
/// and `θ = 1` when at least `min_jumps` marks fall in `(i, i+lookahead]`.
/// Window and horizon must lie inside the anchor's session.
pub fn build_dataset(
    returns: &IndexedReturns,
    marks: &JumpMarks,
    cfg: &LabelingConfig,
) -> Result<LabeledDataset> {
    cfg.validate()?;
    if marks.0.len() != returns.len() {
        return Err(Error::LengthMismatch {
            left: returns.len(),
            right: marks.0.len(),
        });
    }
    let values = returns.values();
    // prefix[i] = marks before position i
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0usize);
    for &m in &marks.0 {
        prefix.push(prefix.last().unwrap() + usize::from(m));
    }
    let (w, h) = (cfg.window_len, cfg.lookahead);
    let mut rows = Vec::new();
    for (start, end) in returns.segments() {
        let first = start + w - 1;
        let mut i = first;
        while i + h < end {
            let jumps = prefix[i + h + 1] - prefix[i + 1];
            rows.push(LabeledRow {
                index: returns.rows()[i].index,
                features: values[i + 1 - w..=i].to_vec(),
                theta: u8::from(jumps >= cfg.min_jumps),
            });
            i += cfg.stride;
        }
    }
    if rows.is_empty() {
        log::warn!(
            "no anchor fits a window of {w} plus a horizon of {h} inside one session; dataset is empty"
        );
    }
    Ok(LabeledDataset {
        window_len: w,
        n_indexed: returns.len(),
        rows,
    })
}

/// Closed index interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidSplit(format!(
                "range {start}:{end} is reversed"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&i)
    }
}

impl std::str::FromStr for IndexRange {
    type Err = Error;

    /// Parses `a:b`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSplit(format!("expected a:b, got `{s}`")))?;
        let num = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidSplit(format!("bad index `{x}`")))
        };
        Self::new(num(a)?, num(b)?)
    }
}

impl std::fmt::Display for IndexRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// Train and test index ranges, both inclusive. Train comes first and the
/// two do not overlap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub train: IndexRange,
    pub test: IndexRange,
}

impl SplitSpec {
    pub fn new(name: impl Into<String>, train: IndexRange, test: IndexRange) -> Result<Self> {
        if train.end >= test.start {
            return Err(Error::InvalidSplit(format!(
                "train {train} must end before test {test} starts"
            )));
        }
        Ok(Self {
            name: name.into(),
            train,
            test,
        })
    }

    /// Resolves timestamp bounds through the index: each start maps to the
    /// first return at or after it, each end to the last return at or
    /// before it.
    pub fn from_times(
        name: impl Into<String>,
        indexed: &IndexedReturns,
        train: (NaiveDateTime, NaiveDateTime),
        test: (NaiveDateTime, NaiveDateTime),
    ) -> Result<Self> {
        let missing = |t: NaiveDateTime| Error::InvalidSplit(format!("no return near {t}"));
        let start = |t| indexed.index_at_or_after(t).ok_or_else(|| missing(t));
        let end = |t| indexed.index_at_or_before(t).ok_or_else(|| missing(t));
        Self::new(
            name,
            IndexRange::new(start(train.0)?, end(train.1)?)?,
            IndexRange::new(start(test.0)?, end(test.1)?)?,
        )
    }
}

/// Train and test partitions of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Partitions rows by the inclusive index ranges of `spec`.
pub fn split(dataset: &LabeledDataset, spec: &SplitSpec) -> Result<SplitData> {
    SplitSpec::new(spec.name.clone(), spec.train, spec.test)?;
    let bound = dataset.n_indexed;
    for r in [spec.train, spec.test] {
        if r.end >= bound {
            return Err(Error::InvalidSplit(format!(
                "range {r} exceeds the indexed series (0:{})",
                bound.saturating_sub(1)
            )));
        }
    }
    let take = |range: IndexRange| LabeledDataset {
        window_len: dataset.window_len,
        n_indexed: dataset.n_indexed,
        rows: dataset
            .rows
            .iter()
            .filter(|r| range.contains(r.index))
            .cloned()
            .collect(),
    };
    let out = SplitData {
        train: take(spec.train),
        test: take(spec.test),
    };
    log::info!(
        "split {}: {} train rows, {} test rows",
        spec.name,
        out.train.len(),
        out.test.len()
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};

    fn series(values: &[f64]) -> IndexedReturns {
        let t0 = NaiveDate::from_ymd_opt(2021, 1, 4)
            .unwrap()
            .and_hms_opt(9, 41, 0)
            .unwrap();
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &v)| ReturnRow {
                timestamp: t0 + Duration::minutes(i as i64),
                session: 0,
                pct_change: v,
            })
            .collect();
        index_series(&ReturnSeries { rows })
    }

    fn cfg() -> LabelingConfig {
        LabelingConfig::default()
    }

    #[test]
    fn indexing() {
        assert!(index_series(&ReturnSeries::default()).is_empty());
        let s = series(&[0.1, 0.2, 0.3]);
        assert_eq!(
            s.rows().iter().map(|r| r.index).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn marking_rules() {
        let m = mark_big_jumps(&[-0.05, -0.10, -0.15], &cfg());
        assert_eq!(m.0, vec![false, true, true]);
        let strict = LabelingConfig {
            inclusive: false,
            ..cfg()
        };
        assert_eq!(
            mark_big_jumps(&[-0.05, -0.10, -0.15], &strict).0,
            vec![false, false, true]
        );
        assert_eq!(mark_big_jumps(&[0.2, 0.5, 1.0], &cfg()).count(), 0);
        let both = LabelingConfig {
            direction: Direction::Both,
            ..cfg()
        };
        assert_eq!(mark_big_jumps(&[0.2, -0.2], &both).0, vec![true, true]);
        let up = LabelingConfig {
            direction: Direction::Up,
            ..cfg()
        };
        assert_eq!(mark_big_jumps(&[0.2, -0.2], &up).0, vec![true, false]);
    }

    #[test]
    fn no_marks_no_positives() {
        let s = series(&[0.01; 40]);
        let m = mark_big_jumps(&s.values(), &cfg());
        let d = build_dataset(&s, &m, &cfg()).unwrap();
        assert_eq!(d.len(), 40 - 19);
        assert_eq!(d.positives(), 0);
    }

    #[test]
    fn thirty_return_session() {
        let mut v = vec![0.0; 30];
        v[12] = -0.2;
        v[15] = -0.3;
        let s = series(&v);
        let d = build_dataset(&s, &mark_big_jumps(&v, &cfg()), &cfg()).unwrap();
        let theta = |i: usize| d.rows.iter().find(|r| r.index == i).unwrap().theta;
        assert_eq!(theta(10), 1);
        assert_eq!(theta(16), 0);
        // anchors 9..=19
        assert_eq!(d.rows.first().unwrap().index, 9);
        assert_eq!(d.rows.last().unwrap().index, 19);
        assert_eq!(d.rows[1].features, v[1..=10].to_vec());
    }

    #[test]
    fn single_mark_with_min_one() {
        let mut v = vec![0.0; 20];
        v[5] = -0.5;
        let c = LabelingConfig {
            window_len: 5,
            min_jumps: 1,
            ..cfg()
        };
        let s = series(&v);
        let d = build_dataset(&s, &mark_big_jumps(&v, &c), &c).unwrap();
        assert_eq!(d.rows[0].index, 4);
        assert_eq!(d.rows[0].theta, 1);
        assert_eq!(d.rows[1].theta, 0);
    }

    #[test]
    fn short_series_is_empty() {
        let s = series(&[0.0; 19]);
        let d = build_dataset(&s, &mark_big_jumps(&s.values(), &cfg()), &cfg()).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn windows_stay_in_session() {
        let mut s = series(&[0.0; 50]);
        for r in &mut s.rows[25..] {
            r.row.session = 1;
        }
        let d = build_dataset(&s, &mark_big_jumps(&s.values(), &cfg()), &cfg()).unwrap();
        // 25 returns per session leave anchors 9..=14 and 34..=39.
        let idx: Vec<usize> = d.rows.iter().map(|r| r.index).collect();
        assert_eq!(idx, (9..=14).chain(34..=39).collect::<Vec<_>>());
    }

    #[test]
    fn stride_skips_anchors() {
        let s = series(&[0.0; 40]);
        let c = LabelingConfig { stride: 5, ..cfg() };
        let d = build_dataset(&s, &mark_big_jumps(&s.values(), &c), &c).unwrap();
        assert_eq!(
            d.rows.iter().map(|r| r.index).collect::<Vec<_>>(),
            vec![9, 14, 19, 24, 29]
        );
    }

    fn hundred_rows() -> LabeledDataset {
        LabeledDataset {
            window_len: 1,
            n_indexed: 100,
            rows: (0..100)
                .map(|i| LabeledRow {
                    index: i,
                    features: vec![i as f64],
                    theta: (i % 2) as u8,
                })
                .collect(),
        }
    }

    #[test]
    fn split_counts() {
        let d = hundred_rows();
        let spec = SplitSpec::new(
            "s",
            IndexRange::new(0, 79).unwrap(),
            IndexRange::new(80, 99).unwrap(),
        )
        .unwrap();
        let parts = split(&d, &spec).unwrap();
        assert_eq!((parts.train.len(), parts.test.len()), (80, 20));
    }

    #[test]
    fn split_with_empty_test() {
        let mut d = hundred_rows();
        d.n_indexed = 120;
        let spec = SplitSpec::new(
            "s",
            IndexRange::new(0, 99).unwrap(),
            IndexRange::new(100, 119).unwrap(),
        )
        .unwrap();
        let parts = split(&d, &spec).unwrap();
        assert_eq!((parts.train.len(), parts.test.len()), (100, 0));
    }

    #[test]
    fn split_errors() {
        let d = hundred_rows();
        assert!(SplitSpec::new(
            "o",
            IndexRange::new(0, 50).unwrap(),
            IndexRange::new(50, 99).unwrap()
        )
        .is_err());
        let oob = SplitSpec {
            name: "x".into(),
            train: IndexRange::new(0, 10).unwrap(),
            test: IndexRange::new(20, 100).unwrap(),
        };
        assert!(matches!(split(&d, &oob), Err(Error::InvalidSplit(_))));
        assert!("5:3".parse::<IndexRange>().is_err());
        assert_eq!(
            "0:1315".parse::<IndexRange>().unwrap(),
            IndexRange {
                start: 0,
                end: 1315
            }
        );
    }

    #[test]
    fn split_from_times() {
        let s = series(&[0.0; 30]);
        let t = |m: i64| s.rows()[0].row.timestamp + Duration::minutes(m);
        let spec = SplitSpec::from_times("t", &s, (t(0), t(19)), (t(20), t(100))).unwrap();
        assert_eq!(spec.train, IndexRange { start: 0, end: 19 });
        assert_eq!(spec.test, IndexRange { start: 20, end: 29 });
    }

    #[test]
    fn dataset_csv_round_trip() {
        let mut v = vec![0.0; 30];
        v[12] = -0.2;
        v[15] = -0.3;
        let s = series(&v);
        let d = build_dataset(&s, &mark_big_jumps(&v, &cfg()), &cfg()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,theta\n"));
        let back = LabeledDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows, d.rows);
        assert_eq!(back.window_len, 10);
    }
}

//! Run configuration: one TOML document with a section per stage. Flags
//! override file values, and the effective result is written to
//! `config.toml` in the output directory.

use std::path::{Path, PathBuf};

use bns_core::bns::ModelParams;
use bns_core::classifiers::{AlgorithmId, HyperparamBank};
use bns_core::labeling::{IndexRange, IndexedReturns, LabelingConfig, SplitSpec};
use bns_core::market::synthetic::SyntheticConfig;
use bns_core::market::{PreprocessConfig, SessionCalendar};
use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{stage, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub input: InputConfig,
    pub calendar: CalendarConfig,
    pub model: ModelParams,
    pub simulate: SimulateConfig,
    pub synthetic: SyntheticConfig,
    pub preprocess: PreprocessConfig,
    pub resample: ResampleConfig,
    pub labeling: LabelingConfig,
    pub splits: Vec<SplitEntry>,
    pub classifiers: ClassifierConfig,
    pub hyperparams: HyperparamBank,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2021,
            input: InputConfig::default(),
            calendar: CalendarConfig::default(),
            model: ModelParams::default(),
            simulate: SimulateConfig::default(),
            synthetic: SyntheticConfig::default(),
            preprocess: PreprocessConfig::default(),
            resample: ResampleConfig::default(),
            labeling: LabelingConfig::default(),
            splits: Vec::new(),
            classifiers: ClassifierConfig::default(),
            hyperparams: HyperparamBank::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// `timestamp,close` minute bars.
    pub bars: Option<PathBuf>,
    /// Labeled dataset written by `label`.
    pub dataset: Option<PathBuf>,
    /// Indexed returns written by `label`; needed to resolve date splits.
    pub returns: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalendarConfig {
    pub timezone: String,
    /// `HH:MM-HH:MM` each.
    pub sessions: Vec<String>,
}

impl Default for CalendarConfig {
    fn default() -> Self {
        Self::from_calendar(&SessionCalendar::default())
    }
}

impl CalendarConfig {
    pub fn from_calendar(c: &SessionCalendar) -> Self {
        Self {
            timezone: c.timezone().to_string(),
            sessions: c
                .sessions()
                .iter()
                .map(|s| format!("{}-{}", s.open.format("%H:%M"), s.close.format("%H:%M")))
                .collect(),
        }
    }

    pub fn to_calendar(&self) -> CliResult<SessionCalendar> {
        let mut text = format!("timezone = {}\n", self.timezone);
        for s in &self.sessions {
            text.push_str(&format!("session = {s}\n"));
        }
        SessionCalendar::parse(&text).map_err(|e| CliError::Config(format!("calendar: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_paths: usize,
    pub horizon: f64,
    pub n_steps: usize,
    /// Standard deviation of Gaussian microstructure noise; 0 disables it.
    pub noise_std: f64,
    pub drift: bool,
    pub diffusion: bool,
    pub s0: f64,
    /// Path CSVs to write; all when absent.
    pub path_files: Option<usize>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n_paths: 1,
            horizon: 1.0,
            n_steps: 390,
            noise_std: 0.0,
            drift: true,
            diffusion: true,
            s0: 1.0,
            path_files: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleConfig {
    pub interval_minutes: i64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            interval_minutes: 1,
        }
    }
}

/// A split bound: `"a:b"` index range or a `[from, to]` timestamp pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Index(String),
    Dates([String; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitEntry {
    pub name: String,
    pub train: RangeSpec,
    pub test: RangeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalEntry {
    pub name: String,
    /// `index,predicted_theta` CSV.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub algorithms: Vec<AlgorithmId>,
    pub external: Vec<ExternalEntry>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            algorithms: AlgorithmId::ALL.to_vec(),
            external: Vec::new(),
        }
    }
}

/// Splits file: a TOML document of `[[splits]]` tables.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitsFile {
    splits: Vec<SplitEntry>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }
}

pub fn load_splits_file(path: &Path) -> CliResult<Vec<SplitEntry>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    let f: SplitsFile =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(f.splits)
}

const DATE_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

fn parse_time(s: &str) -> CliResult<NaiveDateTime> {
    let s = s.trim();
    if let Some(t) = DATE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
    {
        return Ok(t);
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight"))
        .map_err(|_| CliError::Config(format!("bad timestamp `{s}`")))
}

fn resolve_range(spec: &RangeSpec, indexed: Option<&IndexedReturns>) -> CliResult<IndexRange> {
    match spec {
        RangeSpec::Index(text) => stage("split", text.parse()),
        RangeSpec::Dates([from, to]) => {
            let idx = indexed.ok_or_else(|| {
                CliError::Config("date splits need the indexed returns (input.returns)".into())
            })?;
            let (from, to) = (parse_time(from)?, parse_time(to)?);
            // a bare end date covers that whole day
            let to = if to.time() == chrono::NaiveTime::MIN {
                to + chrono::Duration::days(1) - chrono::Duration::seconds(1)
            } else {
                to
            };
            let start = idx.index_at_or_after(from);
            let end = idx.index_at_or_before(to);
            match (start, end) {
                (Some(a), Some(b)) => stage("split", IndexRange::new(a, b)),
                _ => Err(CliError::Config(format!(
                    "no returns between {from} and {to}"
                ))),
            }
        }
    }
}

impl SplitEntry {
    pub fn resolve(&self, indexed: Option<&IndexedReturns>) -> CliResult<SplitSpec> {
        let train = resolve_range(&self.train, indexed)?;
        let test = resolve_range(&self.test, indexed)?;
        stage("split", SplitSpec::new(self.name.clone(), train, test))
    }

    pub fn from_spec(spec: &SplitSpec) -> Self {
        Self {
            name: spec.name.clone(),
            train: RangeSpec::Index(spec.train.to_string()),
            test: RangeSpec::Index(spec.test.to_string()),
        }
    }
}

mod config;
mod error;
mod io;
mod learn;
mod market;
mod pipeline;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bns_core::classifiers::AlgorithmId;
use bns_core::labeling::{Direction, IndexRange};
use bns_core::market::SessionCalendar;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{CalendarConfig, ExternalEntry, RangeSpec, RunConfig, SplitEntry};
use crate::error::{CliError, CliResult};

/// Generalized BN-S simulation and minute-bar jump prediction.
#[derive(Debug, Parser)]
#[command(name = "bns", version)]
struct Cli {
    /// Log progress at info level (twice for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate model paths and a moment summary.
    Simulate(SimulateArgs),
    /// Generate a synthetic minute-bar CSV.
    SynthBars(CommonArgs),
    /// Load and clean minute bars.
    Ingest(DataArgs),
    /// Descriptive statistics and realized measures.
    Stats(DataArgs),
    /// Build the labeled dataset from minute bars.
    Label(LabelArgs),
    /// Fit classifiers on each split and save the models.
    Train(LearnArgs),
    /// Evaluate classifiers on each split.
    Report(LearnArgs),
    /// Run every stage from raw bars to the report.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $BNS_OUTPUT_ROOT/<command> or bns-out/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// Number of per-path CSV files to write.
    #[arg(long)]
    path_files: Option<usize>,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// `timestamp,close` minute-bar CSV.
    #[arg(long)]
    bars: Option<PathBuf>,
    /// Calendar file: `timezone = ...` and one `session = HH:MM-HH:MM` per line.
    #[arg(long)]
    calendar: Option<PathBuf>,
    #[arg(long)]
    interval_minutes: Option<i64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Down,
    Up,
    Both,
}

#[derive(Debug, Args)]
struct LabelingArgs {
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    min_jumps: Option<usize>,
    #[arg(long)]
    window_len: Option<usize>,
    #[arg(long)]
    lookahead: Option<usize>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    labeling: LabelingArgs,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// TOML file of `[[splits]]` tables.
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Training index range `a:b`; replaces configured splits.
    #[arg(long, requires = "test")]
    train: Option<String>,
    /// Test index range `c:d`.
    #[arg(long, requires = "train")]
    test: Option<String>,
    /// Comma-separated algorithm names or letters A-I.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<AlgorithmId>>,
    /// Hyperparameter override `algorithm.key=value`; repeatable.
    #[arg(long = "hp")]
    hyperparams: Vec<String>,
    /// External predictions `name=path`; repeatable.
    #[arg(long)]
    external: Vec<String>,
}

#[derive(Debug, Args)]
struct LearnArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Labeled dataset CSV from `label`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Returns CSV from `label`; resolves date splits.
    #[arg(long)]
    returns: Option<PathBuf>,
    #[command(flatten)]
    split: SplitArgs,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    labeling: LabelingArgs,
    #[command(flatten)]
    split: SplitArgs,
}

impl CommonArgs {
    fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

impl SimulateArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.simulate;
        set(&mut s.n_paths, self.n_paths);
        set(&mut s.n_steps, self.n_steps);
        set(&mut s.horizon, self.horizon);
        set(&mut s.noise_std, self.noise_std);
        if self.path_files.is_some() {
            s.path_files = self.path_files;
        }
        set(&mut cfg.model.theta, self.theta);
    }
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(p) = &self.bars {
            cfg.input.bars = Some(p.clone());
        }
        if let Some(p) = &self.calendar {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            })?;
            let cal = SessionCalendar::parse(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            cfg.calendar = CalendarConfig::from_calendar(&cal);
        }
        set(&mut cfg.resample.interval_minutes, self.interval_minutes);
        Ok(())
    }
}

impl LabelingArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let l = &mut cfg.labeling;
        set(&mut l.k, self.k);
        set(&mut l.min_jumps, self.min_jumps);
        set(&mut l.window_len, self.window_len);
        set(&mut l.lookahead, self.lookahead);
        set(&mut l.stride, self.stride);
        if let Some(d) = self.direction {
            l.direction = match d {
                DirectionArg::Down => Direction::Down,
                DirectionArg::Up => Direction::Up,
                DirectionArg::Both => Direction::Both,
            };
        }
    }
}

impl SplitArgs {
    fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(p) = &self.splits {
            cfg.splits = config::load_splits_file(p)?;
        }
        if let (Some(train), Some(test)) = (&self.train, &self.test) {
            for r in [train, test] {
                r.parse::<IndexRange>()
                    .map_err(|e| CliError::Config(format!("`{r}`: {e}")))?;
            }
            cfg.splits = vec![SplitEntry {
                name: "T1".into(),
                train: RangeSpec::Index(train.clone()),
                test: RangeSpec::Index(test.clone()),
            }];
        }
        if let Some(a) = &self.algorithms {
            cfg.classifiers.algorithms = a.clone();
        }
        for text in &self.hyperparams {
            let bad = || CliError::Config(format!("--hp `{text}`: expected algorithm.key=value"));
            let (alg, rest) = text.split_once('.').ok_or_else(bad)?;
            let id: AlgorithmId = alg.parse().map_err(|_| bad())?;
            cfg.hyperparams
                .entry(id)
                .or_default()
                .set_assignment(rest)
                .map_err(|_| bad())?;
        }
        for text in &self.external {
            let (name, path) = text.split_once('=').ok_or_else(|| {
                CliError::Config(format!("--external `{text}`: expected name=path"))
            })?;
            cfg.classifiers.external.push(ExternalEntry {
                name: name.into(),
                path: path.into(),
            });
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Creates the output directory and writes the effective config into it.
fn prepare(cfg: &RunConfig, out: Option<&Path>, command: &str) -> CliResult<PathBuf> {
    let dir = io::output_dir(out, command);
    io::create_dir(&dir)?;
    io::write_text(&dir.join("config.toml"), &cfg.to_toml()?)?;
    log::info!("writing {command} outputs to {}", dir.display());
    Ok(dir)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => {
            let mut cfg = a.common.load()?;
            a.apply(&mut cfg);
            let out = prepare(&cfg, a.common.out.as_deref(), "simulate")?;
            simulate::run(&cfg, &out)
        }
        Command::SynthBars(a) => {
            let cfg = a.load()?;
            let out = prepare(&cfg, a.out.as_deref(), "synth-bars")?;
            market::run_synth(&cfg, &out)
        }
        Command::Ingest(a) => {
            let mut cfg = a.common.load()?;
            a.apply(&mut cfg)?;
            let out = prepare(&cfg, a.common.out.as_deref(), "ingest")?;
            market::run_ingest(&cfg, &out)
        }
        Command::Stats(a) => {
            let mut cfg = a.common.load()?;
            a.apply(&mut cfg)?;
            let out = prepare(&cfg, a.common.out.as_deref(), "stats")?;
            market::run_stats(&cfg, &out)
        }
        Command::Label(a) => {
            let mut cfg = a.data.common.load()?;
            a.data.apply(&mut cfg)?;
            a.labeling.apply(&mut cfg);
            let out = prepare(&cfg, a.data.common.out.as_deref(), "label")?;
            learn::run_label(&cfg, &out)
        }
        Command::Train(a) => {
            let cfg = learn_config(&a)?;
            let out = prepare(&cfg, a.common.out.as_deref(), "train")?;
            learn::run_train(&cfg, &out)
        }
        Command::Report(a) => {
            let cfg = learn_config(&a)?;
            let out = prepare(&cfg, a.common.out.as_deref(), "report")?;
            learn::run_report(&cfg, &out)
        }
        Command::Pipeline(a) => {
            let mut cfg = a.data.common.load()?;
            a.data.apply(&mut cfg)?;
            a.labeling.apply(&mut cfg);
            a.split.apply(&mut cfg)?;
            let out = prepare(&cfg, a.data.common.out.as_deref(), "pipeline")?;
            pipeline::run_checked(&cfg, &out)
        }
    }
}

fn learn_config(a: &LearnArgs) -> CliResult<RunConfig> {
    let mut cfg = a.common.load()?;
    if let Some(p) = &a.dataset {
        cfg.input.dataset = Some(p.clone());
    }
    if let Some(p) = &a.returns {
        cfg.input.returns = Some(p.clone());
    }
    a.split.apply(&mut cfg)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::from(error::exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

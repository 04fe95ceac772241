use std::path::Path;

use bns_core::bns::{
    self, apply_noise, noise_seed, path_seed, LogPriceOptions, NoiseSpec, PathTable,
};
use bns_core::levy::TimeGrid;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{stage, CliError, CliResult};
use crate::io;

#[derive(Debug, Serialize)]
struct PathSummary {
    index: usize,
    seed: u64,
    base_terminal: f64,
    strong_terminal: f64,
    driving_terminal: f64,
    driving_jumps: usize,
    floor_margin: f64,
    terminal_variance: f64,
    integrated_variance: f64,
    terminal_log_price: f64,
}

/// Sample moments of a driver's terminal value against `λT·E[Z_1]` and
/// `λT·Var[Z_1]`.
#[derive(Debug, Serialize)]
struct MomentCheck {
    theoretical_mean: f64,
    theoretical_variance: f64,
    sample_mean: f64,
    sample_variance: Option<f64>,
    /// `(sample_mean − theoretical_mean) / √(theoretical_variance / n)`.
    mean_z_score: Option<f64>,
}

#[derive(Debug, Serialize)]
struct FloorCheck {
    min_margin: f64,
    satisfied: bool,
}

#[derive(Debug, Serialize)]
struct JumpDriven {
    mean_driving_terminal: f64,
    mean_driving_jumps: f64,
    mean_terminal_variance: f64,
    mean_integrated_variance: f64,
    mean_terminal_log_price: f64,
    variance_terminal_log_price: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Summary {
    n_paths: usize,
    seed: u64,
    theta: f64,
    horizon: f64,
    n_steps: usize,
    base_driver: MomentCheck,
    strong_driver: MomentCheck,
    variance_floor: FloorCheck,
    jump_driven: JumpDriven,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> Option<f64> {
    (v.len() > 1).then(|| {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    })
}

fn moment_check(
    terminals: &[f64],
    spec: &bns_core::levy::SubordinatorSpec,
    scale: f64,
) -> MomentCheck {
    let m = spec.moments();
    let (mu, var) = (scale * m.mean, scale * m.variance);
    let sample_mean = mean(terminals);
    MomentCheck {
        theoretical_mean: mu,
        theoretical_variance: var,
        sample_mean,
        sample_variance: sample_var(terminals),
        mean_z_score: (var > 0.0)
            .then(|| (sample_mean - mu) / (var / terminals.len() as f64).sqrt()),
    }
}

/// Simulates `n_paths` paths. Path `i` depends only on `(seed, i)`; its
/// CSV goes to `paths/path_<i>.csv` and `summary.json` aggregates all.
pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let s = &cfg.simulate;
    stage("simulate", cfg.model.validate())?;
    if s.n_paths == 0 {
        return Err(CliError::Config("simulate.n_paths must be >= 1".into()));
    }
    let grid = stage("simulate", TimeGrid::over(s.horizon, s.n_steps))?;
    let opts = LogPriceOptions {
        drift: s.drift,
        diffusion: s.diffusion,
        s0: s.s0,
    };
    let noise = (s.noise_std != 0.0).then_some(NoiseSpec { std: s.noise_std });
    let n_files = s.path_files.unwrap_or(s.n_paths).min(s.n_paths);
    let paths_dir = out.join("paths");
    if n_files > 0 {
        io::create_dir(&paths_dir)?;
    }
    let summaries: Vec<PathSummary> = (0..s.n_paths)
        .into_par_iter()
        .map(|i| {
            let seed = path_seed(cfg.seed, i);
            let p = stage("simulate", bns::simulate(&cfg.model, &grid, seed, &opts))?;
            let price = match noise {
                Some(n) => stage("simulate", apply_noise(&p.log_price, &n, noise_seed(seed)))?,
                None => p.log_price.clone(),
            };
            if i < n_files {
                let table = stage("simulate", PathTable::from_paths(&p.variance, &price))?;
                let file = paths_dir.join(format!("path_{i:05}.csv"));
                stage("simulate", table.write_csv(io::create(&file)?))?;
            }
            let x = p.log_price.x_true();
            Ok(PathSummary {
                index: i,
                seed,
                base_terminal: p.z.terminal(),
                strong_terminal: p.zb.terminal(),
                driving_terminal: p.variance.driving().terminal(),
                driving_jumps: p.variance.driving().events().len(),
                floor_margin: p.variance.floor_margin(),
                terminal_variance: *p.variance.values().last().expect("non-empty grid"),
                integrated_variance: p.variance.integrated(grid.end()),
                terminal_log_price: x[x.len() - 1],
            })
        })
        .collect::<CliResult<_>>()?;

    let col = |f: fn(&PathSummary) -> f64| summaries.iter().map(f).collect::<Vec<f64>>();
    let scale = cfg.model.lambda * grid.horizon();
    let min_margin = col(|p| p.floor_margin)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let terminal_x = col(|p| p.terminal_log_price);
    let summary = Summary {
        n_paths: s.n_paths,
        seed: cfg.seed,
        theta: cfg.model.theta,
        horizon: grid.horizon(),
        n_steps: grid.n_steps(),
        base_driver: moment_check(&col(|p| p.base_terminal), &cfg.model.base, scale),
        strong_driver: moment_check(&col(|p| p.strong_terminal), &cfg.model.strong, scale),
        variance_floor: FloorCheck {
            min_margin,
            satisfied: min_margin >= -1e-12,
        },
        jump_driven: JumpDriven {
            mean_driving_terminal: mean(&col(|p| p.driving_terminal)),
            mean_driving_jumps: mean(&col(|p| p.driving_jumps as f64)),
            mean_terminal_variance: mean(&col(|p| p.terminal_variance)),
            mean_integrated_variance: mean(&col(|p| p.integrated_variance)),
            mean_terminal_log_price: mean(&terminal_x),
            variance_terminal_log_price: sample_var(&terminal_x),
        },
    };
    stage(
        "simulate",
        bns_core::market::write_rows_csv(&summaries, io::create(&out.join("path_summaries.csv"))?),
    )?;
    io::write_json(&out.join("summary.json"), &summary)?;
    log::info!("simulated {} paths into {}", s.n_paths, out.display());
    Ok(())
}

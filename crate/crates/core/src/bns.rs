//! Classical and generalized Barndorff-Nielsen–Shephard dynamics.
//!
//! The generalized model drives both the log price and the variance with a
//! convex combination of two independent subordinators, the base `Z` and the
//! higher-intensity `Z^(b)`:
//!
//! ```text
//! dX_t  = (μ + βσ²_t) dt + σ_t dW_t + ρ((1−θ) dZ_{λt} + θ dZ^(b)_{λt})
//! dσ²_t = −λσ²_t dt + (1−θ) dZ_{λt} + θ dZ^(b)_{λt}
//! ```
//!
//! With `θ = 0` this is the classical model. The variance is evaluated from
//! its exact solution
//! `σ²_t = e^{−λt}σ²_0 + ∫ e^{−λ(t−s)} ((1−θ)dZ_{λs} + θ dZ^(b)_{λs})`,
//! so it never drops below `e^{−λt}σ²_0`. The log price is stepped with a
//! left-point Euler–Maruyama scheme.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::levy::{self, combine_paths, JumpPath, SubordinatorSpec, TimeGrid};
use crate::rng::{self, stream};

/// Parameters of the generalized model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub mu: f64,
    pub beta: f64,
    /// Jump leverage, `ρ ≤ 0`.
    pub rho: f64,
    /// Mean-reversion speed and time-change rate, `λ > 0`.
    pub lambda: f64,
    /// Weight of the strong subordinator, `0 ≤ θ ≤ 1`.
    pub theta: f64,
    /// Initial variance `σ²_0 > 0`.
    pub sigma0_sq: f64,
    /// Base subordinator `Z`.
    pub base: SubordinatorSpec,
    /// Higher-intensity subordinator `Z^(b)`.
    pub strong: SubordinatorSpec,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            beta: 0.0,
            rho: -0.5,
            lambda: 1.0,
            theta: 0.5,
            sigma0_sq: 0.04,
            base: SubordinatorSpec {
                intensity: 1.0,
                jump_rate: 25.0,
            },
            strong: SubordinatorSpec {
                intensity: 4.0,
                jump_rate: 25.0,
            },
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("beta", self.beta), ("rho", self.rho)] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if self.rho > 0.0 {
            return Err(invalid(format!("rho must be <= 0, got {}", self.rho)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(invalid(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if !(self.sigma0_sq > 0.0 && self.sigma0_sq.is_finite()) {
            return Err(invalid(format!(
                "sigma0_sq must be > 0, got {}",
                self.sigma0_sq
            )));
        }
        self.base.validate()?;
        self.strong.validate()?;
        if self.strong.intensity < self.base.intensity {
            return Err(invalid(
                "strong subordinator must have intensity >= base intensity",
            ));
        }
        Ok(())
    }

    /// Same parameters with another mixing weight.
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    fn jump_weights(&self) -> (f64, f64) {
        (1.0 - self.theta, self.theta)
    }
}

/// Variance path `σ²_t` on a grid, with the combined driving subordinator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariancePath {
    grid: TimeGrid,
    values: Vec<f64>,
    floor: Vec<f64>,
    driving: JumpPath,
}

impl VariancePath {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The deterministic lower bound `e^{−λt}σ²_0` at each grid point.
    pub fn floor(&self) -> &[f64] {
        &self.floor
    }

    pub fn driving(&self) -> &JumpPath {
        &self.driving
    }

    /// `min_k (σ²_k − e^{−λt_k}σ²_0)`.
    pub fn floor_margin(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.floor)
            .map(|(v, f)| v - f)
            .fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal `∫_{t0}^{upto} σ²_τ dτ`, linearly interpolating inside the
    /// last partial step.
    pub fn integrated(&self, upto: f64) -> f64 {
        let t0 = self.grid.t0();
        let dt = self.grid.dt();
        if upto <= t0 {
            return 0.0;
        }
        let upto = upto.min(self.grid.end());
        let pos = (upto - t0) / dt;
        let full = (pos.floor() as usize).min(self.grid.n_steps());
        let mut acc = 0.0;
        for k in 0..full {
            acc += 0.5 * dt * (self.values[k] + self.values[k + 1]);
        }
        let rem = upto - self.grid.time(full);
        if rem > 0.0 && full < self.grid.n_steps() {
            let frac = rem / dt;
            let v_end = self.values[full] + frac * (self.values[full + 1] - self.values[full]);
            acc += 0.5 * rem * (self.values[full] + v_end);
        }
        acc
    }
}

fn check_grids(grid: &TimeGrid, paths: &[&JumpPath]) -> Result<()> {
    if paths.iter().all(|p| p.grid() == grid) {
        Ok(())
    } else {
        Err(Error::IncompatibleGrid)
    }
}

fn decay_floor(grid: &TimeGrid, lambda: f64, sigma0_sq: f64) -> Vec<f64> {
    grid.times()
        .map(|t| (-lambda * (t - grid.t0())).exp() * sigma0_sq)
        .collect()
}

/// Exact OU solution driven by `driving`: the decayed initial variance plus
/// every jump decayed from its own arrival time to each grid point.
fn exact_variance(grid: &TimeGrid, lambda: f64, floor: &[f64], driving: &JumpPath) -> Vec<f64> {
    let step_decay = (-lambda * grid.dt()).exp();
    let events = driving.events();
    let mut next = 0;
    let mut jump_part = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for (k, t) in grid.times().enumerate() {
        if k > 0 {
            jump_part *= step_decay;
        }
        while next < events.len() && events[next].time <= t {
            let e = events[next];
            jump_part += e.size * (-lambda * (t - e.time)).exp();
            next += 1;
        }
        values.push(floor[k] + jump_part);
    }
    values
}

/// Variance path of the generalized model from its exact solution.
pub fn simulate_variance_path(
    params: &ModelParams,
    z: &JumpPath,
    zb: &JumpPath,
) -> Result<VariancePath> {
    params.validate()?;
    let grid = *z.grid();
    check_grids(&grid, &[zb])?;
    let (w1, w2) = params.jump_weights();
    let driving = combine_paths(z, zb, w1, w2)?;
    let floor = decay_floor(&grid, params.lambda, params.sigma0_sq);
    let values = exact_variance(&grid, params.lambda, &floor, &driving);
    Ok(VariancePath {
        grid,
        values,
        floor,
        driving,
    })
}

/// Explicit Euler discretization of the variance SDE,
/// `v_{k+1} = v_k − λ v_k dt + (1−θ)ΔZ_k + θΔZ^(b)_k`. Kept as a reference
/// for convergence checks against the exact solution.
pub fn simulate_variance_euler(
    params: &ModelParams,
    z: &JumpPath,
    zb: &JumpPath,
) -> Result<Vec<f64>> {
    params.validate()?;
    let grid = *z.grid();
    check_grids(&grid, &[zb])?;
    let (w1, w2) = params.jump_weights();
    let dt = grid.dt();
    let mut v = params.sigma0_sq + w1 * z.cumulative()[0] + w2 * zb.cumulative()[0];
    let mut out = Vec::with_capacity(grid.len());
    out.push(v);
    for k in 0..grid.n_steps() {
        v += -params.lambda * v * dt + w1 * z.increment(k) + w2 * zb.increment(k);
        out.push(v);
    }
    Ok(out)
}

/// Which terms of the log-price SDE are active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogPriceOptions {
    pub drift: bool,
    pub diffusion: bool,
    /// Initial price `S_0`.
    pub s0: f64,
}

impl Default for LogPriceOptions {
    fn default() -> Self {
        Self {
            drift: true,
            diffusion: true,
            s0: 1.0,
        }
    }
}

/// Microstructure noise law. Only zero-mean Gaussian noise is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub std: f64,
}

/// True log price `X_t`, optionally with observed `X̄_t = X_t + ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogPricePath {
    grid: TimeGrid,
    s0: f64,
    x_true: Vec<f64>,
    x_observed: Option<Vec<f64>>,
    noise: Option<Vec<f64>>,
}

impl LogPricePath {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn x_true(&self) -> &[f64] {
        &self.x_true
    }

    pub fn x_observed(&self) -> Option<&[f64]> {
        self.x_observed.as_deref()
    }

    pub fn noise(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    /// Log price at the grid point nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let k = ((t - self.grid.t0()) / self.grid.dt()).round();
        let k = (k.max(0.0) as usize).min(self.grid.n_steps());
        self.x_true[k]
    }
}

fn euler_log_price(
    params: &ModelParams,
    grid: &TimeGrid,
    variance: &[f64],
    jump_increment: impl Fn(usize) -> f64,
    seed: u64,
    opts: &LogPriceOptions,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let mut x = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    out.push(x);
    for (k, &var) in variance.iter().enumerate().take(grid.n_steps()) {
        // Drawn unconditionally so toggling terms never shifts the stream.
        let n: f64 = StandardNormal.sample(&mut rng);
        if opts.drift {
            x += (params.mu + params.beta * var) * dt;
        }
        if opts.diffusion {
            x += var.sqrt() * sqrt_dt * n;
        }
        x += params.rho * jump_increment(k);
        if !x.is_finite() {
            return Err(Error::NumericOverflow { step: k + 1 });
        }
        out.push(x);
    }
    Ok(out)
}

fn check_s0(opts: &LogPriceOptions) -> Result<()> {
    if opts.s0 > 0.0 && opts.s0.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("s0 must be > 0, got {}", opts.s0)))
    }
}

/// Euler–Maruyama log price of the generalized model,
/// `X_{k+1} = X_k + (μ+βσ²_k)dt + σ_k√dt·N_k + ρ[(1−θ)ΔZ_k + θΔZ^(b)_k]`,
/// with `X_0 = 0` and Brownian draws from `seed`.
pub fn simulate_log_price(
    params: &ModelParams,
    var_path: &VariancePath,
    z: &JumpPath,
    zb: &JumpPath,
    seed: u64,
    opts: &LogPriceOptions,
) -> Result<LogPricePath> {
    params.validate()?;
    check_s0(opts)?;
    let grid = *var_path.grid();
    check_grids(&grid, &[z, zb])?;
    let (w1, w2) = params.jump_weights();
    let x_true = euler_log_price(
        params,
        &grid,
        var_path.values(),
        |k| w1 * z.increment(k) + w2 * zb.increment(k),
        seed,
        opts,
    )?;
    Ok(LogPricePath {
        grid,
        s0: opts.s0,
        x_true,
        x_observed: None,
        noise: None,
    })
}

/// The classical single-subordinator model, computed without reference to
/// `θ` or `Z^(b)`.
pub fn simulate_classical(
    params: &ModelParams,
    z: &JumpPath,
    seed: u64,
    opts: &LogPriceOptions,
) -> Result<(VariancePath, LogPricePath)> {
    params.validate()?;
    check_s0(opts)?;
    let grid = *z.grid();
    let floor = decay_floor(&grid, params.lambda, params.sigma0_sq);
    let values = exact_variance(&grid, params.lambda, &floor, z);
    let x_true = euler_log_price(params, &grid, &values, |k| z.increment(k), seed, opts)?;
    let var = VariancePath {
        grid,
        values,
        floor,
        driving: z.clone(),
    };
    let price = LogPricePath {
        grid,
        s0: opts.s0,
        x_true,
        x_observed: None,
        noise: None,
    };
    Ok((var, price))
}

/// Adds i.i.d. `N(0, std²)` noise drawn from `seed`, filling `noise` and
/// `x_observed`.
pub fn apply_noise(path: &LogPricePath, noise: &NoiseSpec, seed: u64) -> Result<LogPricePath> {
    if !(noise.std >= 0.0 && noise.std.is_finite()) {
        return Err(invalid(format!(
            "noise std must be >= 0, got {}",
            noise.std
        )));
    }
    let eps: Vec<f64> = if noise.std == 0.0 {
        vec![0.0; path.x_true.len()]
    } else {
        let law = Normal::new(0.0, noise.std).map_err(|e| invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..path.x_true.len())
            .map(|_| law.sample(&mut rng))
            .collect()
    };
    let observed = path.x_true.iter().zip(&eps).map(|(x, e)| x + e).collect();
    Ok(LogPricePath {
        x_observed: Some(observed),
        noise: Some(eps),
        ..path.clone()
    })
}

/// Price series `S_t = S_0 exp(X_t)`. With `use_observed`, the true price is
/// reconstructed from the observed log price as `S_0 exp(X̄_t − ε_t)`.
pub fn price_series(path: &LogPricePath, use_observed: bool) -> Result<Vec<f64>> {
    if !use_observed {
        return Ok(path.x_true.iter().map(|x| path.s0 * x.exp()).collect());
    }
    let observed = path
        .x_observed
        .as_ref()
        .ok_or(Error::MissingSeries("x_observed"))?;
    let noise = path.noise.as_ref().ok_or(Error::MissingSeries("noise"))?;
    Ok(observed
        .iter()
        .zip(noise)
        .map(|(x, e)| path.s0 * (x - e).exp())
        .collect())
}

/// Instantaneous variance rate of log returns,
/// `σ² + ρ²(1−θ)²λVar[Z_1] + ρ²θ²λVar[Z^(b)_1]`.
pub fn instantaneous_variance_rate(params: &ModelParams, sigma_sq: f64) -> f64 {
    sigma_sq + params.rho * params.rho * params.lambda * mixed_jump_variance(params)
}

/// `(1−θ)²Var[Z_1] + θ²Var[Z^(b)_1]`.
fn mixed_jump_variance(params: &ModelParams) -> f64 {
    let (w1, w2) = params.jump_weights();
    w1 * w1 * params.base.moments().variance + w2 * w2 * params.strong.moments().variance
}

fn check_lags(grid: &TimeGrid, t: f64, s: f64) -> Result<()> {
    let t0 = grid.t0();
    if !(s > t0 && s < t && t <= grid.end()) {
        return Err(Error::Domain(format!(
            "need {t0} < s < t <= {}, got s = {s}, t = {t}",
            grid.end()
        )));
    }
    Ok(())
}

/// Corr(X_t, X_s) of the classical model for `s < t`:
///
/// ```text
///            ∫_0^s σ² dτ + ρ² J(s)
/// ───────────────────────────────────────────────────────
/// √((∫_0^t σ² dτ + tρ²λVar Z_1)(∫_0^s σ² dτ + sρ²λVar Z_1))
/// ```
///
/// The integrals are taken along `var_path`; `J(s)` is the realized jump
/// quadratic variation `Σ_{τ≤s} y²` of `z`, whose expectation is
/// `sλVar[Z_1]`. `θ` is ignored.
pub fn correlation_classical(
    var_path: &VariancePath,
    z: &JumpPath,
    params: &ModelParams,
    t: f64,
    s: f64,
) -> Result<f64> {
    let grid = var_path.grid();
    check_lags(grid, t, s)?;
    let rho_sq = params.rho * params.rho;
    let var_z = params.base.moments().variance;
    let (int_t, int_s) = (var_path.integrated(t), var_path.integrated(s));
    let (et, es) = (t - grid.t0(), s - grid.t0());
    let num = int_s + rho_sq * z.squared_sum_upto(s);
    let den = ((int_t + et * rho_sq * params.lambda * var_z)
        * (int_s + es * rho_sq * params.lambda * var_z))
        .sqrt();
    Ok(num / den)
}

/// Corr(X_t, X_s) of the generalized model for `s < t`:
/// `(∫_0^s σ² + ρ²(1−θ)²J(s) + ρ²θ²J^(b)(s)) / √(α(t)α(s))` with
/// `α(ν) = ∫_0^ν σ² dτ + νρ²λ((1−θ)²Var Z_1 + θ²Var Z^(b)_1)`.
pub fn correlation_generalized(
    var_path: &VariancePath,
    z: &JumpPath,
    zb: &JumpPath,
    params: &ModelParams,
    t: f64,
    s: f64,
) -> Result<f64> {
    let grid = var_path.grid();
    check_lags(grid, t, s)?;
    let rho_sq = params.rho * params.rho;
    let (w1, w2) = params.jump_weights();
    let mixed = mixed_jump_variance(params);
    let alpha = |nu: f64, integral: f64| integral + nu * rho_sq * params.lambda * mixed;
    let int_s = var_path.integrated(s);
    let num = int_s
        + rho_sq * w1 * w1 * z.squared_sum_upto(s)
        + rho_sq * w2 * w2 * zb.squared_sum_upto(s);
    let den = (alpha(t - grid.t0(), var_path.integrated(t)) * alpha(s - grid.t0(), int_s)).sqrt();
    Ok(num / den)
}

/// Everything produced by one simulated path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedPath {
    pub z: JumpPath,
    pub zb: JumpPath,
    pub variance: VariancePath,
    pub log_price: LogPricePath,
}

/// Draws both subordinators, the variance and the log price for one seed.
/// Each driver has its own stream derived from `seed`.
pub fn simulate(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
    opts: &LogPriceOptions,
) -> Result<SimulatedPath> {
    params.validate()?;
    let (z, zb) = sample_drivers(params, grid, seed)?;
    let variance = simulate_variance_path(params, &z, &zb)?;
    let brownian = rng::derive_seed(seed, stream::BROWNIAN, 0);
    let log_price = simulate_log_price(params, &variance, &z, &zb, brownian, opts)?;
    Ok(SimulatedPath {
        z,
        zb,
        variance,
        log_price,
    })
}

/// The classical model for `seed`, sharing the base-subordinator and
/// Brownian streams with [`simulate`].
pub fn simulate_classical_seeded(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
    opts: &LogPriceOptions,
) -> Result<(JumpPath, VariancePath, LogPricePath)> {
    params.validate()?;
    let mut rng = rng::rng_for(seed, stream::BASE_SUBORDINATOR, 0);
    let z = levy::sample_with(&params.base, params.lambda, grid, &mut rng)?;
    let brownian = rng::derive_seed(seed, stream::BROWNIAN, 0);
    let (v, x) = simulate_classical(params, &z, brownian, opts)?;
    Ok((z, v, x))
}

fn sample_drivers(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
) -> Result<(JumpPath, JumpPath)> {
    let mut rz = rng::rng_for(seed, stream::BASE_SUBORDINATOR, 0);
    let mut rzb = rng::rng_for(seed, stream::STRONG_SUBORDINATOR, 0);
    let z = levy::sample_with(&params.base, params.lambda, grid, &mut rz)?;
    let zb = levy::sample_with(&params.strong, params.lambda, grid, &mut rzb)?;
    Ok((z, zb))
}

/// Noise seed paired with a path seed.
pub fn noise_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, stream::NOISE, 0)
}

/// `n` paths in parallel; path `i` uses the seed derived from
/// `(master_seed, i)`.
pub fn simulate_ensemble(
    params: &ModelParams,
    grid: &TimeGrid,
    master_seed: u64,
    n: usize,
    opts: &LogPriceOptions,
) -> Result<Vec<SimulatedPath>> {
    (0..n)
        .into_par_iter()
        .map(|i| simulate(params, grid, path_seed(master_seed, i), opts))
        .collect()
}

/// Seed of path `index` in an ensemble.
pub fn path_seed(master_seed: u64, index: usize) -> u64 {
    rng::derive_seed(master_seed, stream::PATH, index as u64)
}

/// Tabular form of a path for CSV export and import.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    pub t: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub x_true: Vec<f64>,
    pub x_observed: Option<Vec<f64>>,
    pub noise: Option<Vec<f64>>,
}

pub const PATH_CSV_HEADER: [&str; 5] = ["t", "sigma_sq", "x_true", "x_observed", "noise"];

impl PathTable {
    pub fn from_paths(var: &VariancePath, price: &LogPricePath) -> Result<Self> {
        if var.grid() != price.grid() {
            return Err(Error::IncompatibleGrid);
        }
        Ok(Self {
            t: var.grid().times().collect(),
            sigma_sq: var.values().to_vec(),
            x_true: price.x_true().to_vec(),
            x_observed: price.x_observed.clone(),
            noise: price.noise.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Writes `t,sigma_sq,x_true,x_observed,noise`, one row per grid point.
    /// Values use Rust's shortest round-trip float formatting; absent
    /// columns are left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PATH_CSV_HEADER)?;
        let opt = |v: &Option<Vec<f64>>, k: usize| {
            v.as_ref()
                .map(|v| format!("{:?}", v[k]))
                .unwrap_or_default()
        };
        for k in 0..self.len() {
            w.write_record([
                format!("{:?}", self.t[k]),
                format!("{:?}", self.sigma_sq[k]),
                format!("{:?}", self.x_true[k]),
                opt(&self.x_observed, k),
                opt(&self.noise, k),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().ne(PATH_CSV_HEADER) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {}", PATH_CSV_HEADER.join(",")),
            });
        }
        let mut table = PathTable {
            t: Vec::new(),
            sigma_sq: Vec::new(),
            x_true: Vec::new(),
            x_observed: Some(Vec::new()),
            noise: Some(Vec::new()),
        };
        let mut observed_present = true;
        let mut noise_present = true;
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let num = |j: usize| -> Result<f64> {
                rec.get(j)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|e| Error::Parse {
                        line,
                        message: format!("column {j}: {e}"),
                    })
            };
            table.t.push(num(0)?);
            table.sigma_sq.push(num(1)?);
            table.x_true.push(num(2)?);
            if rec.get(3).unwrap_or("").is_empty() {
                observed_present = false;
            } else if let Some(v) = table.x_observed.as_mut() {
                v.push(num(3)?);
            }
            if rec.get(4).unwrap_or("").is_empty() {
                noise_present = false;
            } else if let Some(v) = table.noise.as_mut() {
                v.push(num(4)?);
            }
        }
        if !observed_present {
            table.x_observed = None;
        }
        if !noise_present {
            table.noise = None;
        }
        if table.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Ordering {
                line: 0,
                message: "t must increase".into(),
            });
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpEvent;

    fn params() -> ModelParams {
        ModelParams {
            mu: 0.0,
            beta: 0.0,
            rho: 0.0,
            lambda: 1.0,
            theta: 0.0,
            sigma0_sq: 1.0,
            base: SubordinatorSpec {
                intensity: 1.0,
                jump_rate: 1.0,
            },
            strong: SubordinatorSpec {
                intensity: 2.0,
                jump_rate: 1.0,
            },
        }
    }

    fn grid() -> TimeGrid {
        TimeGrid::over(1.0, 100).unwrap()
    }

    fn single(grid: TimeGrid, time: f64, size: f64) -> JumpPath {
        JumpPath::from_events(grid, vec![JumpEvent { time, size }]).unwrap()
    }

    #[test]
    fn validates_params() {
        assert!(params().validate().is_ok());
        assert!(ModelParams {
            rho: 0.1,
            ..params()
        }
        .validate()
        .is_err());
        assert!(ModelParams {
            theta: 1.5,
            ..params()
        }
        .validate()
        .is_err());
        assert!(ModelParams {
            lambda: 0.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(ModelParams {
            sigma0_sq: 0.0,
            ..params()
        }
        .validate()
        .is_err());
        let weak_strong = ModelParams {
            strong: SubordinatorSpec {
                intensity: 0.5,
                jump_rate: 1.0,
            },
            ..params()
        };
        assert!(weak_strong.validate().is_err());
    }

    #[test]
    fn jump_free_variance_decays() {
        let g = grid();
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&params(), &empty, &empty).unwrap();
        for (k, t) in g.times().enumerate() {
            assert!((v.values()[k] - (-t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_base_jump_closed_form() {
        let g = grid();
        let z = single(g, 0.5, 2.0);
        let v = simulate_variance_path(&params(), &z, &JumpPath::empty(g)).unwrap();
        let expected = (-1.0f64).exp() + 2.0 * (-0.5f64).exp();
        assert!((v.values()[100] - expected).abs() < 1e-12);
    }

    #[test]
    fn theta_one_ignores_base_path() {
        let g = grid();
        let p = params().with_theta(1.0);
        let zb = single(g, 0.25, 1.5);
        let a = simulate_variance_path(&p, &single(g, 0.5, 2.0), &zb).unwrap();
        let b = simulate_variance_path(&p, &single(g, 0.7, 9.0), &zb).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = JumpPath::empty(grid());
        let b = JumpPath::empty(TimeGrid::over(1.0, 50).unwrap());
        assert!(matches!(
            simulate_variance_path(&params(), &a, &b),
            Err(Error::IncompatibleGrid)
        ));
    }

    #[test]
    fn all_drivers_off_stays_flat() {
        let g = grid();
        let p = ModelParams {
            sigma0_sq: 1e-12,
            ..params()
        };
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&p, &empty, &empty).unwrap();
        let x = simulate_log_price(&p, &v, &empty, &empty, 3, &LogPriceOptions::default()).unwrap();
        assert!(x.x_true().iter().all(|x| x.abs() < 1e-4));
    }

    #[test]
    fn pure_drift_reaches_horizon() {
        let g = grid();
        let p = ModelParams {
            mu: 1.0,
            ..params()
        };
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&p, &empty, &empty).unwrap();
        let opts = LogPriceOptions {
            diffusion: false,
            ..Default::default()
        };
        let x = simulate_log_price(&p, &v, &empty, &empty, 3, &opts).unwrap();
        assert!((x.x_true()[100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strong_jump_moves_price_down() {
        let g = grid();
        let p = ModelParams {
            rho: -1.0,
            theta: 1.0,
            ..params()
        };
        let zb = single(g, 0.355, 0.8);
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&p, &empty, &zb).unwrap();
        let opts = LogPriceOptions {
            drift: false,
            diffusion: false,
            s0: 1.0,
        };
        let x = simulate_log_price(&p, &v, &empty, &zb, 3, &opts).unwrap();
        // τ = 0.355 falls in (t_35, t_36].
        assert_eq!(x.x_true()[35], 0.0);
        assert_eq!(x.x_true()[36], -0.8);
        assert_eq!(x.x_true()[100], -0.8);
    }

    #[test]
    fn overflow_is_reported() {
        let g = TimeGrid::over(1000.0, 10).unwrap();
        let p = ModelParams {
            mu: 1e308,
            ..params()
        };
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&p, &empty, &empty).unwrap();
        let r = simulate_log_price(&p, &v, &empty, &empty, 3, &LogPriceOptions::default());
        assert!(matches!(r, Err(Error::NumericOverflow { .. })));
    }

    #[test]
    fn noise_contract() {
        let g = TimeGrid::over(1.0, 1000).unwrap();
        let path = simulate(&ModelParams::default(), &g, 5, &LogPriceOptions::default()).unwrap();
        let clean = apply_noise(&path.log_price, &NoiseSpec { std: 0.0 }, 1).unwrap();
        assert_eq!(clean.x_observed().unwrap(), clean.x_true());
        let a = apply_noise(&path.log_price, &NoiseSpec { std: 0.01 }, 9).unwrap();
        let b = apply_noise(&path.log_price, &NoiseSpec { std: 0.01 }, 9).unwrap();
        assert_eq!(a.noise(), b.noise());
        assert!(apply_noise(&path.log_price, &NoiseSpec { std: -1.0 }, 9).is_err());
    }

    #[test]
    fn price_identities() {
        let g = TimeGrid::over(1.0, 4).unwrap();
        let flat = LogPricePath {
            grid: g,
            s0: 100.0,
            x_true: vec![0.0; 5],
            x_observed: None,
            noise: None,
        };
        assert!(price_series(&flat, false)
            .unwrap()
            .iter()
            .all(|&p| p == 100.0));
        assert!(matches!(
            price_series(&flat, true),
            Err(Error::MissingSeries(_))
        ));
        let doubled = LogPricePath {
            x_true: vec![2f64.ln(); 5],
            ..flat
        };
        for p in price_series(&doubled, false).unwrap() {
            assert!((p - 200.0).abs() < 1e-12);
        }
        let noisy = apply_noise(&doubled, &NoiseSpec { std: 0.05 }, 4).unwrap();
        let rebuilt = price_series(&noisy, true).unwrap();
        for (a, b) in rebuilt.iter().zip(price_series(&noisy, false).unwrap()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn variance_rate_substitution() {
        let p = params();
        assert_eq!(instantaneous_variance_rate(&p, 0.3), 0.3);
        // Var[Z_1] = 2 for ν = a = 1.
        let p = ModelParams {
            rho: -1.0,
            lambda: 2.0,
            theta: 0.0,
            ..params()
        };
        assert!((instantaneous_variance_rate(&p, 0.3) - 4.3).abs() < 1e-12);
        // Var[Z^(b)_1] = 1 for ν = a = 2.
        let p = ModelParams {
            rho: -1.0,
            lambda: 1.0,
            theta: 1.0,
            strong: SubordinatorSpec {
                intensity: 2.0,
                jump_rate: 2.0,
            },
            ..params()
        };
        assert!((instantaneous_variance_rate(&p, 0.3) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn integral_of_constant() {
        let g = grid();
        let p = ModelParams {
            lambda: 1e-14,
            ..params()
        };
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&p, &empty, &empty).unwrap();
        assert!((v.integrated(1.0) - 1.0).abs() < 1e-12);
        assert!((v.integrated(0.505) - 0.505).abs() < 1e-12);
        assert_eq!(v.integrated(0.0), 0.0);
    }

    #[test]
    fn correlation_without_jumps_is_sqrt_ratio() {
        let g = TimeGrid::over(2.0, 200).unwrap();
        let p = ModelParams {
            lambda: 1e-14,
            ..params()
        };
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&p, &empty, &empty).unwrap();
        let c = correlation_classical(&v, &empty, &p, 2.0, 0.5).unwrap();
        assert!((c - (0.5f64 / 2.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn correlation_domain() {
        let g = grid();
        let empty = JumpPath::empty(g);
        let v = simulate_variance_path(&params(), &empty, &empty).unwrap();
        assert!(matches!(
            correlation_classical(&v, &empty, &params(), 0.5, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(correlation_generalized(&v, &empty, &empty, &params(), 0.4, 0.5).is_err());
        assert!(correlation_generalized(&v, &empty, &empty, &params(), 1.5, 0.5).is_err());
    }

    #[test]
    fn correlation_decreases_in_t() {
        let g = TimeGrid::over(5.0, 500).unwrap();
        let p = ModelParams {
            rho: -0.7,
            ..ModelParams::default()
        };
        let path = simulate(&p, &g, 21, &LogPriceOptions::default()).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=40 {
            let t = 1.0 + 0.1 * k as f64;
            let c = correlation_classical(&path.variance, &path.z, &p, t, 1.0).unwrap();
            assert!(c < last);
            last = c;
        }
    }

    #[test]
    fn generalized_theta_one_uses_strong_measure_only() {
        let g = TimeGrid::over(2.0, 200).unwrap();
        let p = ModelParams {
            rho: -1.0,
            ..ModelParams::default()
        }
        .with_theta(1.0);
        let path = simulate(&p, &g, 8, &LogPriceOptions::default()).unwrap();
        let c = correlation_generalized(&path.variance, &path.z, &path.zb, &p, 2.0, 1.0).unwrap();
        let other_z = single(g, 0.5, 7.0);
        let c2 = correlation_generalized(&path.variance, &other_z, &path.zb, &p, 2.0, 1.0).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn path_csv_round_trip() {
        let g = TimeGrid::over(1.0, 20).unwrap();
        let path = simulate(&ModelParams::default(), &g, 2, &LogPriceOptions::default()).unwrap();
        let noisy = apply_noise(&path.log_price, &NoiseSpec { std: 0.001 }, 3).unwrap();
        for price in [&path.log_price, &noisy] {
            let table = PathTable::from_paths(&path.variance, price).unwrap();
            let mut buf = Vec::new();
            table.write_csv(&mut buf).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert!(text.starts_with("t,sigma_sq,x_true,x_observed,noise\n"));
            assert_eq!(PathTable::read_csv(buf.as_slice()).unwrap(), table);
        }
    }
}
